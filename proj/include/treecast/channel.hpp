#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "treecast/rng.hpp"

namespace treecast {

using Symbol = std::uint8_t;

/// Transition kernel on a finite alphabet with its stationary prior.
/// Ising: {-1,+1} stored as ids {0,1}; coloring: [q] stored as ids {0..q-1}.
class Channel {
public:
    enum class Kind { Ising, Coloring, Dense };

    static Channel ising(double rho) {
        if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("Channel: rho outside [0,1]");
        Channel c;
        c.kind_ = Kind::Ising;
        c.n_ = 2;
        c.rho_ = rho;
        double same = (1.0 + rho) / 2.0;
        c.rows_ = {same, 1.0 - same, 1.0 - same, same};
        c.prior_ = {0.5, 0.5};
        return c;
    }

    static Channel coloring(int q) {
        if (q < 2) throw std::invalid_argument("Channel: need at least 2 colors");
        Channel c;
        c.kind_ = Kind::Coloring;
        c.n_ = q;
        c.q_ = q;
        c.rows_.assign(static_cast<std::size_t>(q) * q, 1.0 / (q - 1));
        for (int i = 0; i < q; ++i) c.rows_[static_cast<std::size_t>(i) * q + i] = 0.0;
        c.prior_.assign(q, 1.0 / q);
        return c;
    }

    /// Dense kernel; prior computed as the left fixed point by power iteration.
    static Channel dense(int n, std::vector<double> rows) {
        if (n < 1 || rows.size() != static_cast<std::size_t>(n) * n)
            throw std::invalid_argument("Channel: dense kernel dimension mismatch");
        Channel c;
        c.kind_ = Kind::Dense;
        c.n_ = n;
        c.rows_ = std::move(rows);
        for (int i = 0; i < n; ++i) {
            double row_sum = 0.0;
            for (int j = 0; j < n; ++j) row_sum += c.rows_[static_cast<std::size_t>(i) * n + j];
            if (std::abs(row_sum - 1.0) > 1e-12)
                throw std::invalid_argument("Channel: row " + std::to_string(i) +
                                            " does not sum to 1");
        }
        c.prior_ = c.left_fixed_point();
        return c;
    }

    Kind kind() const { return kind_; }
    int alphabet_size() const { return n_; }
    double rho() const { return rho_; }
    int colors() const { return q_; }
    const std::vector<double>& prior() const { return prior_; }

    double transition(int from, int to) const {
        return rows_[static_cast<std::size_t>(from) * n_ + to];
    }

    Symbol sample_prior(Rng& rng) const {
        if (kind_ != Kind::Dense) return static_cast<Symbol>(rng.uniform_int(n_));
        return sample_row(prior_, rng);
    }

    Symbol sample_transition(Symbol parent, Rng& rng) const {
        switch (kind_) {
            case Kind::Ising:
                if (rng.bernoulli(rho_)) return parent;
                return static_cast<Symbol>(rng.uniform_int(2));
            case Kind::Coloring: {
                std::uint64_t r = rng.uniform_int(q_ - 1);
                return static_cast<Symbol>(r >= parent ? r + 1 : r);
            }
            case Kind::Dense: {
                double u = rng.uniform();
                double acc = 0.0;
                for (int j = 0; j + 1 < n_; ++j) {
                    acc += transition(parent, j);
                    if (u < acc) return static_cast<Symbol>(j);
                }
                return static_cast<Symbol>(n_ - 1);
            }
        }
        return 0;
    }

    /// Exact m-step kernel. Ising and coloring use the eigenvalue closed forms;
    /// dense kernels use exponentiation by squaring.
    Channel power(int m) const {
        if (m < 0) throw std::invalid_argument("Channel::power: negative step count");
        std::vector<double> out(static_cast<std::size_t>(n_) * n_, 0.0);
        switch (kind_) {
            case Kind::Ising: {
                double same = (1.0 + std::pow(rho_, m)) / 2.0;
                out = {same, 1.0 - same, 1.0 - same, same};
                break;
            }
            case Kind::Coloring: {
                double ev = std::pow(-1.0 / (q_ - 1), m);
                double same = 1.0 / q_ + (static_cast<double>(q_ - 1) / q_) * ev;
                double other = 1.0 / q_ - (1.0 / q_) * ev;
                for (int i = 0; i < n_; ++i)
                    for (int j = 0; j < n_; ++j)
                        out[static_cast<std::size_t>(i) * n_ + j] = (i == j) ? same : other;
                break;
            }
            case Kind::Dense: {
                out = matrix_power(rows_, n_, m);
                break;
            }
        }
        Channel c;
        c.kind_ = Kind::Dense;
        c.n_ = n_;
        c.rows_ = std::move(out);
        c.prior_ = prior_;
        return c;
    }

    /// Stationary prior. Errors out when the left fixed point is ambiguous.
    std::vector<double> stationary() const {
        if (kind_ != Kind::Dense) return prior_;
        return left_fixed_point();
    }

    /// Name of symbol id for external rendering (-1/+1 for Ising, 1..q else).
    std::string symbol_name(Symbol s) const {
        if (kind_ == Kind::Ising) return s == 0 ? "-1" : "1";
        return std::to_string(static_cast<int>(s) + 1);
    }

    /// External integer rendering of a symbol id.
    int symbol_value(Symbol s) const {
        if (kind_ == Kind::Ising) return s == 0 ? -1 : 1;
        return static_cast<int>(s) + 1;
    }

    /// Spin value +-1 of an Ising symbol id.
    static int spin(Symbol s) { return s == 0 ? -1 : 1; }

private:
    Channel() = default;

    static Symbol sample_row(const std::vector<double>& row, Rng& rng) {
        double u = rng.uniform();
        double acc = 0.0;
        for (std::size_t j = 0; j + 1 < row.size(); ++j) {
            acc += row[j];
            if (u < acc) return static_cast<Symbol>(j);
        }
        return static_cast<Symbol>(row.size() - 1);
    }

    static std::vector<double> matrix_multiply(const std::vector<double>& a,
                                               const std::vector<double>& b, int n) {
        std::vector<double> c(static_cast<std::size_t>(n) * n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) {
                double aik = a[static_cast<std::size_t>(i) * n + k];
                if (aik == 0.0) continue;
                for (int j = 0; j < n; ++j)
                    c[static_cast<std::size_t>(i) * n + j] +=
                        aik * b[static_cast<std::size_t>(k) * n + j];
            }
        return c;
    }

    static std::vector<double> matrix_power(std::vector<double> base, int n, int m) {
        std::vector<double> result(static_cast<std::size_t>(n) * n, 0.0);
        for (int i = 0; i < n; ++i) result[static_cast<std::size_t>(i) * n + i] = 1.0;
        while (m > 0) {
            if (m & 1) result = matrix_multiply(result, base, n);
            base = matrix_multiply(base, base, n);
            m >>= 1;
        }
        return result;
    }

    std::vector<double> left_fixed_point() const {
        std::vector<double> pi(n_, 1.0 / n_);
        for (int iter = 0; iter < 100000; ++iter) {
            std::vector<double> next(n_, 0.0);
            for (int i = 0; i < n_; ++i)
                for (int j = 0; j < n_; ++j)
                    next[j] += pi[i] * transition(i, j);
            double diff = 0.0;
            for (int j = 0; j < n_; ++j) diff += std::abs(next[j] - pi[j]);
            pi = std::move(next);
            if (diff < 1e-14) {
                // Restart from a perturbed point to detect ambiguity.
                std::vector<double> probe(n_, 0.0);
                probe[0] = 1.0;
                for (int k = 0; k < 100000; ++k) {
                    std::vector<double> nx(n_, 0.0);
                    for (int i = 0; i < n_; ++i)
                        for (int j = 0; j < n_; ++j)
                            nx[j] += probe[i] * transition(i, j);
                    double pd = 0.0;
                    for (int j = 0; j < n_; ++j) pd += std::abs(nx[j] - probe[j]);
                    probe = std::move(nx);
                    if (pd < 1e-14) break;
                }
                double sep = 0.0;
                for (int j = 0; j < n_; ++j) sep += std::abs(probe[j] - pi[j]);
                if (sep > 1e-10)
                    throw std::runtime_error("Channel: ambiguous stationary distribution");
                return pi;
            }
        }
        throw std::runtime_error("Channel: stationary distribution did not converge");
    }

    Kind kind_ = Kind::Dense;
    int n_ = 0;
    double rho_ = 0.0;
    int q_ = 0;
    std::vector<double> rows_;
    std::vector<double> prior_;
};

}  // namespace treecast
