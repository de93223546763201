#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "treecast/tree_geometry.hpp"

namespace treecast {

// Moments M(k) = E[(sum of leaf spins)^k | root = +1] of the Ising broadcast
// tree, for k = 1..4 at every height 0..h. Even moments equal the
// unconditional ones by spin symmetry, so Var(sum) = M(2) and the excess
// kurtosis of the sum is M(4)/M(2)^2 - 3.
struct MomentTable {
    int d;
    double rho;
    int h;
    // m[k-1][height]
    std::vector<std::vector<double>> m;

    double moment(int k, int height) const { return m.at(k - 1).at(height); }
    // Excess kurtosis of the leaf-sum fluctuation around its conditional
    // mean: central moments given the root symbol.
    double excess_kurtosis(int height) const {
        double m1 = moment(1, height);
        double m2 = moment(2, height);
        double m3 = moment(3, height);
        double m4 = moment(4, height);
        double mu2 = m2 - m1 * m1;
        double mu4 = m4 - 4.0 * m3 * m1 + 6.0 * m2 * m1 * m1 - 3.0 * m1 * m1 * m1 * m1;
        return mu4 / (mu2 * mu2) - 3.0;
    }
};

// Level recurrences over the d child subtree sums S_1..S_d, conditionally
// independent given the root. Conditioning propagates as E[S^k | +] =
// rho^{k mod 2} M(k), so odd moments pick up one factor of rho per child.
inline MomentTable true_moments(int d, double rho, int h) {
    if (d < 2) throw std::invalid_argument("true_moments: d must be >= 2");
    if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("true_moments: rho outside [0,1]");
    if (h < 0) throw std::invalid_argument("true_moments: height must be >= 0");
    MomentTable table{d, rho, h, std::vector<std::vector<double>>(4, std::vector<double>(h + 1))};
    for (int k = 0; k < 4; ++k) table.m[k][0] = 1.0;
    const double dd = d;
    for (int level = 1; level <= h; ++level) {
        double m1 = table.m[0][level - 1];
        double m2 = table.m[1][level - 1];
        double m3 = table.m[2][level - 1];
        double m4 = table.m[3][level - 1];
        table.m[0][level] = dd * rho * m1;
        table.m[1][level] = dd * m2 + dd * (dd - 1) * rho * rho * m1 * m1;
        table.m[2][level] = dd * rho * m3 + 3 * dd * (dd - 1) * rho * m2 * m1 +
                            dd * (dd - 1) * (dd - 2) * rho * rho * rho * m1 * m1 * m1;
        table.m[3][level] = dd * m4 + 4 * dd * (dd - 1) * rho * rho * m3 * m1 +
                            3 * dd * (dd - 1) * m2 * m2 +
                            6 * dd * (dd - 1) * (dd - 2) * rho * rho * m2 * m1 * m1 +
                            dd * (dd - 1) * (dd - 2) * (dd - 3) * std::pow(rho, 4) * m1 * m1 * m1 *
                                m1;
    }
    return table;
}

/// Closed sum for the second moment: d^h + d^h (1 - 1/d) sum_{l=1}^h (d rho^2)^l.
/// Compensated summation; cross-checks the recurrence.
inline double second_moment_closed(int d, double rho, int h) {
    double dr2 = d * rho * rho;
    double sum = 0.0, comp = 0.0, pw = 1.0;
    for (int l = 1; l <= h; ++l) {
        pw *= dr2;
        double y = pw - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    double dh = std::pow(static_cast<double>(d), h);
    return dh + dh * (1.0 - 1.0 / d) * sum;
}

/// Above-threshold limit constants of the normalized moments.
struct MomentConstants {
    double c2, c3, c4;
    double alpha_star;
};

inline MomentConstants moment_constants(int d, double rho) {
    double dr2 = d * rho * rho;
    if (dr2 <= 1.0)
        throw std::invalid_argument(
            "moment_constants: d*rho^2 must exceed 1 (constants diverge at the threshold)");
    double dd = d;
    double c2 = (1.0 - 1.0 / dd) * dr2 / (dr2 - 1.0);
    double dr = dd * rho;
    double c3 = (3.0 * (dd - 1) * c2 + dr * dr * (1.0 - 1.0 / dd) * (1.0 - 2.0 / dd)) /
                (dr * dr - 1.0);
    double c4 = (4.0 * (dd - 1) * rho * rho * c3 + 3.0 * (dd - 1) * c2 * c2 +
                 6.0 * (dd - 1) * (dd - 2) * rho * rho * c2 +
                 (dd - 1) * (dd - 2) * (dd - 3) * std::pow(rho, 4)) /
                (dd * dd * dd * std::pow(rho, 4) - 1.0);
    return {c2, c3, c4, alpha_star(d, rho)};
}

/// Variance-limit intercept A2 = C2 + 2 alpha* / (1 - alpha* q), with the
/// measured reconstruction advantage q in place of its limit.
inline double a2_constant(int d, double rho, double q_hat) {
    MomentConstants c = moment_constants(d, rho);
    if (c.alpha_star * q_hat >= 1.0)
        throw std::invalid_argument("a2_constant: alpha* * q must be < 1");
    return c.c2 + 2.0 * c.alpha_star / (1.0 - c.alpha_star * q_hat);
}

/// First-order (delta method) standard error of A2 given SE(q_hat).
inline double a2_std_error(int d, double rho, double q_hat, double q_se) {
    double as = alpha_star(d, rho);
    double denom = 1.0 - as * q_hat;
    return 2.0 * as * as / (denom * denom) * q_se;
}

inline double a4_constant(int d, double rho, double q_hat) {
    double a2 = a2_constant(d, rho, q_hat);
    return 3.0 * a2 * a2;
}

struct VariancePrediction {
    double finite_variance;          // Var(sum of all d^h leaves) at finite (h, w)
    double asymptote_log_normalized; // w log(d rho^2) + log A2
};

// Bounded-context variance of the full leaf sum: n blocks of d^w leaves with
// block sums Z_1..Z_n, n = d^{h-w}. Var = n M2(w) + 2 sum_{i<j} E[Z_i Z_j]
// with E[Z_i Z_{i+j}] = M1(w)^2 alpha (alpha q_w)^{j-1}, giving the exact
// pair sum 2 M1(w)^2 alpha sum_{s=1}^{n-1} (n - s)(alpha q)^{s-1}.
inline VariancePrediction ar_variance_prediction(int d, double rho, int h, int w, double q_hat) {
    if (w < 0 || w >= h)
        throw std::invalid_argument("ar_variance_prediction: need 0 <= w < h");
    if (q_hat < 0.0 || q_hat > 1.0)
        throw std::invalid_argument("ar_variance_prediction: q must be in [0,1]");
    double a = alpha(d, rho, h - w);
    if (a * q_hat >= 1.0)
        throw std::invalid_argument("ar_variance_prediction: alpha * q must be < 1");
    MomentTable table = true_moments(d, rho, w);
    double m1 = table.moment(1, w);
    double m2 = table.moment(2, w);
    double n = std::pow(static_cast<double>(d), h - w);
    // sum_{s=1}^{n-1} (n - s) r^{s-1} with r = alpha q, evaluated in closed
    // form: n (1 - r^{n-1})/(1 - r) - (1 - n r^{n-1} + (n-1) r^n)/(1 - r)^2,
    // except r near 1 where the direct sum is used.
    double r = a * q_hat;
    double pair_sum;
    std::uint64_t n_int = TreeShape::pow_u64(d, h - w);
    if (n_int <= (1u << 20)) {
        double sum = 0.0, comp = 0.0, pw = 1.0;
        for (std::uint64_t s = 1; s < n_int; ++s) {
            double y = (n - static_cast<double>(s)) * pw - comp;
            double t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            pw *= r;
        }
        pair_sum = sum;
    } else {
        double one_minus = 1.0 - r;
        double rn1 = std::pow(r, static_cast<double>(n_int - 1));
        pair_sum = n * (1.0 - rn1) / one_minus -
                   (1.0 - n * rn1 + (n - 1.0) * rn1 * r) / (one_minus * one_minus);
    }
    double finite = n * m2 + 2.0 * m1 * m1 * a * pair_sum;
    double asym = w * std::log(d * rho * rho) + std::log(a2_constant(d, rho, q_hat));
    return {finite, asym};
}

/// Gaussian limit of the bounded-context leaf sum: excess kurtosis 0
/// (A4 / A2^2 = 3 identically).
inline double ar_excess_kurtosis_prediction() { return 0.0; }

}  // namespace treecast
