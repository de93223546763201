#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "treecast/broadcast.hpp"
#include "treecast/channel.hpp"
#include "treecast/rng.hpp"
#include "treecast/tree_geometry.hpp"

namespace treecast {

/// Probabilities over the alphabet; nonnegative, sums to 1.
using PosteriorDist = std::vector<double>;

// Exact P(root | leaves) by upward sum-product on the complete tree.
// Leaf message = indicator of the observed symbol; internal message(s) =
// prod_children sum_{s'} transition(s, s') child(s'). Messages are
// renormalized per node to avoid underflow.
inline PosteriorDist root_posterior(const LeafSequence& leaves, const TreeShape& shape,
                                    const Channel& channel) {
    const int n = channel.alphabet_size();
    if (leaves.size() != shape.leaf_count())
        throw std::invalid_argument("root_posterior: leaf count does not match shape");
    for (Symbol s : leaves)
        if (s >= n) throw std::invalid_argument("root_posterior: symbol outside alphabet");

    // messages[node * n + s], one level at a time
    std::vector<double> msgs(leaves.size() * static_cast<std::size_t>(n), 0.0);
    for (std::size_t i = 0; i < leaves.size(); ++i) msgs[i * n + leaves[i]] = 1.0;

    std::uint64_t level_size = shape.leaf_count();
    for (int level = shape.h; level > 0; --level) {
        std::uint64_t parent_size = level_size / static_cast<std::uint64_t>(shape.d);
        std::vector<double> up(parent_size * static_cast<std::size_t>(n));
        for (std::uint64_t p = 0; p < parent_size; ++p) {
            double norm = 0.0;
            for (int s = 0; s < n; ++s) {
                double prod = 1.0;
                for (int c = 0; c < shape.d; ++c) {
                    const double* child = &msgs[(p * shape.d + c) * static_cast<std::uint64_t>(n)];
                    double sum = 0.0;
                    for (int t = 0; t < n; ++t) sum += channel.transition(s, t) * child[t];
                    prod *= sum;
                }
                up[p * n + s] = prod;
                norm += prod;
            }
            if (norm > 0.0)
                for (int s = 0; s < n; ++s) up[p * n + s] /= norm;
        }
        msgs = std::move(up);
        level_size = parent_size;
    }

    PosteriorDist post(n);
    double norm = 0.0;
    for (int s = 0; s < n; ++s) {
        post[s] = channel.prior()[s] * msgs[s];
        norm += post[s];
    }
    if (norm <= 0.0) throw std::runtime_error("root_posterior: leaves have zero probability");
    for (int s = 0; s < n; ++s) post[s] /= norm;
    return post;
}

inline Symbol sample_root_from_posterior(const LeafSequence& leaves, const TreeShape& shape,
                                         const Channel& channel, Rng& rng) {
    PosteriorDist post = root_posterior(leaves, shape, channel);
    return static_cast<Symbol>(rng.discrete(post));
}

/// Whether a posterior is a point mass (freezing detector for coloring).
inline bool is_point_mass(const PosteriorDist& post, double eps = 1e-12) {
    int positive = 0;
    for (double p : post)
        if (p > eps) ++positive;
    return positive == 1;
}

struct QEstimate {
    double mean;
    double std_error;
    int n_samples;
};

// Monte Carlo estimate of q_w = E[E[X|Y]^2], the squared reconstruction
// advantage of the root from depth-w leaves (Ising only: magnetization
// m(Y) = P(+|Y) - P(-|Y)). Per-sample streams derived from (seed, index).
inline QEstimate estimate_q(int w, int d, const Channel& channel, int n_samples,
                            std::uint64_t seed) {
    if (channel.kind() != Channel::Kind::Ising)
        throw std::invalid_argument("estimate_q: Ising channel required");
    if (n_samples < 1) throw std::invalid_argument("estimate_q: need at least one sample");
    TreeShape shape(d, w);
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
        LeafSequence leaves = sample_leaves(shape, channel, std::nullopt, rng);
        PosteriorDist post = root_posterior(leaves, shape, channel);
        double m = post[1] - post[0];
        sum += m * m;
        sum_sq += m * m * m * m;
    }
    double mean = sum / n_samples;
    double var = n_samples > 1 ? (sum_sq - n_samples * mean * mean) / (n_samples - 1) : 0.0;
    if (var < 0.0) var = 0.0;
    return {mean, std::sqrt(var / n_samples), n_samples};
}

}  // namespace treecast
