#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace treecast {

/// Complete d-ary tree of height h. Leaves are 1-based, indexed 1..d^h.
struct TreeShape {
    int d;
    int h;

    TreeShape(int branching, int height) : d(branching), h(height) {
        if (d < 2) throw std::invalid_argument("TreeShape: branching factor must be >= 2");
        if (h < 0) throw std::invalid_argument("TreeShape: height must be >= 0");
        // d^h must fit in the index range; checked by repeated multiplication.
        std::uint64_t n = 1;
        for (int i = 0; i < h; ++i) {
            if (n > std::numeric_limits<std::uint64_t>::max() / 4 / static_cast<std::uint64_t>(d))
                throw std::invalid_argument("TreeShape: d^h overflows index range");
            n *= static_cast<std::uint64_t>(d);
        }
    }

    std::uint64_t leaf_count() const { return pow_u64(d, h); }

    /// Nodes at all levels 0..h: (d^{h+1}-1)/(d-1).
    std::uint64_t node_count() const {
        return (pow_u64(d, h + 1) - 1) / static_cast<std::uint64_t>(d - 1);
    }

    static std::uint64_t pow_u64(int base, int exp) {
        std::uint64_t r = 1;
        for (int i = 0; i < exp; ++i) r *= static_cast<std::uint64_t>(base);
        return r;
    }
};

/// Root-first child indices in [d]; length equals the node's level.
using LeafPath = std::vector<int>;

/// Maps a 1-based leaf index to its root-first path (mixed-radix, digits+1).
inline LeafPath leaf_index_to_path(std::uint64_t index, const TreeShape& shape) {
    std::uint64_t n = shape.leaf_count();
    if (index < 1 || index > n)
        throw std::out_of_range("leaf_index_to_path: index " + std::to_string(index) +
                                " outside 1.." + std::to_string(n));
    LeafPath path(shape.h);
    std::uint64_t rem = index - 1;
    for (int i = shape.h - 1; i >= 0; --i) {
        path[i] = static_cast<int>(rem % shape.d) + 1;
        rem /= shape.d;
    }
    return path;
}

inline std::uint64_t path_to_leaf_index(const LeafPath& path, const TreeShape& shape) {
    if (static_cast<int>(path.size()) != shape.h)
        throw std::invalid_argument("path_to_leaf_index: path length does not match height");
    std::uint64_t index = 0;
    for (int c : path) {
        if (c < 1 || c > shape.d)
            throw std::invalid_argument("path_to_leaf_index: component outside [d]");
        index = index * shape.d + static_cast<std::uint64_t>(c - 1);
    }
    return index + 1;
}

// Height of the least common ancestor of leaves (index, index+1):
// 1 + number of trailing components equal to d in the path of index.
inline int adjacent_lca_height(std::uint64_t index, const TreeShape& shape) {
    std::uint64_t n = shape.leaf_count();
    if (index < 1 || index >= n)
        throw std::out_of_range("adjacent_lca_height: leaf " + std::to_string(index) +
                                " has no right neighbor in 1.." + std::to_string(n));
    std::uint64_t rem = index - 1;
    int trailing = 0;
    while (trailing < shape.h && rem % shape.d == static_cast<std::uint64_t>(shape.d - 1)) {
        ++trailing;
        rem /= shape.d;
    }
    return trailing + 1;
}

/// counts[k] = number of leaves whose LCA with a fixed leaf is at distance k.
inline std::vector<std::uint64_t> lca_distance_counts(const TreeShape& shape) {
    std::vector<std::uint64_t> counts(shape.h + 1);
    counts[0] = 1;
    for (int k = 1; k <= shape.h; ++k)
        counts[k] = TreeShape::pow_u64(shape.d, k) - TreeShape::pow_u64(shape.d, k - 1);
    return counts;
}

/// Distribution over heights {1..m}; counts are exact, probabilities derived.
struct HeightDistribution {
    std::vector<std::uint64_t> counts;  // counts[s-1] for height s
    std::uint64_t total = 0;

    double probability(int s) const {
        return static_cast<double>(counts[s - 1]) / static_cast<double>(total);
    }
    int max_height() const { return static_cast<int>(counts.size()); }
};

// Law of adjacent_lca_height over all d^m - 1 adjacent pairs in the depth-m
// tree: exactly s-1 trailing d's happens for d^{m-s}(d-1) indices.
inline HeightDistribution adjacent_subtree_height_dist(int d, int m) {
    if (d < 2) throw std::invalid_argument("adjacent_subtree_height_dist: d must be >= 2");
    if (m < 1) throw std::invalid_argument("adjacent_subtree_height_dist: gap m must be >= 1");
    HeightDistribution dist;
    dist.counts.resize(m);
    for (int s = 1; s <= m; ++s)
        dist.counts[s - 1] = TreeShape::pow_u64(d, m - s) * static_cast<std::uint64_t>(d - 1);
    dist.total = TreeShape::pow_u64(d, m) - 1;
    return dist;
}

/// Expected surviving signal E[rho^{2s}] over the adjacent-pair height law.
inline double alpha(int d, double rho, int m) {
    HeightDistribution dist = adjacent_subtree_height_dist(d, m);
    double r2 = rho * rho;
    double value = 0.0;
    double pw = 1.0;
    for (int s = 1; s <= m; ++s) {
        pw *= r2;
        value += dist.probability(s) * pw;
    }
    return value;
}

// Large-gap limit under the trailing-run law P(s) = (1/d)^{s-1} (1 - 1/d):
// alpha* = rho^2 (1 - 1/d) / (1 - rho^2/d).
inline double alpha_star(int d, double rho) {
    double r2 = rho * rho;
    return r2 * (1.0 - 1.0 / d) / (1.0 - r2 / d);
}

}  // namespace treecast
