#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "treecast/broadcast.hpp"
#include "treecast/posterior.hpp"
#include "treecast/tree_geometry.hpp"

namespace treecast {

// Bottom-up feasible-color sets for extending a leaf coloring to a proper
// coloring of the full tree. Color c is feasible at an internal node iff
// every child has a feasible color different from c.
//
// Bitmask width caps q at 64.
inline std::vector<std::uint64_t> feasible_root_masks(const LeafSequence& leaves,
                                                      const TreeShape& shape, int q) {
    if (q < 2 || q > 64) throw std::invalid_argument("feasible sets: q must be in 2..64");
    if (leaves.size() != shape.leaf_count())
        throw std::invalid_argument("feasible sets: leaf count does not match shape");
    std::vector<std::uint64_t> masks(leaves.size());
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (leaves[i] >= q) throw std::invalid_argument("feasible sets: color outside [q]");
        masks[i] = 1ULL << leaves[i];
    }
    for (int level = shape.h; level > 0; --level) {
        std::uint64_t parent_size = masks.size() / static_cast<std::uint64_t>(shape.d);
        std::vector<std::uint64_t> up(parent_size, 0);
        for (std::uint64_t p = 0; p < parent_size; ++p) {
            std::uint64_t mask = 0;
            for (int c = 0; c < q; ++c) {
                bool ok = true;
                for (int k = 0; k < shape.d; ++k) {
                    std::uint64_t child = masks[p * shape.d + k];
                    if ((child & ~(1ULL << c)) == 0) {
                        ok = false;
                        break;
                    }
                }
                if (ok) mask |= 1ULL << c;
            }
            up[p] = mask;
        }
        masks = std::move(up);
    }
    return masks;  // single root mask
}

struct ConsistencyResult {
    bool consistent;
    // Witness proper coloring, level-major over all nodes, when requested.
    std::optional<std::vector<Symbol>> witness;
};

/// Decides whether the leaves extend to a proper q-coloring of the tree.
inline ConsistencyResult is_consistent(const LeafSequence& leaves, const TreeShape& shape, int q,
                                       bool want_witness = false) {
    if (q < 2 || q > 64) throw std::invalid_argument("is_consistent: q must be in 2..64");
    // Keep per-level masks when a witness is requested.
    std::vector<std::vector<std::uint64_t>> levels;
    std::vector<std::uint64_t> masks(leaves.size());
    if (leaves.size() != shape.leaf_count())
        throw std::invalid_argument("is_consistent: leaf count does not match shape");
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (leaves[i] >= q) throw std::invalid_argument("is_consistent: color outside [q]");
        masks[i] = 1ULL << leaves[i];
    }
    levels.push_back(masks);
    for (int level = shape.h; level > 0; --level) {
        std::uint64_t parent_size = masks.size() / static_cast<std::uint64_t>(shape.d);
        std::vector<std::uint64_t> up(parent_size, 0);
        for (std::uint64_t p = 0; p < parent_size; ++p) {
            std::uint64_t mask = 0;
            for (int c = 0; c < q; ++c) {
                bool ok = true;
                for (int k = 0; k < shape.d; ++k)
                    if ((masks[p * shape.d + k] & ~(1ULL << c)) == 0) {
                        ok = false;
                        break;
                    }
                if (ok) mask |= 1ULL << c;
            }
            up[p] = mask;
        }
        masks = std::move(up);
        levels.push_back(masks);
    }
    ConsistencyResult result{masks[0] != 0, std::nullopt};
    if (!result.consistent || !want_witness) return result;

    // Top-down: pick any feasible color distinct from the parent's.
    std::vector<Symbol> witness(shape.node_count());
    auto pick = [](std::uint64_t mask, int avoid) {
        for (int c = 0; c < 64; ++c)
            if (c != avoid && (mask & (1ULL << c))) return c;
        return -1;
    };
    witness[0] = static_cast<Symbol>(pick(levels[shape.h][0], -1));
    std::uint64_t off = 0, size = 1;
    for (int level = 1; level <= shape.h; ++level) {
        const auto& child_masks = levels[shape.h - level];
        std::uint64_t child_off = off + size;
        for (std::uint64_t p = 0; p < size; ++p) {
            int parent_color = witness[off + p];
            for (int k = 0; k < shape.d; ++k) {
                std::uint64_t idx = p * shape.d + k;
                int c = pick(child_masks[idx], parent_color);
                witness[child_off + idx] = static_cast<Symbol>(c);
            }
        }
        off = child_off;
        size *= static_cast<std::uint64_t>(shape.d);
    }
    result.witness = std::move(witness);
    return result;
}

/// Fraction of samples whose root posterior is a point mass (frozen):
/// max posterior mass exceeds 1 - 1e-9.
inline double freeze_fraction(const std::vector<LeafSequence>& samples, const TreeShape& shape,
                              const Channel& channel) {
    if (channel.kind() != Channel::Kind::Coloring)
        throw std::invalid_argument("freeze_fraction: coloring channel required");
    if (samples.empty()) return 0.0;
    std::size_t frozen = 0;
    for (const auto& leaves : samples) {
        PosteriorDist post = root_posterior(leaves, shape, channel);
        double max_mass = 0.0;
        for (double p : post) max_mass = std::max(max_mass, p);
        if (max_mass > 1.0 - 1e-9) ++frozen;
    }
    return static_cast<double>(frozen) / static_cast<double>(samples.size());
}

}  // namespace treecast
