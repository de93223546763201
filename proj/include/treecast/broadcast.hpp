#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "treecast/channel.hpp"
#include "treecast/rng.hpp"
#include "treecast/tree_geometry.hpp"

namespace treecast {

/// Ordered symbols at the leaves of a (sub)tree.
using LeafSequence = std::vector<Symbol>;

/// A fully sampled broadcast tree, values stored level-major (root first).
class LabeledTree {
public:
    LabeledTree(const TreeShape& shape, std::vector<Symbol> values)
        : shape_(shape), values_(std::move(values)) {}

    const TreeShape& shape() const { return shape_; }

    std::uint64_t level_offset(int level) const {
        return (TreeShape::pow_u64(shape_.d, level) - 1) /
               static_cast<std::uint64_t>(shape_.d - 1);
    }

    /// Value at (level, 0-based position within the level).
    Symbol value(int level, std::uint64_t pos) const { return values_[level_offset(level) + pos]; }

    Symbol root() const { return values_[0]; }

    /// Value at a root-first path prefix (empty = root).
    Symbol value_at_path(const std::vector<int>& path) const {
        std::uint64_t pos = 0;
        for (int c : path) pos = pos * shape_.d + static_cast<std::uint64_t>(c - 1);
        return value(static_cast<int>(path.size()), pos);
    }

    LeafSequence leaves() const {
        std::uint64_t off = level_offset(shape_.h);
        return LeafSequence(values_.begin() + off, values_.end());
    }

    const std::vector<Symbol>& all_values() const { return values_; }

private:
    TreeShape shape_;
    std::vector<Symbol> values_;
};

// Level-by-level sampling, children visited left to right, so that a fixed
// rng stream yields a reproducible tree.
inline LabeledTree sample_tree(const TreeShape& shape, const Channel& channel,
                               std::optional<Symbol> root, Rng& rng) {
    std::vector<Symbol> values(shape.node_count());
    values[0] = root ? *root : channel.sample_prior(rng);
    std::uint64_t parent_off = 0;
    std::uint64_t level_size = 1;
    for (int level = 1; level <= shape.h; ++level) {
        std::uint64_t child_off = parent_off + level_size;
        for (std::uint64_t p = 0; p < level_size; ++p) {
            Symbol parent_value = values[parent_off + p];
            for (int c = 0; c < shape.d; ++c)
                values[child_off + p * shape.d + c] =
                    channel.sample_transition(parent_value, rng);
        }
        parent_off = child_off;
        level_size *= static_cast<std::uint64_t>(shape.d);
    }
    return LabeledTree(shape, std::move(values));
}

/// Leaves only; avoids storing internal levels when the tree is not needed.
inline LeafSequence sample_leaves(const TreeShape& shape, const Channel& channel,
                                  std::optional<Symbol> root, Rng& rng) {
    std::vector<Symbol> level{root ? *root : channel.sample_prior(rng)};
    for (int l = 1; l <= shape.h; ++l) {
        std::vector<Symbol> next(level.size() * static_cast<std::size_t>(shape.d));
        for (std::size_t p = 0; p < level.size(); ++p)
            for (int c = 0; c < shape.d; ++c)
                next[p * shape.d + c] = channel.sample_transition(level[p], rng);
        level = std::move(next);
    }
    return level;
}

}  // namespace treecast
