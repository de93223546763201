#pragma once

#include <stdexcept>
#include <vector>

#include "treecast/broadcast.hpp"
#include "treecast/channel.hpp"
#include "treecast/posterior.hpp"
#include "treecast/rng.hpp"
#include "treecast/tree_geometry.hpp"

namespace treecast {

/// Bounded-context autoregressive configuration: full shape (d, h) plus the
/// context depth w of the subtrees generated per step.
struct ArConfig {
    TreeShape shape;
    int context_depth;
    Channel channel;

    ArConfig(const TreeShape& s, int w, const Channel& ch)
        : shape(s), context_depth(w), channel(ch) {
        if (w < 0 || w > s.h)
            throw std::invalid_argument("ArConfig: context depth must satisfy 0 <= w <= h");
        if (ch.kind() == Channel::Kind::Dense)
            throw std::invalid_argument(
                "ArConfig: dense kernels are not supported (the hop requires reversibility)");
    }
};

// One step of the bounded-context chain, via the equivalent Markov chain:
// resample the previous subtree root from its posterior, hop 2*h_r channel
// steps across the random-height least common ancestor, broadcast back down.
class ArSampler {
public:
    explicit ArSampler(const ArConfig& config)
        : config_(config),
          subtree_(config.shape.d, config.context_depth),
          gap_(config.shape.h - config.context_depth),
          height_dist_(gap_ >= 1 ? adjacent_subtree_height_dist(config.shape.d, gap_)
                                 : HeightDistribution{}) {
        for (int s = 1; s <= gap_; ++s) hop_powers_.push_back(config.channel.power(2 * s));
        for (int s = 1; s <= gap_; ++s) height_probs_.push_back(height_dist_.probability(s));
    }

    LeafSequence step(const LeafSequence& prev_leaves, Rng& rng) const {
        if (gap_ == 0)
            throw std::invalid_argument("ar_step: w = h leaves no hop; use sample_tree directly");
        if (prev_leaves.size() != subtree_.leaf_count())
            throw std::invalid_argument("ar_step: previous leaves do not match d^w");
        Symbol prev_root = sample_root_from_posterior(prev_leaves, subtree_, config_.channel, rng);
        int hop = rng.discrete(height_probs_) + 1;
        Symbol next_root = hop_powers_[hop - 1].sample_transition(prev_root, rng);
        return sample_leaves(subtree_, config_.channel, next_root, rng);
    }

    /// Full length-d^h sample: an initial true subtree followed by
    /// d^{h-w} - 1 bounded-context steps.
    LeafSequence sample(Rng& rng) const {
        if (gap_ == 0) return sample_leaves(config_.shape, config_.channel, std::nullopt, rng);
        LeafSequence block = sample_leaves(subtree_, config_.channel, std::nullopt, rng);
        std::uint64_t blocks = TreeShape::pow_u64(config_.shape.d, gap_);
        LeafSequence out;
        out.reserve(config_.shape.leaf_count());
        out.insert(out.end(), block.begin(), block.end());
        for (std::uint64_t r = 1; r < blocks; ++r) {
            block = step(block, rng);
            out.insert(out.end(), block.begin(), block.end());
        }
        return out;
    }

    const ArConfig& config() const { return config_; }
    std::uint64_t block_size() const { return subtree_.leaf_count(); }
    std::uint64_t block_count() const { return TreeShape::pow_u64(config_.shape.d, gap_); }

private:
    ArConfig config_;
    TreeShape subtree_;
    int gap_;
    HeightDistribution height_dist_;
    std::vector<double> height_probs_;
    std::vector<Channel> hop_powers_;
};

inline LeafSequence ar_step(const LeafSequence& prev_leaves, const ArConfig& config, Rng& rng) {
    return ArSampler(config).step(prev_leaves, rng);
}

inline LeafSequence ar_sample(const ArConfig& config, Rng& rng) {
    return ArSampler(config).sample(rng);
}

}  // namespace treecast
