#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "treecast/broadcast.hpp"
#include "treecast/channel.hpp"
#include "treecast/rng.hpp"
#include "treecast/token.hpp"
#include "treecast/tree_geometry.hpp"

namespace treecast {

// Root-to-cursor path of (symbol, child index) pairs. Pair i stores the value
// at level i-1 together with the child index chosen at level i; the empty
// stack is the initial and final state. Stack length is h - h0.
struct MemoryState {
    std::vector<std::pair<Symbol, int>> stack;

    bool empty() const { return stack.empty(); }
    int length() const { return static_cast<int>(stack.size()); }

    void validate(const TreeShape& shape, const Channel& channel) const {
        if (length() > shape.h) throw std::invalid_argument("MemoryState: stack deeper than tree");
        for (const auto& [sym, idx] : stack) {
            if (sym >= channel.alphabet_size())
                throw std::invalid_argument("MemoryState: symbol outside alphabet");
            if (idx < 1 || idx > shape.d)
                throw std::invalid_argument("MemoryState: child index outside [d]");
        }
        for (int i = 0; i + 1 < length(); ++i)
            if (channel.transition(stack[i].first, stack[i + 1].first) <= 0.0)
                throw std::invalid_argument("MemoryState: impossible parent/child pair");
    }
};

// The value provider abstracts where node values come from: an rng-backed
// provider samples through the channel (the real sampler), a tree-backed one
// replays a fully labeled tree (deterministic memory chains, debug traces).
// Signature: Symbol provider(const LeafPath& path, const Symbol* parent).
// parent == nullptr means the root (sample from the prior).

// One transition of the token-level memory chain. Dispatches on h0 = h -
// stack length: extend a sibling leaf, emit punctuation / refresh on
// saturated indices, or resample a fresh downward path.
template <class Provider>
Token reason_step(MemoryState& state, const TreeShape& shape, Provider&& next_value) {
    const int h = shape.h;
    const int d = shape.d;
    if (h < 1) throw std::invalid_argument("reason_step: height must be >= 1");
    if (state.length() > h) throw std::invalid_argument("reason_step: malformed stack");
    const int h0 = h - state.length();

    auto path_of_stack = [&](int upto) {
        LeafPath path;
        path.reserve(upto);
        for (int i = 0; i < upto; ++i) path.push_back(state.stack[i].second);
        return path;
    };

    if (h0 == h) {
        // Fresh tree: sample the root and the leftmost path, emit its leaf.
        LeafPath path;
        Symbol parent = next_value(path, nullptr);
        for (int level = 1; level <= h; ++level) {
            path.push_back(1);
            Symbol v = next_value(path, &parent);
            if (level < h) {
                state.stack.emplace_back(parent, 1);
                parent = v;
            } else {
                state.stack.emplace_back(parent, 1);
                return Token::value(v);
            }
        }
    }

    if (h0 == 0) {
        auto& [leaf_parent, r_h] = state.stack.back();
        if (r_h < d) {
            ++r_h;
            LeafPath path = path_of_stack(h);
            return Token::value(next_value(path, &leaf_parent));
        }
        // All siblings emitted: pop to the deepest unsaturated level.
        int j = 0;
        for (int i = h - 1; i >= 1; --i) {
            if (state.stack[i - 1].second < d) {
                j = i;
                break;
            }
        }
        if (j == 0) {
            state.stack.clear();
            return Token::refresh();
        }
        state.stack.resize(j);
        return Token::punct(h - j);
    }

    // 0 < h0 < h: advance the cursor at level h - h0 and grow a fresh path.
    auto& [sigma_m, r_m] = state.stack.back();
    ++r_m;
    LeafPath path = path_of_stack(state.length());
    Symbol parent = sigma_m;
    for (int level = state.length(); level < h; ++level) {
        Symbol v = next_value(path, &parent);
        state.stack.emplace_back(v, 1);
        path.push_back(1);
        parent = v;
    }
    return Token::value(next_value(path, &parent));
}

struct ReasonTraceEntry {
    LeafPath path;
    Symbol value;
};

struct ReasonDocument {
    std::vector<Token> tokens;        // L value/punctuation tokens + trailing refresh
    std::vector<MemoryState> states;  // M_0..M_{L+1} when recorded
    std::vector<ReasonTraceEntry> trace;
};

template <class Provider>
ReasonDocument reason_document(const TreeShape& shape, const Channel& channel,
                               Provider&& next_value, bool record_states = false,
                               bool record_trace = false) {
    ReasonDocument doc;
    if (shape.h == 0) {
        // Single-node language: one value token, then refresh.
        LeafPath path;
        Symbol v = next_value(path, nullptr);
        doc.tokens.push_back(Token::value(v));
        doc.tokens.push_back(Token::refresh());
        if (record_states) doc.states.assign(3, MemoryState{});
        if (record_trace) doc.trace.push_back({path, v});
        return doc;
    }
    MemoryState state;
    auto provider = [&](const LeafPath& path, const Symbol* parent) {
        Symbol v = next_value(path, parent);
        if (record_trace) doc.trace.push_back({path, v});
        return v;
    };
    if (record_states) doc.states.push_back(state);
    for (;;) {
        Token tok = reason_step(state, shape, provider);
        doc.tokens.push_back(tok);
        if (record_states) doc.states.push_back(state);
        if (tok.kind == Token::Kind::Refresh) break;
    }
    (void)channel;
    return doc;
}

// The exact log-memory sampler: DFS of a fresh broadcast tree, every node
// value drawn once through the channel.
inline ReasonDocument reason_sample(const TreeShape& shape, const Channel& channel, Rng& rng,
                                    bool record_states = false, bool record_trace = false) {
    auto provider = [&](const LeafPath&, const Symbol* parent) {
        return parent ? channel.sample_transition(*parent, rng) : channel.sample_prior(rng);
    };
    return reason_document(shape, channel, provider, record_states, record_trace);
}

/// Deterministic replay over a fully labeled tree; used to build the memory
/// chain M_0..M_{L+1} for reasoning corpora and for debug reconstruction.
inline ReasonDocument reason_replay(const LabeledTree& tree, const Channel& channel,
                                    bool record_states = true) {
    auto provider = [&](const LeafPath& path, const Symbol*) { return tree.value_at_path(path); };
    return reason_document(tree.shape(), channel, provider, record_states, false);
}

}  // namespace treecast
