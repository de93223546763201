#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "treecast/broadcast.hpp"
#include "treecast/channel.hpp"
#include "treecast/reasoning.hpp"
#include "treecast/token.hpp"
#include "treecast/tree_geometry.hpp"

namespace treecast {

/// Tokenized document length L = d^{h-1}(d+1) - 1 (a single token at h = 0).
inline std::uint64_t document_length(const TreeShape& shape) {
    if (shape.h == 0) return 1;
    return TreeShape::pow_u64(shape.d, shape.h - 1) * static_cast<std::uint64_t>(shape.d + 1) - 1;
}

// Mixed-radix decomposition of a 1-based token position:
// m = r0 + (d+1) * sum_i (r_i - 1) d^{i-1}, 0 <= r0 <= d, r_i in [d].
struct TokenPosition {
    int r0;                   // 0 marks a punctuation slot
    std::vector<int> digits;  // r_1..r_{h-1}

    int zeta() const {
        int z = 1;
        while (z <= static_cast<int>(digits.size()) && digits[z - 1] == 1) ++z;
        // max{i : r_j = 1 for all 1 <= j < i}; the scan stops at the first
        // non-one digit, which is exactly that maximum.
        return z > static_cast<int>(digits.size()) ? static_cast<int>(digits.size()) : z;
    }
};

inline TokenPosition decompose_position(std::uint64_t m, const TreeShape& shape) {
    TokenPosition pos;
    std::uint64_t k;
    if (m % static_cast<std::uint64_t>(shape.d + 1) == 0) {
        pos.r0 = 0;
        k = m / static_cast<std::uint64_t>(shape.d + 1);
    } else {
        pos.r0 = static_cast<int>(m % static_cast<std::uint64_t>(shape.d + 1));
        k = m / static_cast<std::uint64_t>(shape.d + 1);
    }
    pos.digits.resize(shape.h >= 1 ? shape.h - 1 : 0);
    for (int i = 0; i < static_cast<int>(pos.digits.size()); ++i) {
        pos.digits[i] = static_cast<int>(k % shape.d) + 1;
        k /= shape.d;
    }
    return pos;
}

/// Leaf index (1-based) addressed by a value position: path (r_{h-1},...,r_0).
inline std::uint64_t position_leaf_index(const TokenPosition& pos, const TreeShape& shape) {
    LeafPath path;
    path.reserve(shape.h);
    for (int i = static_cast<int>(pos.digits.size()) - 1; i >= 0; --i)
        path.push_back(pos.digits[i]);
    path.push_back(pos.r0);
    return path_to_leaf_index(path, shape);
}

// Hierarchical-punctuation tokenization: value tokens in leaf order with a
// level-zeta(m) delimiter after every d values.
inline std::vector<Token> tokenize(const LeafSequence& leaves, const TreeShape& shape) {
    if (leaves.size() != shape.leaf_count())
        throw std::invalid_argument("tokenize: leaf count does not match shape");
    std::vector<Token> out;
    std::uint64_t L = document_length(shape);
    out.reserve(L);
    if (shape.h == 0) {
        out.push_back(Token::value(leaves[0]));
        return out;
    }
    for (std::uint64_t m = 1; m <= L; ++m) {
        TokenPosition pos = decompose_position(m, shape);
        if (pos.r0 >= 1)
            out.push_back(Token::value(leaves[position_leaf_index(pos, shape) - 1]));
        else
            out.push_back(Token::punct(pos.zeta()));
    }
    return out;
}

struct TokenStreamError : std::runtime_error {
    std::uint64_t position;  // 1-based offending token position (0 = length error)
    TokenStreamError(std::uint64_t pos, const std::string& what)
        : std::runtime_error(what), position(pos) {}
};

/// Inverse of tokenize; validates punctuation placement and levels.
inline LeafSequence detokenize(const std::vector<Token>& tokens, const TreeShape& shape) {
    std::uint64_t L = document_length(shape);
    if (tokens.size() != L)
        throw TokenStreamError(0, "detokenize: expected " + std::to_string(L) + " tokens, got " +
                                      std::to_string(tokens.size()));
    LeafSequence leaves(shape.leaf_count());
    if (shape.h == 0) {
        if (tokens[0].kind != Token::Kind::Value)
            throw TokenStreamError(1, "detokenize: value token expected at position 1");
        leaves[0] = static_cast<Symbol>(tokens[0].payload);
        return leaves;
    }
    for (std::uint64_t m = 1; m <= L; ++m) {
        TokenPosition pos = decompose_position(m, shape);
        const Token& tok = tokens[m - 1];
        if (pos.r0 >= 1) {
            if (tok.kind != Token::Kind::Value)
                throw TokenStreamError(m, "detokenize: value token expected at position " +
                                              std::to_string(m));
            leaves[position_leaf_index(pos, shape) - 1] = static_cast<Symbol>(tok.payload);
        } else {
            if (tok.kind != Token::Kind::Punct)
                throw TokenStreamError(m, "detokenize: punctuation expected at position " +
                                              std::to_string(m));
            if (tok.payload != pos.zeta())
                throw TokenStreamError(
                    m, "detokenize: punctuation level " + std::to_string(tok.payload) +
                           " at position " + std::to_string(m) + ", expected p" +
                           std::to_string(pos.zeta()));
        }
    }
    return leaves;
}

// Dense token-id vocabulary. Ranges, in order: value tokens, punctuation
// p_1..p_{h-1}, context refresh, memory symbols, memory child indices 1..d,
// padding, memory start, memory end. Memory symbols reuse the alphabet but
// live in a disjoint id range.
class TokenVocab {
public:
    TokenVocab(const TreeShape& shape, const Channel& channel)
        : d_(shape.d), h_(shape.h), n_(channel.alphabet_size()) {
        for (int s = 0; s < n_; ++s)
            names_.push_back(channel.symbol_name(static_cast<Symbol>(s)));
        for (int i = 1; i <= h_ - 1; ++i) names_.push_back("p" + std::to_string(i));
        names_.push_back("<refresh>");
        for (int s = 0; s < n_; ++s)
            names_.push_back("m:" + channel.symbol_name(static_cast<Symbol>(s)));
        for (int c = 1; c <= d_; ++c) names_.push_back("i" + std::to_string(c));
        names_.push_back("<pad>");
        names_.push_back("<mem_start>");
        names_.push_back("<mem_end>");
    }

    int size() const { return static_cast<int>(names_.size()); }
    const std::string& name(int id) const { return names_.at(id); }

    int value_id(Symbol s) const { return static_cast<int>(s); }
    int punct_id(int level) const { return n_ + level - 1; }
    int refresh_id() const { return n_ + (h_ - 1); }
    int memory_symbol_id(Symbol s) const { return refresh_id() + 1 + static_cast<int>(s); }
    int memory_index_id(int child) const { return refresh_id() + 1 + n_ + (child - 1); }
    int padding_id() const { return refresh_id() + 1 + n_ + d_; }
    int memory_start_id() const { return padding_id() + 1; }
    int memory_end_id() const { return padding_id() + 2; }

    int id_of(const Token& tok) const {
        switch (tok.kind) {
            case Token::Kind::Value: return value_id(static_cast<Symbol>(tok.payload));
            case Token::Kind::Punct: return punct_id(tok.payload);
            case Token::Kind::Refresh: return refresh_id();
        }
        return -1;
    }

    /// Fixed-width serialization of a memory state: start, 2h slots, end.
    std::vector<int> serialize_memory_state(const MemoryState& state) const {
        std::vector<int> out;
        out.reserve(2 + 2 * h_);
        out.push_back(memory_start_id());
        for (const auto& [sym, idx] : state.stack) {
            out.push_back(memory_symbol_id(sym));
            out.push_back(memory_index_id(idx));
        }
        for (int i = state.length(); i < h_; ++i) {
            out.push_back(padding_id());
            out.push_back(padding_id());
        }
        out.push_back(memory_end_id());
        return out;
    }

private:
    int d_, h_, n_;
    std::vector<std::string> names_;
};

}  // namespace treecast
