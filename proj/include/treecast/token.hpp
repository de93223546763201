#pragma once

#include <cstdint>

#include "treecast/channel.hpp"

namespace treecast {

/// A token of the hierarchical-punctuation stream: a leaf value, a level-i
/// subtree delimiter p_i, or the context-refresh document separator.
struct Token {
    enum class Kind : std::uint8_t { Value, Punct, Refresh };

    Kind kind;
    // Value: symbol id; Punct: punctuation level in {1..h-1}; Refresh: unused.
    int payload;

    static Token value(Symbol s) { return {Kind::Value, static_cast<int>(s)}; }
    static Token punct(int level) { return {Kind::Punct, level}; }
    static Token refresh() { return {Kind::Refresh, 0}; }

    bool operator==(const Token& other) const = default;
};

}  // namespace treecast
