#include <doctest.h>

#include <cmath>

#include "treecast/broadcast.hpp"
#include "treecast/validity.hpp"

using namespace treecast;

namespace {

// Exhaustive reference: try every internal assignment and check properness.
bool brute_consistent(const LeafSequence& leaves, const TreeShape& shape, int q) {
    std::uint64_t nodes = shape.node_count();
    std::uint64_t internal = nodes - shape.leaf_count();
    std::vector<std::uint64_t> parent(nodes, 0);
    std::uint64_t off = 0, size = 1;
    for (int level = 1; level <= shape.h; ++level) {
        std::uint64_t child_off = off + size;
        for (std::uint64_t p = 0; p < size; ++p)
            for (int c = 0; c < shape.d; ++c) parent[child_off + p * shape.d + c] = off + p;
        off = child_off;
        size *= static_cast<std::uint64_t>(shape.d);
    }
    std::vector<int> values(nodes);
    for (std::uint64_t i = 0; i < leaves.size(); ++i) values[internal + i] = leaves[i];
    std::vector<int> digits(internal, 0);
    for (;;) {
        for (std::uint64_t i = 0; i < internal; ++i) values[i] = digits[i];
        bool proper = true;
        for (std::uint64_t i = 1; i < nodes && proper; ++i)
            proper = values[i] != values[parent[i]];
        if (proper) return true;
        std::uint64_t i = 0;
        while (i < internal && ++digits[i] == q) digits[i++] = 0;
        if (i == internal) return false;
    }
}

bool proper_coloring(const std::vector<Symbol>& values, const TreeShape& shape) {
    std::uint64_t off = 0, size = 1;
    for (int level = 1; level <= shape.h; ++level) {
        std::uint64_t child_off = off + size;
        for (std::uint64_t p = 0; p < size; ++p)
            for (int c = 0; c < shape.d; ++c)
                if (values[child_off + p * shape.d + c] == values[off + p]) return false;
        off = child_off;
        size *= static_cast<std::uint64_t>(shape.d);
    }
    return true;
}

}  // namespace

TEST_CASE("hand-checked single-level cases") {
    TreeShape shape(3, 1);
    // three distinct colors exhaust q = 3, no root color remains
    CHECK(!is_consistent({0, 1, 2}, shape, 3).consistent);
    // colors {1, 2} leave color 3 for the root
    ConsistencyResult r = is_consistent({0, 0, 1}, shape, 3, true);
    CHECK(r.consistent);
    REQUIRE(r.witness.has_value());
    CHECK((*r.witness)[0] == 2);
    CHECK(proper_coloring(*r.witness, shape));

    CHECK(feasible_root_masks({0, 0, 1}, shape, 3)[0] == (1ULL << 2));
    CHECK(feasible_root_masks({0, 1, 2}, shape, 3)[0] == 0);
}

TEST_CASE("decision procedure agrees with exhaustive search") {
    for (auto [d, h, q] : {std::tuple{2, 2, 3}, {2, 2, 4}, {3, 1, 3}, {2, 3, 3}}) {
        TreeShape shape(d, h);
        std::uint64_t leaves = shape.leaf_count();
        std::vector<int> digits(leaves, 0);
        for (;;) {
            LeafSequence assignment(leaves);
            for (std::uint64_t i = 0; i < leaves; ++i)
                assignment[i] = static_cast<Symbol>(digits[i]);
            ConsistencyResult r = is_consistent(assignment, shape, q, true);
            CHECK(r.consistent == brute_consistent(assignment, shape, q));
            if (r.consistent) {
                REQUIRE(r.witness.has_value());
                const auto& w = *r.witness;
                CHECK(proper_coloring(w, shape));
                // the witness keeps the prescribed leaves
                for (std::uint64_t i = 0; i < leaves; ++i)
                    CHECK(w[shape.node_count() - leaves + i] == assignment[i]);
            }
            std::uint64_t i = 0;
            while (i < leaves && ++digits[i] == q) digits[i++] = 0;
            if (i == leaves) break;
        }
    }
}

TEST_CASE("broadcast samples are always consistent") {
    Rng rng(41);
    for (auto [d, h, q] : {std::tuple{2, 4, 3}, {3, 3, 4}}) {
        TreeShape shape(d, h);
        Channel ch = Channel::coloring(q);
        for (int i = 0; i < 200; ++i) {
            LeafSequence leaves = sample_leaves(shape, ch, std::nullopt, rng);
            CHECK(is_consistent(leaves, shape, q).consistent);
        }
    }
}

TEST_CASE("freeze fraction matches the sibling-disagreement probability") {
    // q = 3, h = 1, d = 2: the posterior is a point mass iff the two leaves
    // differ, which happens with probability 1/2
    Rng rng(42);
    TreeShape shape(2, 1);
    Channel ch = Channel::coloring(3);
    const int n = 20000;
    std::vector<LeafSequence> samples(n);
    for (auto& s : samples) s = sample_leaves(shape, ch, std::nullopt, rng);
    double frac = freeze_fraction(samples, shape, ch);
    CHECK(std::abs(frac - 0.5) < 3 * std::sqrt(0.25 / n));

    CHECK_THROWS_AS(freeze_fraction(samples, shape, Channel::ising(0.5)), std::invalid_argument);
}

TEST_CASE("input validation") {
    TreeShape shape(2, 1);
    CHECK_THROWS_AS(is_consistent({0, 1, 2}, shape, 3), std::invalid_argument);  // wrong count
    CHECK_THROWS_AS(is_consistent({0, 3}, shape, 3), std::invalid_argument);     // color >= q
    CHECK_THROWS_AS(is_consistent({0, 1}, shape, 1), std::invalid_argument);
    CHECK_THROWS_AS(is_consistent({0, 1}, shape, 65), std::invalid_argument);
    CHECK_THROWS_AS(feasible_root_masks({0, 1, 2}, shape, 3), std::invalid_argument);
}
