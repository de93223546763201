#include <doctest.h>

#include <cmath>

#include "treecast/tree_geometry.hpp"

using namespace treecast;

TEST_CASE("leaf index to path examples") {
    TreeShape shape(2, 3);
    CHECK(leaf_index_to_path(1, shape) == LeafPath{1, 1, 1});
    CHECK(leaf_index_to_path(8, shape) == LeafPath{2, 2, 2});
    CHECK(leaf_index_to_path(4, shape) == LeafPath{1, 2, 2});
    CHECK_THROWS_AS(leaf_index_to_path(0, shape), std::out_of_range);
    CHECK_THROWS_AS(leaf_index_to_path(9, shape), std::out_of_range);
}

TEST_CASE("path and index round-trip on every leaf, lexicographic order") {
    for (auto [d, h] : {std::pair{2, 12}, {3, 7}, {4, 6}, {5, 5}}) {
        TreeShape shape(d, h);
        REQUIRE(shape.leaf_count() <= 4096);
        LeafPath prev;
        for (std::uint64_t i = 1; i <= shape.leaf_count(); ++i) {
            LeafPath path = leaf_index_to_path(i, shape);
            CHECK(path_to_leaf_index(path, shape) == i);
            if (i > 1) CHECK(prev < path);
            prev = path;
        }
    }
}

namespace {
int brute_lca_height(std::uint64_t a, std::uint64_t b, const TreeShape& shape) {
    LeafPath pa = leaf_index_to_path(a, shape);
    LeafPath pb = leaf_index_to_path(b, shape);
    int common = 0;
    while (common < shape.h && pa[common] == pb[common]) ++common;
    return shape.h - common;
}
}  // namespace

TEST_CASE("adjacent lca height examples and brute force") {
    TreeShape shape(2, 3);
    CHECK(adjacent_lca_height(4, shape) == 3);
    CHECK(adjacent_lca_height(1, shape) == 1);
    CHECK(adjacent_lca_height(2, shape) == 2);
    CHECK_THROWS_AS(adjacent_lca_height(8, shape), std::out_of_range);

    for (auto [d, h] : {std::pair{2, 12}, {3, 7}, {4, 5}}) {
        TreeShape s(d, h);
        for (std::uint64_t i = 1; i < s.leaf_count(); ++i)
            CHECK(adjacent_lca_height(i, s) == brute_lca_height(i, i + 1, s));
    }
}

TEST_CASE("lca distance counts") {
    CHECK(lca_distance_counts(TreeShape(2, 2)) == std::vector<std::uint64_t>{1, 1, 2});
    CHECK(lca_distance_counts(TreeShape(3, 1)) == std::vector<std::uint64_t>{1, 2});
    CHECK(lca_distance_counts(TreeShape(3, 8))[8] == 4374);

    for (auto [d, h] : {std::pair{2, 5}, {3, 4}}) {
        TreeShape s(d, h);
        auto counts = lca_distance_counts(s);
        std::uint64_t total = 0;
        for (auto c : counts) total += c;
        CHECK(total == s.leaf_count());
        // brute force: distances from leaf 1 to every leaf
        std::vector<std::uint64_t> brute(h + 1, 0);
        for (std::uint64_t j = 1; j <= s.leaf_count(); ++j)
            ++brute[j == 1 ? 0 : brute_lca_height(1, j, s)];
        CHECK(counts == brute);
    }
}

TEST_CASE("adjacent subtree height distribution") {
    auto d22 = adjacent_subtree_height_dist(2, 2);
    CHECK(d22.probability(1) == doctest::Approx(2.0 / 3));
    CHECK(d22.probability(2) == doctest::Approx(1.0 / 3));
    auto d21 = adjacent_subtree_height_dist(2, 1);
    CHECK(d21.probability(1) == doctest::Approx(1.0));
    auto d32 = adjacent_subtree_height_dist(3, 2);
    CHECK(d32.probability(1) == doctest::Approx(6.0 / 8));
    CHECK(d32.probability(2) == doctest::Approx(2.0 / 8));
    CHECK_THROWS_AS(adjacent_subtree_height_dist(2, 0), std::invalid_argument);

    // matches full enumeration of adjacent_lca_height, sums to one
    for (auto [d, m] : {std::pair{2, 6}, {3, 4}, {4, 3}}) {
        TreeShape s(d, m);
        auto dist = adjacent_subtree_height_dist(d, m);
        std::vector<std::uint64_t> freq(m + 1, 0);
        for (std::uint64_t i = 1; i < s.leaf_count(); ++i) ++freq[adjacent_lca_height(i, s)];
        double sum = 0.0;
        for (int h = 1; h <= m; ++h) {
            CHECK(dist.counts[h - 1] == freq[h]);
            CHECK(dist.probability(h) >= 0.0);
            sum += dist.probability(h);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("alpha and its large-gap limit") {
    CHECK(alpha(2, 0.5, 2) == doctest::Approx(0.1875));
    CHECK(alpha(3, 0.0, 4) == doctest::Approx(0.0));
    CHECK(alpha_star(3, 0.9) == doctest::Approx(0.54 / 0.73));

    // monotone (decreasing from rho^2) convergence with the geometric tail bound
    for (double rho : {0.5, 0.9}) {
        for (int d : {2, 3}) {
            double star = alpha_star(d, rho);
            double prev = 2.0;
            for (int m = 1; m <= 12; ++m) {
                double a = alpha(d, rho, m);
                CHECK(a <= prev + 1e-15);
                CHECK(std::abs(a - star) <= rho * rho * std::pow(1.0 / d, m - 1) + 1e-12);
                prev = a;
            }
        }
    }
}
