#include <doctest.h>

#include <cmath>
#include <map>

#include "oracles.hpp"
#include "treecast/broadcast.hpp"

using namespace treecast;

TEST_CASE("deterministic copy channel fixes every node") {
    Rng rng(1);
    LabeledTree tree = sample_tree(TreeShape(2, 4), Channel::ising(1.0), Symbol{1}, rng);
    for (Symbol s : tree.all_values()) CHECK(s == 1);
}

TEST_CASE("full rerandomization gives centered iid leaves") {
    Rng rng(7);
    TreeShape shape(2, 10);
    Channel ch = Channel::ising(0.0);
    double total = 0.0;
    const int reps = 10000;
    for (int i = 0; i < reps; ++i) {
        double sum = 0.0;
        for (Symbol s : sample_leaves(shape, ch, std::nullopt, rng)) sum += Channel::spin(s);
        total += sum;
    }
    // Var(sum) = 1024, so SE of the mean over reps is sqrt(1024/reps).
    double se = std::sqrt(1024.0 / reps);
    CHECK(std::abs(total / reps) < 3 * se);
}

TEST_CASE("coloring trees never place a child on its parent color") {
    Rng rng(3);
    TreeShape shape(3, 3);
    Channel ch = Channel::coloring(3);
    for (int rep = 0; rep < 200; ++rep) {
        LabeledTree tree = sample_tree(shape, ch, std::nullopt, rng);
        for (int level = 1; level <= shape.h; ++level) {
            std::uint64_t size = TreeShape::pow_u64(shape.d, level);
            for (std::uint64_t pos = 0; pos < size; ++pos)
                CHECK(tree.value(level, pos) != tree.value(level - 1, pos / shape.d));
        }
    }
}

TEST_CASE("single-leaf marginal equals the prior") {
    Rng rng(11);
    TreeShape shape(2, 3);
    for (const Channel& ch : {Channel::ising(0.6), Channel::coloring(3)}) {
        const int n = 100000;
        std::vector<int> counts(ch.alphabet_size(), 0);
        for (int i = 0; i < n; ++i) ++counts[sample_leaves(shape, ch, std::nullopt, rng)[0]];
        for (int s = 0; s < ch.alphabet_size(); ++s) {
            double p = ch.prior()[s];
            double se = std::sqrt(p * (1 - p) / n);
            CHECK(std::abs(static_cast<double>(counts[s]) / n - p) < 3 * se);
        }
    }
}

TEST_CASE("leaf-tuple law matches exact enumeration (coloring q=3, d=2, h=2)") {
    TreeShape shape(2, 2);
    Channel ch = Channel::coloring(3);
    auto exact = oracles::exact_leaf_distribution(shape, ch);
    double mass = 0.0;
    for (const auto& [leaves, p] : exact) mass += p;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));

    Rng rng(13);
    const std::uint64_t n = 100000;
    std::map<LeafSequence, std::uint64_t> counts;
    for (std::uint64_t i = 0; i < n; ++i) ++counts[sample_leaves(shape, ch, std::nullopt, rng)];
    CHECK(oracles::tv_distance(counts, exact, n) < 0.02);
}

TEST_CASE("labeled tree indexing agrees with path lookup") {
    Rng rng(5);
    TreeShape shape(3, 3);
    LabeledTree tree = sample_tree(shape, Channel::ising(0.5), std::nullopt, rng);
    LeafSequence leaves = tree.leaves();
    for (std::uint64_t i = 1; i <= shape.leaf_count(); ++i)
        CHECK(tree.value_at_path(leaf_index_to_path(i, shape)) == leaves[i - 1]);
    CHECK(tree.value_at_path({}) == tree.root());
}

TEST_CASE("sample_leaves matches sample_tree on a shared stream") {
    TreeShape shape(3, 4);
    Channel ch = Channel::coloring(4);
    Rng r1(99), r2(99);
    CHECK(sample_tree(shape, ch, std::nullopt, r1).leaves() ==
          sample_leaves(shape, ch, std::nullopt, r2));
}
