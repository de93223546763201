#include <doctest.h>

#include <cmath>
#include <vector>

#include "treecast/channel.hpp"
#include "treecast/rng.hpp"

using namespace treecast;

TEST_CASE("ising and coloring kernel entries and priors") {
    Channel is = Channel::ising(0.8);
    CHECK(is.transition(0, 0) == doctest::Approx(0.9));
    CHECK(is.transition(0, 1) == doctest::Approx(0.1));
    CHECK(is.prior() == std::vector<double>{0.5, 0.5});
    CHECK(is.symbol_value(0) == -1);
    CHECK(is.symbol_value(1) == 1);

    Channel col = Channel::coloring(4);
    CHECK(col.transition(2, 2) == 0.0);
    CHECK(col.transition(2, 0) == doctest::Approx(1.0 / 3));
    for (double p : col.prior()) CHECK(p == doctest::Approx(0.25));
    CHECK(col.symbol_name(0) == "1");
}

TEST_CASE("dense kernel validation and stationary distribution") {
    CHECK_THROWS_AS(Channel::dense(2, {0.5, 0.6, 0.5, 0.5}), std::invalid_argument);

    // dense copy of coloring q=3 recovers the uniform prior
    Channel col = Channel::coloring(3);
    std::vector<double> rows;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) rows.push_back(col.transition(i, j));
    Channel dense = Channel::dense(3, rows);
    for (double p : dense.stationary()) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-10));

    // the identity kernel has no unique stationary distribution
    CHECK_THROWS_WITH_AS(Channel::dense(2, {1.0, 0.0, 0.0, 1.0}).stationary(),
                         "Channel: ambiguous stationary distribution", std::runtime_error);
}

TEST_CASE("channel powers: identity, closed forms, oracle products") {
    Channel is = Channel::ising(0.9);
    Channel col = Channel::coloring(3);

    for (const Channel* ch : {&is, &col}) {
        Channel id = ch->power(0);
        for (int i = 0; i < ch->alphabet_size(); ++i)
            for (int j = 0; j < ch->alphabet_size(); ++j)
                CHECK(id.transition(i, j) == doctest::Approx(i == j ? 1.0 : 0.0));
    }

    Channel col2 = col.power(2);
    CHECK(col2.transition(0, 0) == doctest::Approx(0.5));
    CHECK(col2.transition(0, 1) == doctest::Approx(0.25));
    Channel is2 = is.power(2);
    CHECK(is2.transition(0, 0) == doctest::Approx(0.905));

    // closed forms equal iterated matrix products
    for (const Channel* ch : {&is, &col}) {
        int n = ch->alphabet_size();
        std::vector<double> acc(static_cast<std::size_t>(n) * n, 0.0);
        for (int i = 0; i < n; ++i) acc[static_cast<std::size_t>(i) * n + i] = 1.0;
        for (int m = 1; m <= 32; ++m) {
            std::vector<double> next(static_cast<std::size_t>(n) * n, 0.0);
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < n; ++k)
                    for (int j = 0; j < n; ++j)
                        next[static_cast<std::size_t>(i) * n + j] +=
                            acc[static_cast<std::size_t>(i) * n + k] * ch->transition(k, j);
            acc = next;
            Channel pw = ch->power(m);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    CHECK(pw.transition(i, j) ==
                          doctest::Approx(acc[static_cast<std::size_t>(i) * n + j])
                              .epsilon(1e-12));
        }
    }

    // semigroup property
    for (const Channel* ch : {&is, &col}) {
        int n = ch->alphabet_size();
        for (int a : {1, 3, 7, 16})
            for (int b : {1, 2, 16}) {
                Channel pa = ch->power(a), pb = ch->power(b), pab = ch->power(a + b);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        double prod = 0.0;
                        for (int k = 0; k < n; ++k)
                            prod += pa.transition(i, k) * pb.transition(k, j);
                        CHECK(pab.transition(i, j) == doctest::Approx(prod).epsilon(1e-12));
                    }
            }
    }
}

TEST_CASE("sampling frequencies match the kernel") {
    Rng rng(2024);
    Channel is = Channel::ising(0.7);
    int n = 100000, same = 0;
    for (int i = 0; i < n; ++i) same += is.sample_transition(1, rng) == 1;
    double p = (1.0 + 0.7) / 2.0;
    double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(static_cast<double>(same) / n - p) < 3 * se);

    Channel col = Channel::coloring(5);
    std::vector<int> counts(5, 0);
    for (int i = 0; i < n; ++i) ++counts[col.sample_transition(2, rng)];
    CHECK(counts[2] == 0);
    for (int c : {0, 1, 3, 4}) {
        double freq = static_cast<double>(counts[c]) / n;
        double se4 = std::sqrt(0.25 * 0.75 / n);
        CHECK(std::abs(freq - 0.25) < 3 * se4);
    }
}
