#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "treecast/posterior.hpp"

using namespace treecast;

TEST_CASE("root posterior closed cases") {
    // two agreeing +1 leaves at rho = 0.9
    PosteriorDist post = root_posterior({1, 1}, TreeShape(2, 1), Channel::ising(0.9));
    CHECK(post[1] == doctest::Approx(0.95 * 0.95 / (0.95 * 0.95 + 0.05 * 0.05)));
    CHECK(post[1] == doctest::Approx(0.997238).epsilon(1e-5));

    // coloring: leaves 1 and 2 pin the parent to color 3
    PosteriorDist frozen = root_posterior({0, 1}, TreeShape(2, 1), Channel::coloring(3));
    CHECK(frozen[2] == doctest::Approx(1.0));
    CHECK(is_point_mass(frozen));

    // rho = 0: leaves carry no information
    PosteriorDist flat = root_posterior({0, 1, 1, 0}, TreeShape(2, 2), Channel::ising(0.0));
    CHECK(flat[0] == doctest::Approx(0.5));

    CHECK_THROWS_AS(root_posterior({3, 0}, TreeShape(2, 1), Channel::coloring(3)),
                    std::invalid_argument);
}

TEST_CASE("posterior equals brute-force Bayes on every leaf assignment") {
    TreeShape shape(2, 2);
    for (const Channel& ch : {Channel::ising(0.7), Channel::coloring(3)}) {
        int n = ch.alphabet_size();
        LeafSequence leaves(4, 0);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c)
                    for (int d = 0; d < n; ++d) {
                        leaves = {static_cast<Symbol>(a), static_cast<Symbol>(b),
                                  static_cast<Symbol>(c), static_cast<Symbol>(d)};
                        PosteriorDist brute;
                        try {
                            brute = oracles::brute_posterior(leaves, shape, ch);
                        } catch (...) {
                            continue;
                        }
                        double norm = 0.0;
                        for (double p : brute) norm += p;
                        if (!(norm > 0.0) || std::isnan(norm)) continue;
                        PosteriorDist post = root_posterior(leaves, shape, ch);
                        double tv = 0.0;
                        for (int s = 0; s < n; ++s) tv += std::abs(post[s] - brute[s]);
                        CHECK(tv / 2.0 < 1e-9);
                    }
    }
}

TEST_CASE("posterior sampling frequencies") {
    Rng rng(17);
    TreeShape shape(2, 1);
    Channel ch = Channel::ising(0.9);
    const int n = 100000;
    int plus = 0;
    for (int i = 0; i < n; ++i)
        plus += sample_root_from_posterior({1, 1}, shape, ch, rng) == 1;
    double p = 0.997238;
    CHECK(std::abs(static_cast<double>(plus) / n - p) < 3 * std::sqrt(p * (1 - p) / n) + 1e-5);

    for (int i = 0; i < 200; ++i)
        CHECK(sample_root_from_posterior({0, 1}, shape, Channel::coloring(3), rng) == 2);
}

TEST_CASE("reconstruction advantage estimates") {
    Channel ch = Channel::ising(0.9);

    QEstimate q0 = estimate_q(0, 2, ch, 100, 1);
    CHECK(q0.mean == doctest::Approx(1.0));

    QEstimate qzero = estimate_q(3, 2, Channel::ising(0.0), 500, 2);
    CHECK(qzero.mean == doctest::Approx(0.0));

    // exact two-leaf value by enumeration
    double exact = 0.0;
    TreeShape shape(2, 1);
    for (Symbol a : {Symbol{0}, Symbol{1}})
        for (Symbol b : {Symbol{0}, Symbol{1}}) {
            double py = 0.0;
            for (Symbol root : {Symbol{0}, Symbol{1}})
                py += 0.5 * ch.transition(root, a) * ch.transition(root, b);
            PosteriorDist post = oracles::brute_posterior({a, b}, shape, ch);
            double m = post[1] - post[0];
            exact += py * m * m;
        }
    QEstimate q1 = estimate_q(1, 2, ch, 100000, 3);
    CHECK(std::abs(q1.mean - exact) < 3 * q1.std_error);
}

TEST_CASE("advantage is monotone in depth and bounded away from zero above threshold") {
    Channel ch = Channel::ising(0.9);
    double prev_mean = 2.0, prev_se = 0.0;
    for (int w = 0; w <= 6; ++w) {
        QEstimate q = estimate_q(w, 3, ch, w <= 3 ? 4000 : 1000, 100 + w);
        CHECK(q.mean <= prev_mean + 3 * (prev_se + q.std_error));
        if (w >= 2) CHECK(q.mean > 0.1);
        prev_mean = q.mean;
        prev_se = q.std_error;
    }
}
