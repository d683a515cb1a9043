#include "doctest.h"

#include <cmath>

#include "ce2/distance.hpp"
#include "ce2/latent.hpp"
#include "oracles.hpp"

using namespace ce2;

TEST_CASE("training targets are k/H") {
    CHECK(1.0 / 20 == doctest::Approx(0.05));
    TemporalDistanceEstimator est(2, 16, 5e-2, 1);
    // k = 0 target is 0: after heavy training on a single k=0 pair, the
    // prediction approaches 0
    std::vector<EmbeddingPair> pairs = {{{0.3, 0.4}, {0.3, 0.4}, 0}};
    for (int i = 0; i < 4000; ++i) est.train_step(pairs, 20);
    CHECK(est.distance({0.3, 0.4}, {0.3, 0.4}) < 0.02);
}

TEST_CASE("a fixed 3-pair batch trains below 1e-3") {
    TemporalDistanceEstimator est(2, 32, 5e-2, 2);
    const std::vector<EmbeddingPair> pairs = {
        {{0.0, 0.0}, {1.0, 0.0}, 5},
        {{0.0, 0.0}, {0.0, 0.0}, 0},
        {{1.0, 1.0}, {0.0, 0.0}, 12},
    };
    double loss = 1.0;
    for (int i = 0; i < 20000 && loss >= 1e-3; ++i) loss = est.train_step(pairs, 20);
    CHECK(loss < 1e-3);
}

TEST_CASE("pre-step loss is returned and validation rejects bad lags") {
    TemporalDistanceEstimator est(2, 8, 1e-3, 3);
    const std::vector<EmbeddingPair> pairs = {{{0.0, 0.0}, {1.0, 0.0}, 5}};
    const double before = est.batch_loss(pairs, 20);
    CHECK(est.train_step(pairs, 20) == doctest::Approx(before));

    CHECK_THROWS_AS(est.batch_loss({{{0.0, 0.0}, {1.0, 0.0}, 25}}, 20), std::invalid_argument);
    CHECK_THROWS_AS(est.batch_loss({{{0.0, 0.0}, {1.0, 0.0}, -1}}, 20), std::invalid_argument);
    CHECK_THROWS_AS(est.batch_loss(pairs, 0), std::invalid_argument);
}

TEST_CASE("output stays in [0,1] for arbitrary inputs") {
    TemporalDistanceEstimator est(3, 32, 1e-3, 4);
    Rng rng = make_rng(5);
    for (int i = 0; i < 200; ++i) {
        Vec a = normal_vec(rng, 3);
        Vec b = normal_vec(rng, 3);
        for (auto& v : a) v *= 10.0;
        for (auto& v : b) v *= 10.0;
        const double d = est.distance(a, b);
        CHECK(d >= 0.0);
        CHECK(d <= 1.0);
    }
    CHECK_THROWS_AS(est.distance({1.0, 2.0}, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("analytic gradient matches central finite differences") {
    TemporalDistanceEstimator est(2, 8, 1e-3, 6);
    Rng rng = make_rng(7);
    std::vector<EmbeddingPair> pairs;
    for (int i = 0; i < 5; ++i) {
        pairs.push_back({normal_vec(rng, 2), normal_vec(rng, 2), uniform_index(rng, 21)});
    }
    const auto grad = est.batch_gradient(pairs, 20);
    auto loss = [&]() { return est.batch_loss(pairs, 20); };
    for (int check = 0; check < 20; ++check) {
        const auto coord = static_cast<std::size_t>(
            uniform_index(rng, static_cast<int>(est.params().size())));
        const double fd = oracles::finite_difference(loss, est.params()[coord], 1e-6);
        CHECK(oracles::relative_error(grad[coord], fd) <= 1e-4);
    }
}

TEST_CASE("loss is non-increasing for a small step size") {
    TemporalDistanceEstimator est(2, 16, 1e-3, 8);
    Rng rng = make_rng(9);
    std::vector<EmbeddingPair> pairs;
    for (int i = 0; i < 16; ++i) {
        pairs.push_back({normal_vec(rng, 2), normal_vec(rng, 2), uniform_index(rng, 21)});
    }
    double prev = est.train_step(pairs, 20);
    int monotone = 0;
    const int steps = 200;
    for (int i = 0; i < steps; ++i) {
        const double cur = est.train_step(pairs, 20);
        if (cur <= prev + 1e-12) ++monotone;
        prev = cur;
    }
    CHECK(monotone >= static_cast<int>(0.95 * steps));
}

TEST_CASE("goal reward is the negated distance") {
    TemporalDistanceEstimator est(2, 8, 1e-3, 10);
    const LatentSpace latent = LatentSpace::identity(2);
    const Vec s = {1.0, 2.0};
    const Vec g = {3.0, 4.0};
    const double r = goal_reward(est, latent, s, g);
    CHECK(r == doctest::Approx(-est.distance(s, g)));
    CHECK(r <= 0.0);
    CHECK(r >= -1.0);
}

TEST_CASE("bfs oracle distances") {
    const GridLayout open3 = GridLayout::open(3, 3);
    BfsOracle oracle(open3);
    CHECK(oracle.distance_steps(0, 0) == 0);
    CHECK(oracle.distance_steps(0, 1) == 1);
    CHECK(oracle.distance_steps(0, 8) == 4);  // opposite corners of a 3x3

    GridLayout split = GridLayout::open(3, 1);
    split.occ[1] = 1;  // middle wall disconnects the row
    BfsOracle cut(split);
    CHECK_FALSE(cut.distance_steps(0, 2).has_value());
    CHECK_THROWS_AS(cut.distance_steps(0, 1), std::invalid_argument);
}

TEST_CASE("bfs distances are symmetric and obey the triangle inequality") {
    BfsOracle oracle(GridLayout::four_rooms(8, 8));
    std::vector<int> free;
    for (int c = 0; c < 64; ++c) {
        if (oracle.layout().occ[static_cast<std::size_t>(c)] == 0) free.push_back(c);
    }
    Rng rng = make_rng(12);
    for (int i = 0; i < 100; ++i) {
        const int a = free[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(free.size())))];
        const int b = free[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(free.size())))];
        const int c = free[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(free.size())))];
        const int dab = *oracle.distance_steps(a, b);
        CHECK(dab == *oracle.distance_steps(b, a));
        CHECK(dab <= *oracle.distance_steps(a, c) + *oracle.distance_steps(c, b));
    }
}
