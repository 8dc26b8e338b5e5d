#include "oracles.hpp"

#include "hepsel/hep.hpp"
#include "hepsel/rng.hpp"

#include <doctest.h>

#include <numeric>
#include <stdexcept>

using namespace hepsel;

TEST_CASE("thresholds") {
    SUBCASE("constant trace") {
        const auto thr = compute_thresholds(EntropyTrace(std::vector<double>(50, 0.4)), HepConfig{});
        CHECK(thr.theta_high == 0.4);
        CHECK(thr.theta_low == 0.4);
    }
    SUBCASE("1..100") {
        std::vector<double> t(100);
        std::iota(t.begin(), t.end(), 1.0);
        const auto thr = compute_thresholds(EntropyTrace(t), HepConfig{});
        CHECK(thr.theta_high == 99.0);
        CHECK(thr.theta_low == 80.0);
    }
    SUBCASE("single token") {
        const auto thr = compute_thresholds(EntropyTrace({0.7}), HepConfig{});
        CHECK(thr.theta_high == 0.7);
        CHECK(thr.theta_low == 0.7);
    }
    SUBCASE("absolute thresholds bypass percentiles") {
        HepConfig cfg;
        cfg.absolute = Thresholds{1.5, 0.5};
        CHECK(compute_thresholds(EntropyTrace({0.1, 9.0}), cfg) == Thresholds{1.5, 0.5});
    }
}

TEST_CASE("thresholds agree with a full sort") {
    Rng rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t length = 1 + uniform_index(rng, 300);
        std::vector<double> t(length);
        for (auto & v : t) {
            v = std::floor(uniform01(rng) * 20.0) / 10.0;
        }
        HepConfig cfg;
        cfg.top_percent = 0.005 + 0.2 * uniform01(rng);
        cfg.bottom_percent = 0.5 + 0.45 * uniform01(rng);
        const auto thr = compute_thresholds(EntropyTrace(t), cfg);
        CHECK(thr.theta_high == testing::sorted_rank(t, 1.0 - cfg.top_percent));
        CHECK(thr.theta_low == testing::sorted_rank(t, cfg.bottom_percent));
    }
}

TEST_CASE("HepConfig validation") {
    CHECK_NOTHROW(HepConfig{}.validate());
    CHECK_THROWS_AS((HepConfig{0.0, 0.8, 2, {}}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((HepConfig{0.01, 1.0, 2, {}}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((HepConfig{0.01, 0.8, 0, {}}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((HepConfig{0.01, 0.8, 2, Thresholds{0.1, 0.2}}.validate()), std::invalid_argument);
}

TEST_CASE("detect_heps examples") {
    const Thresholds thr{0.85, 0.3};
    SUBCASE("window closes after two low tokens") {
        const std::vector<double> t{0.1, 0.9, 0.8, 0.1, 0.1, 0.2};
        const auto heps = detect_heps(t, thr, 2);
        REQUIRE(heps.size() == 1);
        CHECK(heps[0] == Hep{2, 4});
        CHECK(heps[0].mass() == 3);
        CHECK(heps[0].position() == 3.0);
    }
    SUBCASE("no trigger") {
        const std::vector<double> t{0.1, 0.5, 0.84};
        CHECK(detect_heps(t, thr, 2).empty());
    }
    SUBCASE("phase open at the end closes at L") {
        const std::vector<double> t{0.1, 0.9, 0.9};
        const auto heps = detect_heps(t, thr, 2);
        REQUIRE(heps.size() == 1);
        CHECK(heps[0] == Hep{2, 3});
    }
    SUBCASE("exit needs k real tokens") {
        const std::vector<double> t{0.9, 0.1};
        CHECK(detect_heps(t, thr, 3) == std::vector<Hep>{{1, 2}});
    }
    SUBCASE("constant trace alternates single-token phases") {
        const std::vector<double> t(5, 0.4);
        const auto heps = detect_heps(t, Thresholds{0.4, 0.4}, 2);
        CHECK(heps == std::vector<Hep>{{1, 1}, {3, 3}, {5, 5}});
        CHECK(heps == testing::naive_heps(t, 0.4, 0.4, 2));
    }
}

TEST_CASE("detect_heps matches the naive recursion") {
    Rng rng(17);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t length = 1 + uniform_index(rng, 200);
        const std::size_t k = 1 + uniform_index(rng, 5);
        std::vector<double> t(length);
        for (auto & v : t) {
            v = std::floor(uniform01(rng) * 8.0) / 4.0;
        }
        double hi = std::floor(uniform01(rng) * 8.0) / 4.0;
        double lo = std::floor(uniform01(rng) * 8.0) / 4.0;
        if (lo > hi) {
            std::swap(lo, hi);
        }
        CAPTURE(trial);
        REQUIRE(detect_heps(t, Thresholds{hi, lo}, k) == testing::naive_heps(t, hi, lo, k));
    }
}
