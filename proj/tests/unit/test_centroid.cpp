#include "hepsel/centroid.hpp"
#include "hepsel/errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace hepsel;

TEST_CASE("compute_centroid examples") {
    CHECK(std::abs(compute_centroid(std::vector<Hep>{{1, 9}}, 9) - 5.0 / 9.0) < 1e-12);
    CHECK(std::abs(compute_centroid(std::vector<Hep>{{2, 4}, {8, 10}}, 10) - 0.6) < 1e-12);
    CHECK(std::abs(compute_centroid(std::vector<Hep>{{2, 4}}, 6) - 0.5) < 1e-12);
}

TEST_CASE("compute_centroid range and errors") {
    CHECK(compute_centroid(std::vector<Hep>{{1, 1}}, 7) == doctest::Approx(1.0 / 7.0));
    CHECK(compute_centroid(std::vector<Hep>{{7, 7}}, 7) == 1.0);
    CHECK_THROWS_AS(compute_centroid(std::vector<Hep>{}, 7), no_centroid_error);
}

TEST_CASE("raw_entropy_centroid") {
    CHECK(raw_entropy_centroid(std::vector<double>(9, 0.3)) == doctest::Approx(5.0 / 9.0).epsilon(1e-14));
    CHECK(raw_entropy_centroid(std::vector<double>{0.0, 0.0, 1.0}) == 1.0);
    CHECK(raw_entropy_centroid(std::vector<double>{1.0, 2.0, 3.0}) == doctest::Approx(14.0 / 18.0).epsilon(1e-14));
    CHECK_THROWS_AS(raw_entropy_centroid(std::vector<double>{0.0, 0.0}), no_centroid_error);
}

TEST_CASE("score_trace end to end") {
    std::vector<double> t(100, 0.1);
    for (std::size_t i = 10; i < 20; ++i) {
        t[i] = 3.0;
    }
    const auto score = score_trace(EntropyTrace(t), HepConfig{});
    CHECK(score.length == 100);
    CHECK(score.thresholds.theta_high == 3.0);
    REQUIRE(score.heps.size() == 1);
    CHECK(score.heps[0] == Hep{11, 21}); // the first low token still belongs to the phase
    CHECK(score.value == doctest::Approx(16.0 / 100.0));
    CHECK_THROWS_AS(score_trace(EntropyTrace({0.0, 0.0}), HepConfig{0.01, 0.8, 2, Thresholds{1.0, 0.5}}),
                    no_centroid_error);
}
