#include "hepsel/centroid.hpp"
#include "hepsel/errors.hpp"
#include "hepsel/rng.hpp"
#include "hepsel/synth.hpp"

#include <doctest.h>

#include <sstream>

using namespace hepsel;

namespace {

double mean_centroid(SynthPattern pattern, std::size_t problems, std::size_t samples) {
    SynthSpec spec;
    spec.pattern = pattern;
    spec.seed = 21;
    const auto cache = generate_corpus(spec, problems, samples, 0);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto & g : cache.groups()) {
        for (const auto & r : g.records) {
            sum += score_trace(trace_of(r), HepConfig{}).value;
            ++n;
        }
    }
    return sum / static_cast<double>(n);
}

} // namespace

TEST_CASE("corpus is deterministic under the seed") {
    SynthSpec spec;
    spec.seed = 99;
    spec.spike_rate = 0.1;
    spec.junk_rate = 0.2;
    std::ostringstream a;
    std::ostringstream b;
    std::ostringstream c;
    write_cache(generate_corpus(spec, 6, 5, 1), a);
    write_cache(generate_corpus(spec, 6, 5, 4), b);
    spec.seed = 100;
    write_cache(generate_corpus(spec, 6, 5, 1), c);
    CHECK(a.str() == b.str());
    CHECK(a.str() != c.str());
}

TEST_CASE("front and back loading move the centroid") {
    CHECK(mean_centroid(SynthPattern::front_loaded, 50, 20) < 0.5);
    CHECK(mean_centroid(SynthPattern::back_loaded, 50, 20) > 0.5);
}

TEST_CASE("planted bursts are recoverable") {
    SynthSpec spec;
    std::size_t planted = 0;
    std::size_t found = 0;
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto shape = s % 2 ? TraceShape::front : TraceShape::back;
        const auto t = generate_trajectory(spec, shape, false, derive_seed(7, {s}));
        const auto score = score_trace(EntropyTrace(t.entropies), HepConfig{});
        for (const auto & b : t.planted) {
            ++planted;
            for (const auto & h : score.heps) {
                if (std::abs(h.position() - b.position()) <= 2.0) {
                    ++found;
                    break;
                }
            }
        }
    }
    CHECK(static_cast<double>(found) >= 0.9 * static_cast<double>(planted));
}

TEST_CASE("generated trajectories respect the spec") {
    SynthSpec spec;
    spec.spike_rate = 0.05;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto t = generate_trajectory(spec, TraceShape::uniform, false, s);
        CHECK(t.entropies.size() >= 400);
        CHECK(t.entropies.size() <= 1200);
        CHECK(t.planted.size() >= 2);
        CHECK(t.planted.size() <= 4);
        for (double v : t.entropies) {
            CHECK(v >= 0.0);
        }
        for (std::size_t i = 0; i < t.planted.size(); ++i) {
            CHECK(t.planted[i].mass() >= 8);
            CHECK(t.planted[i].mass() <= 30);
            CHECK(t.planted[i].end <= t.entropies.size());
            if (i > 0) {
                CHECK(t.planted[i].start > t.planted[i - 1].end + burst_gap);
            }
        }
    }
    const auto junk = generate_trajectory(spec, TraceShape::front, true, 3);
    CHECK(junk.junk);
    CHECK(junk.entropies.back() == 0.0);
}

TEST_CASE("labels follow the rule") {
    SynthSpec spec;
    spec.junk_rate = 0.2;
    const auto cache = generate_corpus(spec, 5, 20);
    for (const auto & g : cache.groups()) {
        for (const auto & r : g.records) {
            const auto & synth = r.extra.at("synth");
            const bool front = synth.at("shape") == "front";
            const bool junk = synth.at("junk").get<bool>();
            CHECK(r.label == (front && !junk));
            CHECK((r.finish_reason == FinishReason::repetition) == junk);
        }
    }
    spec.label_rule = LabelRule{LabelRule::Kind::independent, 0.0};
    for (const auto & g : generate_corpus(spec, 3, 5).groups()) {
        for (const auto & r : g.records) {
            CHECK(r.label == false);
        }
    }
}

TEST_CASE("spec validation") {
    SynthSpec spec;
    CHECK_NOTHROW(spec.validate());
    spec.burst_entropy = 0.8; // not separable from 0.3 + 4 * 0.15
    CHECK_THROWS_AS(spec.validate(), spec_error);
    spec = SynthSpec{};
    spec.length_range = {5, 50};
    CHECK_THROWS_AS(spec.validate(), spec_error);
    spec = SynthSpec{};
    spec.length_range = {40, 60};
    CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("infeasible"), spec_error);
    CHECK_THROWS_AS(generate_corpus(spec, 1, 1), spec_error);
}

TEST_CASE("spec from json") {
    const auto spec = synth_spec_from_json(nlohmann::json::parse(
        R"j({"pattern":"front_loaded","length_range":[100,200],"label_rule":"independent(0.3)","seed":5,"problems":3})j"));
    CHECK(spec.pattern == SynthPattern::front_loaded);
    CHECK(spec.length_range == std::pair<std::size_t, std::size_t>{100, 200});
    CHECK(spec.label_rule.kind == LabelRule::Kind::independent);
    CHECK(spec.label_rule.p == 0.3);
    CHECK(spec.seed == 5);
    const auto again = synth_spec_from_json(to_json(spec));
    CHECK(again.label_rule.p == 0.3);
    CHECK(again.length_range == spec.length_range);
    CHECK_THROWS_AS(synth_spec_from_json(nlohmann::json::parse(R"({"bursts":3})")), spec_error);
    CHECK_THROWS_AS(synth_spec_from_json(nlohmann::json::parse(R"({"pattern":"sideways"})")), spec_error);
}
