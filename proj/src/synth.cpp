#include "hepsel/synth.hpp"

#include "hepsel/errors.hpp"
#include "hepsel/parallel.hpp"
#include "hepsel/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace hepsel {

namespace {

constexpr int max_placement_attempts = 1000;

std::pair<double, double> beta_shape(TraceShape shape) {
    switch (shape) {
    case TraceShape::front:
        return {2.0, 3.0};
    case TraceShape::back:
        return {3.0, 2.0};
    case TraceShape::uniform:
        break;
    }
    return {1.0, 1.0};
}

std::size_t uniform_in(Rng & rng, std::pair<std::size_t, std::size_t> range) {
    return range.first + uniform_index(rng, range.second - range.first + 1);
}

template <class T>
void check_range(const std::pair<T, T> & r, const char * name) {
    if (r.first > r.second) {
        throw spec_error(std::string(name) + " must be ordered [min, max]");
    }
}

LabelRule parse_label_rule(const nlohmann::json & value) {
    LabelRule rule;
    if (value.is_object()) {
        rule.kind = LabelRule::Kind::independent;
        rule.p = value.at("independent").get<double>();
        return rule;
    }
    const auto s = value.get<std::string>();
    if (s == "front_is_correct") {
        return rule;
    }
    if (s.rfind("independent(", 0) == 0 && s.back() == ')') {
        rule.kind = LabelRule::Kind::independent;
        rule.p = std::stod(s.substr(12, s.size() - 13));
        return rule;
    }
    throw spec_error("unknown label_rule '" + s + "'");
}

} // namespace

std::string_view to_string(SynthPattern pattern) {
    switch (pattern) {
    case SynthPattern::front_loaded:
        return "front_loaded";
    case SynthPattern::back_loaded:
        return "back_loaded";
    case SynthPattern::uniform:
        return "uniform";
    case SynthPattern::mixed:
        return "mixed";
    }
    return "mixed";
}

SynthPattern parse_synth_pattern(std::string_view name) {
    for (auto p : {SynthPattern::front_loaded, SynthPattern::back_loaded, SynthPattern::uniform, SynthPattern::mixed}) {
        if (to_string(p) == name) {
            return p;
        }
    }
    throw spec_error("unknown pattern '" + std::string(name) + "'");
}

std::string_view to_string(TraceShape shape) {
    switch (shape) {
    case TraceShape::front:
        return "front";
    case TraceShape::back:
        return "back";
    case TraceShape::uniform:
        return "uniform";
    }
    return "uniform";
}

void SynthSpec::validate() const {
    check_range(length_range, "length_range");
    check_range(burst_count_range, "burst_count_range");
    check_range(burst_length_range, "burst_length_range");
    check_range(front_rate_range, "front_rate_range");
    if (length_range.first < 10) {
        throw spec_error("length_range minimum must be >= 10");
    }
    if (burst_length_range.first < 1) {
        throw spec_error("bursts must be at least one token long");
    }
    if (!(noise_std >= 0.0) || !(base_entropy >= 0.0)) {
        throw spec_error("base_entropy and noise_std must be >= 0");
    }
    if (!(burst_entropy > base_entropy + 4.0 * noise_std)) {
        throw spec_error("burst_entropy must exceed base_entropy + 4 * noise_std");
    }
    if (front_rate_range.first < 0.0 || front_rate_range.second > 1.0) {
        throw spec_error("front_rate_range must lie in [0, 1]");
    }
    for (double rate : {spike_rate, junk_rate}) {
        if (!(rate >= 0.0 && rate <= 1.0)) {
            throw spec_error("spike_rate and junk_rate must lie in [0, 1]");
        }
    }
    if (label_rule.kind == LabelRule::Kind::independent && !(label_rule.p >= 0.0 && label_rule.p <= 1.0)) {
        throw spec_error("independent label rate must lie in [0, 1]");
    }
    // Worst case: the most and longest bursts in the shortest trajectory.
    const auto needed = burst_count_range.second * (burst_length_range.second + burst_gap);
    if (needed > length_range.first + burst_gap) {
        throw spec_error("infeasible burst placement: " + std::to_string(burst_count_range.second) + " bursts of " +
                         std::to_string(burst_length_range.second) + " tokens do not fit in " +
                         std::to_string(length_range.first) + " tokens");
    }
}

SynthSpec synth_spec_from_json(const nlohmann::json & json) {
    SynthSpec spec;
    auto range = [&](const char * key, auto & field) {
        if (auto it = json.find(key); it != json.end()) {
            field = {it->at(0).get<typename std::decay_t<decltype(field)>::first_type>(),
                     it->at(1).get<typename std::decay_t<decltype(field)>::second_type>()};
        }
    };
    auto number = [&](const char * key, double & field) {
        if (auto it = json.find(key); it != json.end()) {
            field = it->get<double>();
        }
    };
    static constexpr const char * known[] = {
        "pattern",      "length_range", "burst_count_range", "burst_length_range", "base_entropy",
        "burst_entropy", "onset_boost", "noise_std",         "front_rate_range",   "spike_rate",
        "spike_entropy", "junk_rate",   "label_rule",        "seed",               "annotate",
        "problems",     "samples_per_problem",
    };
    for (auto it = json.begin(); it != json.end(); ++it) {
        if (std::find_if(std::begin(known), std::end(known), [&](const char * k) { return it.key() == k; }) ==
            std::end(known)) {
            throw spec_error("unknown synth config key '" + it.key() + "'");
        }
    }
    try {
        if (auto it = json.find("pattern"); it != json.end()) {
            spec.pattern = parse_synth_pattern(it->get<std::string>());
        }
        range("length_range", spec.length_range);
        range("burst_count_range", spec.burst_count_range);
        range("burst_length_range", spec.burst_length_range);
        range("front_rate_range", spec.front_rate_range);
        number("base_entropy", spec.base_entropy);
        number("burst_entropy", spec.burst_entropy);
        number("onset_boost", spec.onset_boost);
        number("noise_std", spec.noise_std);
        number("spike_rate", spec.spike_rate);
        number("spike_entropy", spec.spike_entropy);
        number("junk_rate", spec.junk_rate);
        if (auto it = json.find("label_rule"); it != json.end()) {
            spec.label_rule = parse_label_rule(*it);
        }
        if (auto it = json.find("seed"); it != json.end()) {
            spec.seed = it->get<std::uint64_t>();
        }
        if (auto it = json.find("annotate"); it != json.end()) {
            spec.annotate = it->get<bool>();
        }
    } catch (const nlohmann::json::exception & e) {
        throw spec_error(std::string("bad synth config: ") + e.what());
    }
    return spec;
}

nlohmann::ordered_json to_json(const SynthSpec & spec) {
    nlohmann::ordered_json j;
    j["pattern"] = std::string(to_string(spec.pattern));
    j["length_range"] = {spec.length_range.first, spec.length_range.second};
    j["burst_count_range"] = {spec.burst_count_range.first, spec.burst_count_range.second};
    j["burst_length_range"] = {spec.burst_length_range.first, spec.burst_length_range.second};
    j["base_entropy"] = spec.base_entropy;
    j["burst_entropy"] = spec.burst_entropy;
    j["onset_boost"] = spec.onset_boost;
    j["noise_std"] = spec.noise_std;
    j["front_rate_range"] = {spec.front_rate_range.first, spec.front_rate_range.second};
    j["spike_rate"] = spec.spike_rate;
    j["spike_entropy"] = spec.spike_entropy;
    j["junk_rate"] = spec.junk_rate;
    if (spec.label_rule.kind == LabelRule::Kind::front_is_correct) {
        j["label_rule"] = "front_is_correct";
    } else {
        j["label_rule"] = {{"independent", spec.label_rule.p}};
    }
    j["seed"] = spec.seed;
    j["annotate"] = spec.annotate;
    return j;
}

SynthTrajectory generate_trajectory(const SynthSpec & spec, TraceShape shape, bool junk, std::uint64_t stream) {
    Rng rng(stream);
    std::normal_distribution<double> noise(0.0, spec.noise_std);

    SynthTrajectory out;
    out.shape = shape;
    out.junk = junk;
    const std::size_t length = uniform_in(rng, spec.length_range);
    auto & t = out.entropies;
    t.resize(length);

    const auto [a, b] = beta_shape(shape);
    const std::size_t count = uniform_in(rng, spec.burst_count_range);
    for (std::size_t n = 0; n < count; ++n) {
        const std::size_t burst_len = uniform_in(rng, spec.burst_length_range);
        bool placed = false;
        for (int attempt = 0; attempt < max_placement_attempts && !placed; ++attempt) {
            const double mid = beta_variate(rng, a, b) * static_cast<double>(length);
            const auto raw_start = static_cast<long long>(std::floor(mid - static_cast<double>(burst_len) / 2.0)) + 1;
            const auto start = static_cast<std::size_t>(
                std::clamp<long long>(raw_start, 1, static_cast<long long>(length - burst_len + 1)));
            const std::size_t end = start + burst_len - 1;
            const bool clear = std::all_of(out.planted.begin(), out.planted.end(), [&](const Hep & h) {
                return end + burst_gap < h.start || start > h.end + burst_gap;
            });
            if (clear) {
                out.planted.push_back(Hep{start, end});
                placed = true;
            }
        }
        if (!placed) {
            throw spec_error("infeasible burst placement after " + std::to_string(max_placement_attempts) +
                             " attempts");
        }
    }
    std::sort(out.planted.begin(), out.planted.end(), [](const Hep & x, const Hep & y) { return x.start < y.start; });

    std::vector<bool> in_burst(length, false);
    for (auto & v : t) {
        v = spec.base_entropy + noise(rng);
    }
    for (const auto & h : out.planted) {
        for (std::size_t i = h.start; i <= h.end; ++i) {
            t[i - 1] = spec.burst_entropy + noise(rng);
            in_burst[i - 1] = true;
        }
        t[h.start - 1] = spec.burst_entropy + spec.onset_boost + noise(rng);
    }
    if (spec.spike_rate > 0.0) {
        for (std::size_t i = 0; i < length; ++i) {
            if (!in_burst[i] && uniform01(rng) < spec.spike_rate) {
                t[i] = spec.spike_entropy + noise(rng);
            }
        }
    }
    if (junk) {
        // repetition loop: a short uncertain opening, then a flat zero-entropy tail
        std::fill(t.begin(), t.end(), 0.0);
        for (std::size_t i = 0; i < std::min<std::size_t>(length, 12); ++i) {
            t[i] = spec.burst_entropy + noise(rng);
        }
        out.planted.assign(1, Hep{1, std::min<std::size_t>(length, 12)});
    }
    for (auto & v : t) {
        v = std::max(v, 0.0);
    }
    return out;
}

TrajectoryCache generate_corpus(const SynthSpec & spec, std::size_t problems, std::size_t samples_per_problem,
                                std::size_t jobs) {
    spec.validate();
    std::size_t width = 4;
    for (std::size_t p = problems; p >= 10000; p /= 10) {
        ++width;
    }
    std::vector<TrajectoryRecord> records(problems * samples_per_problem);
    parallel_for(problems, jobs, [&](std::size_t p) {
        std::string pid = std::to_string(p);
        pid = "p" + std::string(width - std::min(width, pid.size()), '0') + pid;

        Rng problem_rng(derive_seed(spec.seed, {p}));
        const double front_rate =
            spec.front_rate_range.first +
            (spec.front_rate_range.second - spec.front_rate_range.first) * uniform01(problem_rng);

        for (std::size_t s = 0; s < samples_per_problem; ++s) {
            Rng rng(derive_seed(spec.seed, {p, s}));
            TraceShape shape = TraceShape::uniform;
            switch (spec.pattern) {
            case SynthPattern::front_loaded:
                shape = TraceShape::front;
                break;
            case SynthPattern::back_loaded:
                shape = TraceShape::back;
                break;
            case SynthPattern::uniform:
                break;
            case SynthPattern::mixed:
                shape = uniform01(rng) < front_rate ? TraceShape::front : TraceShape::back;
                break;
            }
            const bool junk = spec.junk_rate > 0.0 && uniform01(rng) < spec.junk_rate;
            const double label_draw = uniform01(rng);
            auto traj = generate_trajectory(spec, shape, junk, rng());

            auto & rec = records[p * samples_per_problem + s];
            rec.problem_id = pid;
            rec.sample_id = s;
            rec.finish_reason = junk ? FinishReason::repetition : FinishReason::stop;
            if (spec.label_rule.kind == LabelRule::Kind::front_is_correct) {
                rec.label = shape == TraceShape::front && !junk;
            } else {
                rec.label = !junk && label_draw < spec.label_rule.p;
            }
            if (spec.annotate) {
                auto planted = nlohmann::json::array();
                for (const auto & h : traj.planted) {
                    planted.push_back({h.start, h.end});
                }
                rec.extra["synth"] = {{"shape", std::string(to_string(shape))}, {"junk", junk}, {"planted", planted}};
            }
            rec.payload = EntropyTrace(std::move(traj.entropies));
        }
    });
    return TrajectoryCache::from_records(std::move(records));
}

} // namespace hepsel
