#pragma once

#include "hepsel/hep.hpp"
#include "hepsel/trace_model.hpp"

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace hepsel {

// Burst midpoints are drawn as L * Beta(a, b):
//   front_loaded  Beta(2, 3), mode 1/3
//   back_loaded   Beta(3, 2), mode 2/3
//   uniform       Beta(1, 1)
// `mixed` draws a per-problem front rate q from front_rate_range, then makes
// each trajectory front_loaded with probability q and back_loaded otherwise.
enum class SynthPattern { front_loaded, back_loaded, uniform, mixed };
enum class TraceShape { front, back, uniform };

std::string_view to_string(SynthPattern pattern);
SynthPattern parse_synth_pattern(std::string_view name);
std::string_view to_string(TraceShape shape);

struct LabelRule {
    enum class Kind { front_is_correct, independent };
    Kind kind = Kind::front_is_correct;
    double p = 0.5; // Bernoulli rate for `independent`
};

// Minimum number of base tokens between two planted bursts.
inline constexpr std::size_t burst_gap = 3;

struct SynthSpec {
    SynthPattern pattern = SynthPattern::mixed;
    std::pair<std::size_t, std::size_t> length_range{400, 1200};
    std::pair<std::size_t, std::size_t> burst_count_range{2, 4};
    std::pair<std::size_t, std::size_t> burst_length_range{8, 30};
    double base_entropy = 0.3;
    double burst_entropy = 2.0;
    double onset_boost = 1.0; // first burst token sits this far above burst_entropy
    double noise_std = 0.15;
    std::pair<double, double> front_rate_range{0.25, 0.65};
    double spike_rate = 0.0;    // per-token probability of a single-token spike outside bursts
    double spike_entropy = 1.5;
    double junk_rate = 0.0;     // probability a trajectory is a repetition loop (finish_reason repetition)
    LabelRule label_rule;
    std::uint64_t seed = 0;
    bool annotate = true;       // store shape and planted bursts under the "synth" field

    // Throws spec_error.
    void validate() const;
};

SynthSpec synth_spec_from_json(const nlohmann::json & json);
nlohmann::ordered_json to_json(const SynthSpec & spec);

struct SynthTrajectory {
    std::vector<double> entropies;
    std::vector<Hep> planted; // ascending, 1-based
    TraceShape shape = TraceShape::uniform;
    bool junk = false;
};

// One trajectory from its own stream.
SynthTrajectory generate_trajectory(const SynthSpec & spec, TraceShape shape, bool junk, std::uint64_t stream);

// problems x samples_per_problem trajectories with entropies payloads.
// Deterministic in spec.seed; throws spec_error.
TrajectoryCache generate_corpus(const SynthSpec & spec, std::size_t problems, std::size_t samples_per_problem,
                                std::size_t jobs = 1);

} // namespace hepsel
