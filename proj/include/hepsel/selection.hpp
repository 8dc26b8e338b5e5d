#pragma once

#include "hepsel/hep.hpp"
#include "hepsel/trace_model.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace hepsel {

enum class Method {
    lowest_centroid,
    raw_centroid,
    self_certainty,
    tail_confidence,
    bottom_window,
    random,
    majority_vote,
};

std::string_view to_string(Method method);
// Throws std::invalid_argument.
Method parse_method(std::string_view name);
std::span<const Method> all_methods();

struct SelectionConfig {
    Method method = Method::lowest_centroid;
    double outlier_tau = 2.0;    // z-score cut on centroids; infinity disables it
    bool structural_filter = true; // drop finish_reason != stop before the z-cut
    std::size_t window_w = 1024;
    std::size_t topk_for_confidence = 10;
    std::uint64_t rng_seed = 0;
    EntropyMode entropy_mode = EntropyMode::raw;

    void validate() const;
};

enum class FilterReason { structural, centroid_outlier, no_centroid };
std::string_view to_string(FilterReason reason);

struct FilteredCandidate {
    std::uint64_t sample_id = 0;
    FilterReason reason = FilterReason::structural;

    bool operator==(const FilteredCandidate &) const = default;
};

struct SelectionResult {
    std::string problem_id;
    Method method = Method::lowest_centroid;
    std::uint64_t chosen_sample_id = 0;
    // Per-candidate method score in ascending sample_id; nullopt when the
    // candidate has none (e.g. no centroid).
    std::vector<std::pair<std::uint64_t, std::optional<double>>> scores;
    std::vector<FilteredCandidate> filtered;

    bool operator==(const SelectionResult &) const = default;
};

nlohmann::ordered_json to_json(const SelectionResult & result);

//
// outlier filtering
//

struct FilterCandidate {
    std::uint64_t sample_id = 0;
    std::optional<double> centroid;
    bool structurally_abnormal = false;
};

struct FilterOutcome {
    std::vector<std::uint64_t> survivors; // input order
    std::vector<FilteredCandidate> filtered;
};

// Three stages, each skipped when it would empty the pool:
//   1. candidates without a centroid,
//   2. structurally abnormal candidates (when structural_filter is set),
//   3. |C - mean| > tau * std, population statistics over stage-2 survivors.
// Throws empty_pool_error on empty input.
FilterOutcome filter_outliers(std::span<const FilterCandidate> candidates, double tau, bool structural_filter);

//
// confidence scores
//

// Negative mean of the first min(k_top, size) logprobs.
double token_confidence(std::span<const double> logprobs, std::size_t k_top);
// Mean of the last min(window, L) values.
double tail_confidence(std::span<const double> confidences, std::size_t window);
// Minimum mean over all contiguous windows of min(window, L) values.
double bottom_window_confidence(std::span<const double> confidences, std::size_t window);

// Trim and ASCII case-fold.
std::string normalize_answer(std::string_view answer);

//
// selectors
//

// Everything any selector needs from one trajectory, so subsets of a
// problem's candidates can be re-selected without rescoring.
struct CandidateFeatures {
    std::uint64_t sample_id = 0;
    FinishReason finish_reason = FinishReason::stop;
    std::optional<double> centroid;
    std::optional<double> raw_centroid;
    double mean_entropy = 0.0;
    std::optional<double> tail_confidence;
    std::optional<double> bottom_window;
    std::optional<std::string> answer; // normalized
};

CandidateFeatures compute_features(const TrajectoryRecord & record, const HepConfig & hep, const SelectionConfig & cfg);

// `candidates` must be in ascending sample_id. `random_stream` seeds the
// random selector and is ignored by the others.
SelectionResult select_features(std::string_view problem_id, std::span<const CandidateFeatures * const> candidates,
                                const SelectionConfig & cfg, std::uint64_t random_stream);

// Stream used by the random selector for a problem outside the harness.
std::uint64_t problem_stream(std::uint64_t rng_seed, std::string_view problem_id);

// Scores `candidates` (one problem, ascending sample_id) and runs cfg.method.
SelectionResult select(std::span<const TrajectoryRecord> candidates, const HepConfig & hep, const SelectionConfig & cfg);

SelectionResult lowest_centroid_select(std::span<const TrajectoryRecord> candidates, const HepConfig & hep = {},
                                       SelectionConfig cfg = {});
SelectionResult raw_centroid_select(std::span<const TrajectoryRecord> candidates, SelectionConfig cfg = {});
SelectionResult self_certainty_select(std::span<const TrajectoryRecord> candidates, SelectionConfig cfg = {});
SelectionResult tail_confidence_select(std::span<const TrajectoryRecord> candidates, std::size_t window_w,
                                       SelectionConfig cfg = {});
SelectionResult bottom_window_select(std::span<const TrajectoryRecord> candidates, std::size_t window_w,
                                     SelectionConfig cfg = {});
SelectionResult random_select(std::span<const TrajectoryRecord> candidates, std::uint64_t rng_seed);
SelectionResult majority_vote(std::span<const TrajectoryRecord> candidates, const HepConfig & hep = {},
                              SelectionConfig cfg = {});

} // namespace hepsel
