#pragma once

#include "hepsel/hep.hpp"
#include "hepsel/selection.hpp"
#include "hepsel/trace_model.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hepsel {

/// Per-trajectory features and labels for a whole cache, computed once and
/// shared by every method, subset and repeat.
class FeatureTable {
public:
    struct Problem {
        std::string problem_id;
        std::vector<CandidateFeatures> candidates; // ascending sample_id
        std::vector<bool> labels;
    };

    // Throws missing_label_error when `require_labels` and a record is unlabeled.
    static FeatureTable build(const TrajectoryCache & cache, const HepConfig & hep, const SelectionConfig & cfg,
                              bool require_labels = true, std::size_t jobs = 1);

    const std::vector<Problem> & problems() const noexcept { return problems_; }
    std::size_t min_group_size() const noexcept;

private:
    std::vector<Problem> problems_;
};

struct SkippedProblem {
    std::string problem_id;
    std::string reason;
};

struct AccuracyResult {
    std::optional<double> accuracy; // absent when every problem was skipped
    std::size_t evaluated = 0;
    std::vector<SkippedProblem> skipped;
};

struct ScalingPoint {
    std::size_t n = 1;
    std::size_t repeats = 0;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0; // population std over repeats
    std::size_t skipped = 0;   // problem-level selector failures, summed over repeats

    bool operator==(const ScalingPoint &) const = default;
};

// Mean label per problem, averaged over problems.
double pass_at_1(const TrajectoryCache & cache);

// Fraction of problems whose selected trajectory is labeled correct. A
// problem whose selector throws hepsel::error is skipped and reported.
AccuracyResult method_accuracy(const FeatureTable & table, const SelectionConfig & cfg, std::size_t jobs = 1);
AccuracyResult method_accuracy(const TrajectoryCache & cache, const HepConfig & hep, const SelectionConfig & cfg,
                               std::size_t jobs = 1);

// For each n: `repeats` rounds of drawing n candidates per problem without
// replacement, selecting, and scoring. Each (n, repeat, problem) draws from
// its own stream derived from `seed`. Throws infeasible_n_error.
std::vector<ScalingPoint> scaling_curve(const FeatureTable & table, const SelectionConfig & cfg,
                                        std::span<const std::size_t> n_grid, std::size_t repeats,
                                        std::uint64_t seed, std::size_t jobs = 1);
std::vector<ScalingPoint> scaling_curve(const TrajectoryCache & cache, const HepConfig & hep,
                                        const SelectionConfig & cfg, std::span<const std::size_t> n_grid,
                                        std::size_t repeats = 50, std::uint64_t seed = 0, std::size_t jobs = 1);

// Accuracy with the structural and centroid filters on minus with both off.
// Throws hepsel::error when either side evaluates no problem.
double filter_impact(const FeatureTable & table, const SelectionConfig & cfg, std::size_t jobs = 1);
double filter_impact(const TrajectoryCache & cache, const HepConfig & hep, const SelectionConfig & cfg,
                     std::size_t jobs = 1);

struct LabelCurve {
    std::vector<double> mean_duration; // per bin, 0 where a bin has no phase
    std::vector<std::size_t> counts;   // phases per bin
    std::size_t trajectories = 0;
    std::optional<double> median_centroid;
};

struct SeparationStats {
    std::size_t bins = 50;
    double sigma = 2.0;
    std::optional<LabelCurve> correct;
    std::optional<LabelCurve> incorrect;
    std::vector<double> difference; // correct - incorrect; empty unless both groups exist
    std::vector<double> smoothed_difference;

    double bin_center(std::size_t bin) const noexcept {
        return (static_cast<double>(bin) + 0.5) / static_cast<double>(bins);
    }
};

// Truncated Gaussian kernel (radius ceil(3 sigma)) renormalized at the
// edges. sigma below 1e-6 is the identity.
std::vector<double> gaussian_smooth(std::span<const double> values, double sigma);

SeparationStats separation_stats(const TrajectoryCache & cache, const HepConfig & hep, std::size_t bins = 50,
                                 double sigma = 2.0, EntropyMode mode = EntropyMode::raw);

struct SweepRow {
    double top_percent = 0.0;
    double bottom_percent = 0.0;
    std::size_t exit_k = 0;
    std::optional<double> accuracy;
    std::size_t skipped = 0;
};

// Full grid over the three phase parameters for one method.
std::vector<SweepRow> sweep(const TrajectoryCache & cache, const SelectionConfig & cfg,
                            std::span<const double> top_percents, std::span<const double> bottom_percents,
                            std::span<const std::size_t> exit_ks, std::size_t jobs = 1);

} // namespace hepsel
