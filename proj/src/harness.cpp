#include "hepsel/harness.hpp"

#include "hepsel/centroid.hpp"
#include "hepsel/errors.hpp"
#include "hepsel/parallel.hpp"
#include "hepsel/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hepsel {

namespace {

void require_label(const TrajectoryRecord & record) {
    if (!record.label) {
        throw missing_label_error("record (" + record.problem_id + ", " + std::to_string(record.sample_id) +
                                  ") has no label");
    }
}

bool label_of(const FeatureTable::Problem & problem, std::uint64_t sample_id) {
    for (std::size_t i = 0; i < problem.candidates.size(); ++i) {
        if (problem.candidates[i].sample_id == sample_id) {
            return problem.labels[i];
        }
    }
    return false;
}

// Outcome of selecting on one problem: 1 correct, 0 wrong, -1 skipped.
struct Outcome {
    int value = -1;
    std::string reason;
};

Outcome run_one(const FeatureTable::Problem & problem, std::span<const CandidateFeatures * const> pool,
                const SelectionConfig & cfg, std::uint64_t stream) {
    try {
        const auto result = select_features(problem.problem_id, pool, cfg, stream);
        return Outcome{label_of(problem, result.chosen_sample_id) ? 1 : 0, {}};
    } catch (const error & e) {
        return Outcome{-1, e.what()};
    }
}

double median(std::vector<double> values) {
    const std::size_t n = values.size();
    std::sort(values.begin(), values.end());
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

} // namespace

FeatureTable FeatureTable::build(const TrajectoryCache & cache, const HepConfig & hep, const SelectionConfig & cfg,
                                 bool require_labels, std::size_t jobs) {
    hep.validate();
    cfg.validate();
    FeatureTable table;
    const auto & groups = cache.groups();
    table.problems_.resize(groups.size());
    for (std::size_t p = 0; p < groups.size(); ++p) {
        table.problems_[p].problem_id = groups[p].problem_id;
        for (const auto & record : groups[p].records) {
            if (require_labels) {
                require_label(record);
            }
            table.problems_[p].labels.push_back(record.label.value_or(false));
        }
    }
    parallel_for(groups.size(), jobs, [&](std::size_t p) {
        auto & out = table.problems_[p].candidates;
        out.reserve(groups[p].records.size());
        for (const auto & record : groups[p].records) {
            out.push_back(compute_features(record, hep, cfg));
        }
    });
    return table;
}

std::size_t FeatureTable::min_group_size() const noexcept {
    std::size_t n = problems_.empty() ? 0 : std::numeric_limits<std::size_t>::max();
    for (const auto & p : problems_) {
        n = std::min(n, p.candidates.size());
    }
    return n;
}

double pass_at_1(const TrajectoryCache & cache) {
    if (cache.empty()) {
        throw error("pass@1 of an empty cache");
    }
    double total = 0.0;
    for (const auto & group : cache.groups()) {
        std::size_t correct = 0;
        for (const auto & record : group.records) {
            require_label(record);
            correct += *record.label ? 1 : 0;
        }
        total += static_cast<double>(correct) / static_cast<double>(group.records.size());
    }
    return total / static_cast<double>(cache.groups().size());
}

AccuracyResult method_accuracy(const FeatureTable & table, const SelectionConfig & cfg, std::size_t jobs) {
    const auto & problems = table.problems();
    std::vector<Outcome> outcomes(problems.size());
    parallel_for(problems.size(), jobs, [&](std::size_t p) {
        const auto & problem = problems[p];
        std::vector<const CandidateFeatures *> pool;
        pool.reserve(problem.candidates.size());
        for (const auto & c : problem.candidates) {
            pool.push_back(&c);
        }
        outcomes[p] = run_one(problem, pool, cfg, problem_stream(cfg.rng_seed, problem.problem_id));
    });

    AccuracyResult result;
    std::size_t correct = 0;
    for (std::size_t p = 0; p < problems.size(); ++p) {
        if (outcomes[p].value < 0) {
            result.skipped.push_back({problems[p].problem_id, outcomes[p].reason});
        } else {
            ++result.evaluated;
            correct += static_cast<std::size_t>(outcomes[p].value);
        }
    }
    if (result.evaluated > 0) {
        result.accuracy = static_cast<double>(correct) / static_cast<double>(result.evaluated);
    }
    return result;
}

AccuracyResult method_accuracy(const TrajectoryCache & cache, const HepConfig & hep, const SelectionConfig & cfg,
                               std::size_t jobs) {
    return method_accuracy(FeatureTable::build(cache, hep, cfg, true, jobs), cfg, jobs);
}

std::vector<ScalingPoint> scaling_curve(const FeatureTable & table, const SelectionConfig & cfg,
                                        std::span<const std::size_t> n_grid, std::size_t repeats,
                                        std::uint64_t seed, std::size_t jobs) {
    if (repeats == 0) {
        throw std::invalid_argument("repeats must be >= 1");
    }
    const auto & problems = table.problems();
    for (std::size_t n : n_grid) {
        if (n == 0) {
            throw std::invalid_argument("n must be >= 1");
        }
        for (const auto & problem : problems) {
            if (problem.candidates.size() < n) {
                throw infeasible_n_error("n = " + std::to_string(n) + " exceeds the " +
                                         std::to_string(problem.candidates.size()) + " candidates of problem " +
                                         problem.problem_id);
            }
        }
    }

    std::vector<ScalingPoint> points;
    for (std::size_t n : n_grid) {
        // outcomes[r * P + p]
        std::vector<Outcome> outcomes(repeats * problems.size());
        parallel_for(outcomes.size(), jobs, [&](std::size_t unit) {
            const std::size_t r = unit / problems.size();
            const std::size_t p = unit % problems.size();
            const auto & problem = problems[p];
            const std::uint64_t stream = derive_seed(seed, {n, r, fnv1a64(problem.problem_id)});
            Rng rng(stream);

            std::vector<std::size_t> index(problem.candidates.size());
            std::iota(index.begin(), index.end(), 0);
            for (std::size_t i = 0; i < n; ++i) {
                const auto j = i + uniform_index(rng, index.size() - i);
                std::swap(index[i], index[j]);
            }
            std::sort(index.begin(), index.begin() + static_cast<std::ptrdiff_t>(n));
            std::vector<const CandidateFeatures *> pool(n);
            for (std::size_t i = 0; i < n; ++i) {
                pool[i] = &problem.candidates[index[i]];
            }
            outcomes[unit] = run_one(problem, pool, cfg, derive_seed(stream, {1}));
        });

        ScalingPoint point{n, repeats, 0.0, 0.0, 0};
        std::vector<double> accuracies;
        for (std::size_t r = 0; r < repeats; ++r) {
            std::size_t correct = 0;
            std::size_t evaluated = 0;
            for (std::size_t p = 0; p < problems.size(); ++p) {
                const auto & o = outcomes[r * problems.size() + p];
                if (o.value < 0) {
                    ++point.skipped;
                } else {
                    ++evaluated;
                    correct += static_cast<std::size_t>(o.value);
                }
            }
            if (evaluated > 0) {
                accuracies.push_back(static_cast<double>(correct) / static_cast<double>(evaluated));
            }
        }
        if (!accuracies.empty()) {
            double mean = 0.0;
            for (double a : accuracies) {
                mean += a;
            }
            mean /= static_cast<double>(accuracies.size());
            double var = 0.0;
            for (double a : accuracies) {
                var += (a - mean) * (a - mean);
            }
            point.mean_accuracy = mean;
            point.std_accuracy = std::sqrt(var / static_cast<double>(accuracies.size()));
        }
        points.push_back(point);
    }
    return points;
}

std::vector<ScalingPoint> scaling_curve(const TrajectoryCache & cache, const HepConfig & hep,
                                        const SelectionConfig & cfg, std::span<const std::size_t> n_grid,
                                        std::size_t repeats, std::uint64_t seed, std::size_t jobs) {
    return scaling_curve(FeatureTable::build(cache, hep, cfg, true, jobs), cfg, n_grid, repeats, seed, jobs);
}

double filter_impact(const FeatureTable & table, const SelectionConfig & cfg, std::size_t jobs) {
    SelectionConfig on = cfg;
    on.structural_filter = true;
    SelectionConfig off = cfg;
    off.structural_filter = false;
    off.outlier_tau = std::numeric_limits<double>::infinity();
    const auto with = method_accuracy(table, on, jobs);
    const auto without = method_accuracy(table, off, jobs);
    if (!with.accuracy || !without.accuracy) {
        throw error("filter impact undefined: no problem could be evaluated");
    }
    return *with.accuracy - *without.accuracy;
}

double filter_impact(const TrajectoryCache & cache, const HepConfig & hep, const SelectionConfig & cfg,
                     std::size_t jobs) {
    return filter_impact(FeatureTable::build(cache, hep, cfg, true, jobs), cfg, jobs);
}

std::vector<double> gaussian_smooth(std::span<const double> values, double sigma) {
    std::vector<double> out(values.begin(), values.end());
    if (sigma < 1e-6 || values.empty()) {
        return out;
    }
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    for (std::ptrdiff_t j = -radius; j <= radius; ++j) {
        kernel[static_cast<std::size_t>(j + radius)] =
            std::exp(-static_cast<double>(j * j) / (2.0 * sigma * sigma));
    }
    const auto n = static_cast<std::ptrdiff_t>(values.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double acc = 0.0;
        double weight = 0.0;
        for (std::ptrdiff_t j = -radius; j <= radius; ++j) {
            const auto k = i + j;
            if (k < 0 || k >= n) {
                continue;
            }
            const double w = kernel[static_cast<std::size_t>(j + radius)];
            acc += w * values[static_cast<std::size_t>(k)];
            weight += w;
        }
        out[static_cast<std::size_t>(i)] = acc / weight;
    }
    return out;
}

SeparationStats separation_stats(const TrajectoryCache & cache, const HepConfig & hep, std::size_t bins,
                                 double sigma, EntropyMode mode) {
    if (bins < 2) {
        throw std::invalid_argument("separation stats need at least 2 bins");
    }
    hep.validate();
    SeparationStats stats;
    stats.bins = bins;
    stats.sigma = sigma;

    struct Accumulator {
        std::vector<double> duration_sum;
        std::vector<std::size_t> counts;
        std::vector<double> centroids;
        std::size_t trajectories = 0;
    };
    Accumulator groups[2];
    for (auto & g : groups) {
        g.duration_sum.assign(bins, 0.0);
        g.counts.assign(bins, 0);
    }

    for (const auto & group : cache.groups()) {
        for (const auto & record : group.records) {
            require_label(record);
            auto & acc = groups[*record.label ? 0 : 1];
            ++acc.trajectories;
            const auto trace = trace_of(record, mode);
            const auto thresholds = compute_thresholds(trace, hep);
            const auto heps = detect_heps(trace, thresholds, hep.exit_k);
            if (heps.empty()) {
                continue;
            }
            const auto length = static_cast<double>(trace.length());
            for (const auto & h : heps) {
                const double position = h.position() / length;
                const auto bin = std::min(bins - 1, static_cast<std::size_t>(position * static_cast<double>(bins)));
                acc.duration_sum[bin] += static_cast<double>(h.mass());
                ++acc.counts[bin];
            }
            acc.centroids.push_back(compute_centroid(heps, trace.length()));
        }
    }

    auto finish = [&](Accumulator & acc) -> std::optional<LabelCurve> {
        if (acc.trajectories == 0) {
            return std::nullopt;
        }
        LabelCurve curve;
        curve.trajectories = acc.trajectories;
        curve.counts = acc.counts;
        curve.mean_duration.resize(bins);
        for (std::size_t b = 0; b < bins; ++b) {
            curve.mean_duration[b] = acc.counts[b] ? acc.duration_sum[b] / static_cast<double>(acc.counts[b]) : 0.0;
        }
        if (!acc.centroids.empty()) {
            curve.median_centroid = median(acc.centroids);
        }
        return curve;
    };
    stats.correct = finish(groups[0]);
    stats.incorrect = finish(groups[1]);
    if (stats.correct && stats.incorrect) {
        stats.difference.resize(bins);
        for (std::size_t b = 0; b < bins; ++b) {
            stats.difference[b] = stats.correct->mean_duration[b] - stats.incorrect->mean_duration[b];
        }
        stats.smoothed_difference = gaussian_smooth(stats.difference, sigma);
    }
    return stats;
}

std::vector<SweepRow> sweep(const TrajectoryCache & cache, const SelectionConfig & cfg,
                            std::span<const double> top_percents, std::span<const double> bottom_percents,
                            std::span<const std::size_t> exit_ks, std::size_t jobs) {
    std::vector<SweepRow> rows;
    for (double top : top_percents) {
        for (double bottom : bottom_percents) {
            for (std::size_t k : exit_ks) {
                HepConfig hep;
                hep.top_percent = top;
                hep.bottom_percent = bottom;
                hep.exit_k = k;
                const auto result = method_accuracy(cache, hep, cfg, jobs);
                rows.push_back(SweepRow{top, bottom, k, result.accuracy, result.skipped.size()});
            }
        }
    }
    return rows;
}

} // namespace hepsel
