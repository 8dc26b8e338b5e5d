// Acceptance gate: one PASS/FAIL line per criterion. Expected values and
// tolerances come from tests/oracle/synth_mc_oracle.py (24 independent
// corpora per quantity); a C++ corpus is one more draw from the same law,
// so bands are 95% prediction intervals, mean +- 1.96 sd sqrt(1 + 1/24),
// unless a criterion names a different width.

#include "oracles.hpp"

#include "hepsel/centroid.hpp"
#include "hepsel/cli.hpp"
#include "hepsel/harness.hpp"
#include "hepsel/rng.hpp"
#include "hepsel/selection.hpp"
#include "hepsel/synth.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>

using namespace hepsel;

namespace {

namespace oracle {
constexpr double median_gap_mean = 0.2040863963443087;
constexpr double median_gap_sd = 0.002276182750452992;
constexpr double lowest_centroid_mean = 0.9333333333333332;
constexpr double lowest_centroid_sd = 0.020781820371926364;
constexpr double sweep_range_mean = 0.051666666666666604;
constexpr double sweep_range_sd = 0.013242443839434624;
constexpr double spike_diff_mean = 0.020031249999999997;
constexpr double spike_diff_sd = 0.006034462846668791;
constexpr double reps = 24.0;
} // namespace oracle

constexpr double min_median_gap = 0.05;
constexpr double min_lift_over_random = 0.20;
constexpr std::uint64_t corpus_seed = 20240611;
constexpr std::size_t jobs = 0;

double prediction_halfwidth(double sd) { return 1.96 * sd * std::sqrt(1.0 + 1.0 / oracle::reps); }

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char * format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

// The 200 x 64 mixed front-is-correct corpus shared by criteria 4-7 and 9.
const TrajectoryCache & main_corpus() {
    static const TrajectoryCache cache = [] {
        SynthSpec spec;
        spec.seed = corpus_seed;
        return generate_corpus(spec, 200, 64, jobs);
    }();
    return cache;
}

const FeatureTable & main_table() {
    static const FeatureTable table = FeatureTable::build(main_corpus(), HepConfig{}, SelectionConfig{}, true, jobs);
    return table;
}

std::vector<double> random_trace(Rng & rng, std::size_t length) {
    // a coarse grid makes ties with the thresholds common
    const double levels = static_cast<double>(2 + uniform_index(rng, 30));
    std::vector<double> t(length);
    for (auto & v : t) {
        v = std::floor(uniform01(rng) * levels) / levels * 3.0;
    }
    return t;
}

Verdict hep_oracle_equivalence() {
    Rng rng(1);
    std::size_t mismatches = 0;
    std::size_t phases = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const auto t = random_trace(rng, 1 + uniform_index(rng, 500));
        const std::size_t k = 1 + uniform_index(rng, 5);
        double hi = t[uniform_index(rng, t.size())];
        double lo = t[uniform_index(rng, t.size())];
        if (uniform01(rng) < 0.3) {
            hi = 3.0 * uniform01(rng);
            lo = 3.0 * uniform01(rng);
        }
        if (lo > hi) {
            std::swap(lo, hi);
        }
        const auto got = detect_heps(t, Thresholds{hi, lo}, k);
        phases += got.size();
        mismatches += got == testing::naive_heps(t, hi, lo, k) ? 0 : 1;
    }
    return {mismatches == 0, fmt("10000 traces, %zu phases, %zu mismatches", phases, mismatches)};
}

Verdict centroid_unit_fidelity() {
    struct Case {
        std::vector<Hep> heps;
        std::size_t length;
        long num;
        long den;
    };
    const Case cases[] = {{{{1, 9}}, 9, 5, 9}, {{{2, 4}, {8, 10}}, 10, 3, 5}, {{{2, 4}}, 6, 1, 2}};
    double worst = 0.0;
    for (const auto & c : cases) {
        const double exact = static_cast<double>(c.num) / static_cast<double>(c.den);
        worst = std::max(worst, std::abs(compute_centroid(c.heps, c.length) - exact));
    }
    return {worst <= 1e-12, fmt("5/9, 3/5, 1/2 reproduced, max error %.3g (tol 1e-12)", worst)};
}

// Strictly increasing piecewise-linear map of [0, inf) onto [offset, inf).
struct PiecewiseLinear {
    std::vector<double> knots{0.0};
    std::vector<double> values;
    std::vector<double> slopes;

    explicit PiecewiseLinear(Rng & rng) {
        values.push_back(2.0 * uniform01(rng));
        const std::size_t pieces = 1 + uniform_index(rng, 6);
        for (std::size_t i = 0; i < pieces; ++i) {
            slopes.push_back(0.1 + 10.0 * uniform01(rng));
            if (i + 1 < pieces) {
                knots.push_back(knots.back() + 0.05 + uniform01(rng));
                values.push_back(values.back() + slopes.back() * (knots.back() - knots[knots.size() - 2]));
            }
        }
    }

    double operator()(double x) const {
        std::size_t piece = 0;
        while (piece + 1 < knots.size() && x >= knots[piece + 1]) {
            ++piece;
        }
        return values[piece] + slopes[piece] * (x - knots[piece]);
    }
};

Verdict monotone_invariance() {
    constexpr std::size_t traces = 1000;
    constexpr std::size_t transforms = 20;
    constexpr std::size_t group = 8;
    Rng rng(2);
    std::vector<std::vector<double>> base(traces);
    for (auto & t : base) {
        t = random_trace(rng, 1 + uniform_index(rng, 500));
        for (auto & v : t) {
            v = std::round(v * 64.0) / 64.0;
        }
    }

    auto score_all = [&](const std::function<double(double)> & f) {
        std::vector<TrajectoryRecord> records;
        std::vector<std::vector<Hep>> heps;
        for (std::size_t i = 0; i < traces; ++i) {
            std::vector<double> t(base[i].size());
            std::transform(base[i].begin(), base[i].end(), t.begin(), f);
            const EntropyTrace trace(t);
            heps.push_back(detect_heps(trace, compute_thresholds(trace, HepConfig{}), HepConfig{}.exit_k));
            TrajectoryRecord r;
            r.problem_id = "g" + std::to_string(i / group);
            r.sample_id = i % group;
            r.payload = trace;
            records.push_back(std::move(r));
        }
        std::vector<std::uint64_t> choices;
        for (std::size_t g = 0; g < traces / group; ++g) {
            const std::span<const TrajectoryRecord> members(records.data() + g * group, group);
            choices.push_back(lowest_centroid_select(members).chosen_sample_id);
        }
        std::vector<double> centroids;
        for (const auto & h : heps) {
            centroids.push_back(h.empty() ? -1.0 : compute_centroid(h, 1));
        }
        return std::tuple{heps, centroids, choices};
    };

    const auto reference = score_all([](double x) { return x; });
    std::size_t differing = 0;
    for (std::size_t j = 0; j < transforms; ++j) {
        const PiecewiseLinear f(rng);
        differing += score_all(f) == reference ? 0 : 1;
    }
    return {differing == 0,
            fmt("%zu traces x %zu transforms, %zu transforms changed phases, centroids or choices", traces, transforms,
                differing)};
}

Verdict mechanism_reproduction() {
    const auto stats = separation_stats(main_corpus(), HepConfig{});
    if (!stats.correct || !stats.incorrect || !stats.correct->median_centroid || !stats.incorrect->median_centroid) {
        return {false, "a label group is empty"};
    }
    const double correct = *stats.correct->median_centroid;
    const double incorrect = *stats.incorrect->median_centroid;
    const double gap = incorrect - correct;
    const double band = prediction_halfwidth(oracle::median_gap_sd);
    const bool pass = correct < incorrect && gap >= min_median_gap && std::abs(gap - oracle::median_gap_mean) <= band;
    return {pass, fmt("median correct %.4f < incorrect %.4f, gap %.4f (>= %.2f; oracle %.4f +- %.4f)", correct,
                      incorrect, gap, min_median_gap, oracle::median_gap_mean, band)};
}

Verdict selection_lift() {
    SelectionConfig cfg;
    const double lowest = *method_accuracy(main_table(), cfg, jobs).accuracy;
    cfg.method = Method::random;
    const double random = *method_accuracy(main_table(), cfg, jobs).accuracy;
    const double pass1 = pass_at_1(main_corpus());
    const double band = 3.0 * oracle::lowest_centroid_sd;
    const bool pass = lowest - random >= min_lift_over_random && lowest > pass1 &&
                      std::abs(lowest - oracle::lowest_centroid_mean) <= band;
    return {pass, fmt("lowest_centroid %.4f, random %.4f (lift %+.4f >= %.2f), pass@1 %.4f; oracle %.4f +- %.4f",
                      lowest, random, lowest - random, min_lift_over_random, pass1, oracle::lowest_centroid_mean,
                      band)};
}

Verdict scaling_behavior() {
    const std::vector<std::size_t> grid{1, 2, 4, 8, 16, 32, 64};
    constexpr std::size_t repeats = 50;
    SelectionConfig cfg;
    const auto lowest = scaling_curve(main_table(), cfg, grid, repeats, 7, jobs);
    cfg.method = Method::random;
    const auto random = scaling_curve(main_table(), cfg, grid, repeats, 7, jobs);
    const double pass1 = pass_at_1(main_corpus());

    bool monotone = true;
    for (std::size_t i = 1; i < lowest.size(); ++i) {
        const double noise = std::max(lowest[i].std_accuracy, lowest[i - 1].std_accuracy);
        monotone = monotone && lowest[i].mean_accuracy >= lowest[i - 1].mean_accuracy - noise;
    }
    bool random_flat = true;
    double worst_z = 0.0;
    for (const auto & p : random) {
        const double z = std::abs(p.mean_accuracy - pass1) / p.std_accuracy;
        worst_z = std::max(worst_z, z);
        random_flat = random_flat && std::abs(p.mean_accuracy - pass1) <= 3.0 * p.std_accuracy;
    }
    std::string curve;
    for (const auto & p : lowest) {
        curve += fmt("%s%zu:%.3f", curve.empty() ? "" : " ", p.n, p.mean_accuracy);
    }
    return {monotone && random_flat,
            fmt("lowest_centroid {%s} %s; random worst |z| vs pass@1 %.2f (<= 3)", curve.c_str(),
                monotone ? "non-decreasing within 1 std" : "DROPS", worst_z)};
}

Verdict hyperparameter_robustness() {
    const std::vector<double> tops{0.005, 0.01, 0.02, 0.05};
    const std::vector<double> bottoms{0.7, 0.8, 0.9};
    const std::vector<std::size_t> ks{1, 2, 3, 4};
    const auto rows = sweep(main_corpus(), SelectionConfig{}, tops, bottoms, ks, jobs);
    double lo = 1.0;
    double hi = 0.0;
    for (const auto & r : rows) {
        if (!r.accuracy) {
            return {false, "a grid point evaluated no problem"};
        }
        lo = std::min(lo, *r.accuracy);
        hi = std::max(hi, *r.accuracy);
    }
    const double bound = oracle::sweep_range_mean + 3.0 * oracle::sweep_range_sd;
    return {rows.size() == 48 && hi - lo < bound,
            fmt("%zu settings, accuracy %.4f..%.4f, range %.4f (< %.4f)", rows.size(), lo, hi, hi - lo, bound)};
}

Verdict filter_discipline() {
    Rng rng(3);
    std::size_t emptied = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t n = 1 + uniform_index(rng, 64);
        std::vector<FilterCandidate> pool;
        for (std::size_t i = 0; i < n; ++i) {
            std::optional<double> c;
            if (uniform01(rng) < 0.9) {
                c = uniform01(rng) < 0.2 ? 0.5 : uniform01(rng);
            }
            pool.push_back(FilterCandidate{i, c, uniform01(rng) < 0.2});
        }
        const double tau = uniform01(rng) < 0.1 ? std::numeric_limits<double>::infinity() : 0.05 + 3.0 * uniform01(rng);
        emptied += filter_outliers(pool, tau, uniform01(rng) < 0.5).survivors.empty() ? 1 : 0;
    }
    SynthSpec spec;
    spec.seed = corpus_seed + 1;
    const auto clean = generate_corpus(spec, 100, 16, jobs);
    SelectionConfig cfg;
    cfg.outlier_tau = std::numeric_limits<double>::infinity();
    const double impact = filter_impact(clean, HepConfig{}, cfg, jobs);
    return {emptied == 0 && impact == 0.0,
            fmt("10000 pools, %zu emptied; clean-corpus filter impact at tau=inf %.17g", emptied, impact)};
}

Verdict determinism() {
    const auto dir = std::filesystem::temp_directory_path() / "hepsel_acceptance";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    write_cache(main_corpus(), dir / "corpus.jsonl");
    auto eval = [&](const char * name, const char * jobs_flag) {
        std::ostringstream out;
        std::ostringstream err;
        const std::vector<std::string> args{"hepsel",  "eval",   "-i",      (dir / "corpus.jsonl").string(),
                                            "-o",      (dir / name).string(), "--seed", "5",
                                            "--jobs",  jobs_flag, "--filter-impact", "--methods",
                                            "lowest_centroid,raw_centroid,self_certainty,random"};
        const int code = cli::run(args, out, err);
        std::ifstream in(dir / name, std::ios::binary);
        std::ostringstream bytes;
        bytes << in.rdbuf();
        return std::pair{code, bytes.str()};
    };
    const auto first = eval("first.json", "1");
    const auto second = eval("second.json", "0");
    const bool pass = first.first == 0 && second.first == 0 && !first.second.empty() && first.second == second.second;
    return {pass, fmt("two eval runs (1 job, all cores): exit %d/%d, %zu bytes, %s", first.first, second.first,
                      first.second.size(), first.second == second.second ? "identical" : "DIFFERENT")};
}

Verdict hep_vs_raw_ablation() {
    SynthSpec spec;
    spec.seed = corpus_seed + 2;
    spec.spike_rate = 0.25;
    spec.spike_entropy = 1.5;
    const auto cache = generate_corpus(spec, 4000, 16, jobs);
    const auto table = FeatureTable::build(cache, HepConfig{}, SelectionConfig{}, true, jobs);
    SelectionConfig cfg;
    const double hep = *method_accuracy(table, cfg, jobs).accuracy;
    cfg.method = Method::raw_centroid;
    const double raw = *method_accuracy(table, cfg, jobs).accuracy;
    return {hep >= raw, fmt("spike corpus 4000x16: HEP centroid %.4f >= raw centroid %.4f (%+.4f; oracle %+.4f +- %.4f)",
                            hep, raw, hep - raw, oracle::spike_diff_mean, prediction_halfwidth(oracle::spike_diff_sd))};
}

struct Criterion {
    int id;
    const char * name;
    double budget_seconds;
    Verdict (*run)();
};

} // namespace

int main() {
    const Criterion criteria[] = {
        {1, "HEP oracle equivalence", 10, hep_oracle_equivalence},
        {2, "centroid unit fidelity", 1, centroid_unit_fidelity},
        {3, "monotone invariance", 30, monotone_invariance},
        {4, "mechanism reproduction", 120, mechanism_reproduction},
        {5, "selection lift", 120, selection_lift},
        {6, "scaling behavior", 300, scaling_behavior},
        {7, "hyperparameter robustness", 600, hyperparameter_robustness},
        {8, "filter discipline", 10, filter_discipline},
        {9, "determinism", 120, determinism},
        {10, "HEP-vs-raw ablation direction", 120, hep_vs_raw_ablation},
    };
    int failures = 0;
    for (const auto & c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception & e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = seconds < c.budget_seconds;
        const bool pass = v.pass && in_time;
        failures += pass ? 0 : 1;
        std::printf("%s [%d] %s: %s (%.2fs, budget %.0fs%s)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    v.detail.c_str(), seconds, c.budget_seconds, in_time ? "" : ", OVER BUDGET");
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures, std::size(criteria));
    return failures == 0 ? 0 : 1;
}
