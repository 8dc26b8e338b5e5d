#include "hepsel/cli.hpp"

#include "hepsel/centroid.hpp"
#include "hepsel/errors.hpp"
#include "hepsel/harness.hpp"
#include "hepsel/report.hpp"
#include "hepsel/selection.hpp"
#include "hepsel/synth.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

namespace hepsel::cli {

namespace {

enum class LogLevel { error, warn, info, debug };

struct Options {
    std::string input;
    std::string output = "-";
    std::string scores;
    std::string config;
    std::string dataset;
    std::string log_level;
    std::string method = "lowest_centroid";
    std::vector<std::string> methods{"lowest_centroid", "self_certainty", "tail_confidence", "bottom_window",
                                     "random"};

    HepConfig hep;
    std::vector<double> absolute_thresholds;
    bool renormalize = false;

    std::string outlier_tau = "2.0";
    bool no_structural_filter = false;
    std::size_t window = 1024;
    std::size_t topk = 10;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;

    std::vector<std::size_t> n_grid;
    std::size_t repeats = 50;
    std::size_t bins = 50;
    double sigma = 2.0;
    bool filter_impact = false;

    std::vector<double> top_percents{0.005, 0.01, 0.02, 0.05};
    std::vector<double> bottom_percents{0.7, 0.8, 0.9};
    std::vector<std::size_t> exit_ks{1, 2, 3, 4};

    std::string pattern;
    std::size_t problems = 100;
    std::size_t samples = 64;
    std::string label_rule;
    double spike_rate = -1.0;
    double junk_rate = -1.0;
    bool seed_given = false;
};

class Context {
public:
    Context(const Options & opts, std::ostream & out, std::ostream & err) : opts(opts), out(out), err(err) {
        std::string level = opts.log_level;
        if (level.empty()) {
            if (const char * env = std::getenv("HEPSEL_LOG")) {
                level = env;
            }
        }
        if (level == "error") {
            log_level = LogLevel::error;
        } else if (level == "info") {
            log_level = LogLevel::info;
        } else if (level == "debug") {
            log_level = LogLevel::debug;
        }
    }

    void log(LogLevel level, const std::string & message) const {
        if (level <= log_level) {
            static constexpr const char * names[] = {"error", "warn", "info", "debug"};
            err << names[static_cast<int>(level)] << ": " << message << '\n';
        }
    }

    HepConfig hep() const {
        HepConfig cfg = opts.hep;
        if (!opts.absolute_thresholds.empty()) {
            cfg.absolute = Thresholds{opts.absolute_thresholds[0], opts.absolute_thresholds[1]};
        }
        cfg.validate();
        return cfg;
    }

    SelectionConfig selection(Method method) const {
        SelectionConfig cfg;
        cfg.method = method;
        cfg.outlier_tau = parse_tau(opts.outlier_tau);
        cfg.structural_filter = !opts.no_structural_filter;
        cfg.window_w = opts.window;
        cfg.topk_for_confidence = opts.topk;
        cfg.rng_seed = opts.seed;
        cfg.entropy_mode = opts.renormalize ? EntropyMode::renormalized : EntropyMode::raw;
        cfg.validate();
        return cfg;
    }

    TrajectoryCache read_input() const {
        try {
            return read_cache(std::filesystem::path(opts.input));
        } catch (const parse_error & e) {
            throw error(opts.input + ": " + e.what());
        }
    }

    std::string dataset() const {
        return opts.dataset.empty() ? std::filesystem::path(opts.input).stem().string() : opts.dataset;
    }

    // Writes to the output path, or to `out` for "-".
    void write_output(const std::string & text) const {
        if (opts.output == "-") {
            out << text;
        } else {
            write_text(opts.output, text);
        }
    }

    static double parse_tau(const std::string & text) {
        if (text == "inf" || text == "infinity") {
            return std::numeric_limits<double>::infinity();
        }
        std::size_t used = 0;
        double tau = 0.0;
        try {
            tau = std::stod(text, &used);
        } catch (const std::exception &) {
            used = 0;
        }
        if (used != text.size()) {
            throw std::invalid_argument("--outlier-tau expects a number or 'inf'");
        }
        return tau;
    }

    const Options & opts;
    std::ostream & out;
    std::ostream & err;
    LogLevel log_level = LogLevel::warn;
};

std::vector<Method> parse_methods(const std::vector<std::string> & names) {
    std::vector<Method> methods;
    for (const auto & name : names) {
        methods.push_back(parse_method(name));
    }
    return methods;
}

nlohmann::ordered_json score_json(const TrajectoryRecord & record, const HepConfig & hep, EntropyMode mode) {
    const auto trace = trace_of(record, mode);
    const auto thresholds = compute_thresholds(trace, hep);
    const auto heps = detect_heps(trace, thresholds, hep.exit_k);

    nlohmann::ordered_json j;
    j["problem_id"] = record.problem_id;
    j["sample_id"] = record.sample_id;
    j["length"] = trace.length();
    j["theta_high"] = thresholds.theta_high;
    j["theta_low"] = thresholds.theta_low;
    j["centroid"] = heps.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(compute_centroid(heps, trace.length()));
    try {
        j["raw_centroid"] = raw_entropy_centroid(trace);
    } catch (const no_centroid_error &) {
        j["raw_centroid"] = nullptr;
    }
    auto spans = nlohmann::ordered_json::array();
    for (const auto & h : heps) {
        spans.push_back({h.start, h.end});
    }
    j["heps"] = std::move(spans);
    j["entropies"] = std::vector<double>(trace.values().begin(), trace.values().end());
    return j;
}

int cmd_validate(const Context & ctx) {
    const auto cache = ctx.read_input();
    std::size_t labeled = 0;
    std::size_t topk = 0;
    for (const auto & g : cache.groups()) {
        for (const auto & r : g.records) {
            labeled += r.label ? 1 : 0;
            topk += r.has_topk() ? 1 : 0;
            trace_of(r); // entropy estimation must succeed too
        }
    }
    ctx.out << "ok: " << cache.record_count() << " records, " << cache.groups().size() << " problems, " << labeled
            << " labeled, " << topk << " with topk_logprobs\n";
    return exit_ok;
}

int cmd_score(const Context & ctx) {
    const auto cache = ctx.read_input();
    const auto hep = ctx.hep();
    const auto mode = ctx.opts.renormalize ? EntropyMode::renormalized : EntropyMode::raw;
    std::ostringstream text;
    for (const auto & g : cache.groups()) {
        for (const auto & r : g.records) {
            text << score_json(r, hep, mode).dump() << '\n';
        }
    }
    ctx.write_output(text.str());
    return exit_ok;
}

// (problem_id, sample_id) -> (centroid, raw_centroid) from a `score` output file.
using ScoreIndex = std::map<std::pair<std::string, std::uint64_t>, std::pair<std::optional<double>, std::optional<double>>>;

ScoreIndex read_scores(const std::string & path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open " + path);
    }
    ScoreIndex index;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            auto value = [&](const char * key) -> std::optional<double> {
                const auto & v = j.at(key);
                return v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
            };
            index[{j.at("problem_id").get<std::string>(), j.at("sample_id").get<std::uint64_t>()}] = {
                value("centroid"), value("raw_centroid")};
        } catch (const nlohmann::json::exception & e) {
            throw error(path + ": line " + std::to_string(line_number) + ": " + e.what());
        }
    }
    return index;
}

int cmd_select(const Context & ctx) {
    const auto cache = ctx.read_input();
    const auto hep = ctx.hep();
    const auto cfg = ctx.selection(parse_method(ctx.opts.method));
    std::optional<ScoreIndex> scores;
    if (!ctx.opts.scores.empty()) {
        scores = read_scores(ctx.opts.scores);
    }

    std::ostringstream text;
    for (const auto & g : cache.groups()) {
        std::vector<CandidateFeatures> features;
        for (const auto & r : g.records) {
            auto f = compute_features(r, hep, cfg);
            if (scores) {
                auto it = scores->find({r.problem_id, r.sample_id});
                if (it == scores->end()) {
                    throw error(ctx.opts.scores + ": no score for (" + r.problem_id + ", " +
                                std::to_string(r.sample_id) + ")");
                }
                f.centroid = it->second.first;
                f.raw_centroid = it->second.second;
            }
            features.push_back(std::move(f));
        }
        std::vector<const CandidateFeatures *> view;
        for (const auto & f : features) {
            view.push_back(&f);
        }
        try {
            const auto result = select_features(g.problem_id, view, cfg, problem_stream(cfg.rng_seed, g.problem_id));
            text << to_json(result).dump() << '\n';
        } catch (const error & e) {
            ctx.log(LogLevel::warn, "problem " + g.problem_id + " skipped: " + e.what());
        }
    }
    ctx.write_output(text.str());
    return exit_ok;
}

void require_output(const Context & ctx) {
    if (ctx.opts.output == "-") {
        throw std::invalid_argument("--output is required for this subcommand");
    }
}

int cmd_eval(const Context & ctx) {
    require_output(ctx);
    const auto cache = ctx.read_input();
    const auto hep = ctx.hep();
    const auto methods = parse_methods(ctx.opts.methods);
    const auto table = FeatureTable::build(cache, hep, ctx.selection(Method::lowest_centroid), true, ctx.opts.jobs);

    Report report;
    const auto dataset = ctx.dataset();
    const auto n = cache.max_group_size();
    report.rows.push_back(AccuracyRow{"pass_at_1", dataset, n, 1, pass_at_1(cache), 0.0});
    auto skipped = nlohmann::ordered_json::object();
    auto impact = nlohmann::ordered_json::object();
    for (auto method : methods) {
        const auto cfg = ctx.selection(method);
        const auto result = method_accuracy(table, cfg, ctx.opts.jobs);
        report.rows.push_back(AccuracyRow{std::string(to_string(method)), dataset, n, 1, result.accuracy, 0.0});
        if (!result.skipped.empty()) {
            auto list = nlohmann::ordered_json::array();
            for (const auto & s : result.skipped) {
                list.push_back({{"problem_id", s.problem_id}, {"reason", s.reason}});
            }
            skipped[std::string(to_string(method))] = std::move(list);
            ctx.log(LogLevel::warn, std::string(to_string(method)) + ": " + std::to_string(result.skipped.size()) +
                                        " problem(s) skipped, first: " + result.skipped.front().reason);
        }
        if (ctx.opts.filter_impact && (method == Method::lowest_centroid || method == Method::raw_centroid)) {
            try {
                impact[std::string(to_string(method))] = filter_impact(table, cfg, ctx.opts.jobs);
            } catch (const error &) {
                impact[std::string(to_string(method))] = nullptr;
            }
        }
    }
    if (!skipped.empty()) {
        report.notes["skipped"] = std::move(skipped);
    }
    if (!impact.empty()) {
        report.notes["filter_impact"] = std::move(impact);
    }
    emit_report(report, ctx.opts.output, format_for(ctx.opts.output));
    return exit_ok;
}

int cmd_scale(const Context & ctx) {
    require_output(ctx);
    const auto cache = ctx.read_input();
    const auto hep = ctx.hep();
    const auto table = FeatureTable::build(cache, hep, ctx.selection(Method::lowest_centroid), true, ctx.opts.jobs);
    auto grid = ctx.opts.n_grid;
    if (grid.empty()) {
        for (std::size_t n = 1; n <= table.min_group_size(); n *= 2) {
            grid.push_back(n);
        }
    }
    Report report;
    const auto dataset = ctx.dataset();
    for (auto method : parse_methods(ctx.opts.methods)) {
        const auto points = scaling_curve(table, ctx.selection(method), grid, ctx.opts.repeats, ctx.opts.seed,
                                          ctx.opts.jobs);
        for (const auto & p : points) {
            report.rows.push_back(AccuracyRow{std::string(to_string(method)), dataset, p.n, p.repeats,
                                              p.mean_accuracy, p.std_accuracy});
        }
    }
    emit_report(report, ctx.opts.output, format_for(ctx.opts.output));
    return exit_ok;
}

int cmd_stats(const Context & ctx) {
    require_output(ctx);
    const auto cache = ctx.read_input();
    const auto mode = ctx.opts.renormalize ? EntropyMode::renormalized : EntropyMode::raw;
    const auto stats = separation_stats(cache, ctx.hep(), ctx.opts.bins, ctx.opts.sigma, mode);

    std::vector<Curve> curves;
    auto add_curve = [&](const std::string & name, const std::vector<double> & values) {
        Curve c{name, {}};
        for (std::size_t b = 0; b < values.size(); ++b) {
            c.points.emplace_back(stats.bin_center(b), values[b]);
        }
        curves.push_back(std::move(c));
    };
    if (stats.correct) {
        add_curve("correct", stats.correct->mean_duration);
    }
    if (stats.incorrect) {
        add_curve("incorrect", stats.incorrect->mean_duration);
    }
    if (!stats.difference.empty()) {
        add_curve("difference", stats.difference);
        add_curve("smoothed_difference", stats.smoothed_difference);
    }

    auto group_json = [](const std::optional<LabelCurve> & g) {
        nlohmann::ordered_json j;
        if (!g) {
            j["present"] = false;
            return j;
        }
        j["present"] = true;
        j["trajectories"] = g->trajectories;
        j["median_centroid"] = to_json_or_null(g->median_centroid);
        return j;
    };

    const std::filesystem::path path = ctx.opts.output;
    if (format_for(path) == ReportFormat::json) {
        nlohmann::ordered_json doc;
        doc["bins"] = stats.bins;
        doc["sigma"] = stats.sigma;
        doc["correct"] = group_json(stats.correct);
        doc["incorrect"] = group_json(stats.incorrect);
        Report r;
        r.curves = curves;
        doc["curves"] = report_to_json(r)["curves"];
        write_text(path, doc.dump(2) + "\n");
    } else {
        std::ostringstream summary;
        summary << "group,trajectories,median_centroid\n";
        for (const auto & [name, g] : {std::pair{"correct", &stats.correct}, std::pair{"incorrect", &stats.incorrect}}) {
            if (*g) {
                summary << name << ',' << (*g)->trajectories << ','
                        << ((*g)->median_centroid ? format_number(*(*g)->median_centroid) : "") << '\n';
            }
        }
        write_text(path, summary.str());
        for (const auto & c : curves) {
            write_curve_csv(c, curve_path(path, c.name));
        }
    }
    if (!stats.correct || !stats.incorrect) {
        ctx.log(LogLevel::warn, std::string("label group absent: ") + (stats.correct ? "incorrect" : "correct"));
    }
    return exit_ok;
}

int cmd_sweep(const Context & ctx) {
    require_output(ctx);
    const auto cache = ctx.read_input();
    const auto cfg = ctx.selection(parse_method(ctx.opts.method));
    for (double p : ctx.opts.top_percents) {
        HepConfig{p, 0.5, 1, {}}.validate();
    }
    for (double p : ctx.opts.bottom_percents) {
        HepConfig{0.5, p, 1, {}}.validate();
    }
    for (auto k : ctx.opts.exit_ks) {
        HepConfig{0.5, 0.5, k, {}}.validate();
    }
    const auto rows = sweep(cache, cfg, ctx.opts.top_percents, ctx.opts.bottom_percents, ctx.opts.exit_ks,
                            ctx.opts.jobs);

    std::optional<double> lo;
    std::optional<double> hi;
    for (const auto & r : rows) {
        if (r.accuracy) {
            lo = lo ? std::min(*lo, *r.accuracy) : *r.accuracy;
            hi = hi ? std::max(*hi, *r.accuracy) : *r.accuracy;
        }
    }
    const std::filesystem::path path = ctx.opts.output;
    if (format_for(path) == ReportFormat::json) {
        nlohmann::ordered_json doc;
        doc["method"] = std::string(to_string(cfg.method));
        auto list = nlohmann::ordered_json::array();
        for (const auto & r : rows) {
            list.push_back({{"top_percent", r.top_percent},
                            {"bottom_percent", r.bottom_percent},
                            {"exit_k", r.exit_k},
                            {"accuracy", to_json_or_null(r.accuracy)},
                            {"skipped", r.skipped}});
        }
        doc["rows"] = std::move(list);
        doc["min"] = to_json_or_null(lo);
        doc["max"] = to_json_or_null(hi);
        doc["range"] = to_json_or_null(lo ? std::optional<double>(*hi - *lo) : std::nullopt);
        write_text(path, doc.dump(2) + "\n");
    } else {
        std::ostringstream text;
        text << "top_percent,bottom_percent,exit_k,accuracy\n";
        for (const auto & r : rows) {
            text << format_number(r.top_percent) << ',' << format_number(r.bottom_percent) << ',' << r.exit_k << ','
                 << (r.accuracy ? format_number(*r.accuracy) : "") << '\n';
        }
        write_text(path, text.str());
    }
    if (lo) {
        ctx.out << "accuracy range " << format_number(*hi - *lo) << " (min " << format_number(*lo) << ", max "
                << format_number(*hi) << ") over " << rows.size() << " settings\n";
    }
    return exit_ok;
}

int cmd_synth(const Context & ctx) {
    const auto & o = ctx.opts;
    SynthSpec spec;
    std::size_t problems = o.problems;
    std::size_t samples = o.samples;
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) {
            throw io_error("cannot open " + o.config);
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception & e) {
            throw error(o.config + ": " + e.what());
        }
        spec = synth_spec_from_json(j);
        problems = j.value("problems", problems);
        samples = j.value("samples_per_problem", samples);
    }
    if (!o.pattern.empty()) {
        spec.pattern = parse_synth_pattern(o.pattern);
    }
    if (!o.label_rule.empty()) {
        spec = synth_spec_from_json([&] {
            auto j = nlohmann::json(to_json(spec));
            j["label_rule"] = o.label_rule;
            return j;
        }());
    }
    if (o.seed_given) {
        spec.seed = o.seed;
    }
    if (o.spike_rate >= 0.0) {
        spec.spike_rate = o.spike_rate;
    }
    if (o.junk_rate >= 0.0) {
        spec.junk_rate = o.junk_rate;
    }
    const auto cache = generate_corpus(spec, problems, samples, o.jobs);
    if (o.output == "-") {
        write_cache(cache, ctx.out);
    } else {
        write_cache(cache, std::filesystem::path(o.output));
    }
    return exit_ok;
}

void add_hep_flags(CLI::App & cmd, Options & o) {
    cmd.add_option("--top-percent", o.hep.top_percent, "Fraction of highest-entropy tokens that trigger a phase")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    cmd.add_option("--bottom-percent", o.hep.bottom_percent, "Percentile at or below which a token counts as low")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    cmd.add_option("--exit-k", o.hep.exit_k, "Consecutive low tokens that close a phase")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd.add_option("--absolute-thresholds", o.absolute_thresholds,
                   "Fixed THETA_HIGH THETA_LOW instead of per-trajectory percentiles (experimentation only)")
        ->expected(2);
    cmd.add_flag("--renormalize", o.renormalize, "Renormalize top-k probabilities before the entropy sum");
}

void add_selection_flags(CLI::App & cmd, Options & o) {
    cmd.add_option("--outlier-tau", o.outlier_tau, "Centroid z-score cut ('inf' disables)")->capture_default_str();
    cmd.add_flag("--no-structural-filter", o.no_structural_filter,
                 "Keep candidates whose finish_reason is not 'stop'");
    cmd.add_option("--window", o.window, "Confidence window size in tokens")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd.add_option("--topk", o.topk, "Logprobs per token used for token confidence")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd.add_option("--seed", o.seed, "Random seed")->capture_default_str();
}

void add_common(CLI::App & cmd, Options & o, bool needs_input = true) {
    if (needs_input) {
        cmd.add_option("-i,--input", o.input, "Trajectory cache (JSONL)")->required()->check(CLI::ExistingFile);
    }
    cmd.add_option("-j,--jobs", o.jobs, "Worker threads (0 = all cores)")->capture_default_str();
    cmd.add_option("--log-level", o.log_level, "error|warn|info|debug (default from HEPSEL_LOG, else warn)")
        ->check(CLI::IsMember({"error", "warn", "info", "debug"}));
}

} // namespace

int run(const std::vector<std::string> & args, std::ostream & out, std::ostream & err) {
    Options o;
    CLI::App app{"Best-of-N trajectory selection with entropy centroids"};
    app.name(args.empty() ? "hepsel" : std::filesystem::path(args[0]).filename().string());
    app.require_subcommand(1);
    app.get_formatter()->column_width(40);

    auto * validate = app.add_subcommand("validate", "Schema-check a trajectory cache");
    add_common(*validate, o);

    auto * score = app.add_subcommand("score", "Per-trajectory thresholds, phases and centroids as JSONL");
    add_common(*score, o);
    add_hep_flags(*score, o);
    score->add_option("-o,--output", o.output, "Output JSONL ('-' for stdout)")->capture_default_str();

    auto * select = app.add_subcommand("select", "Choose one trajectory per problem");
    add_common(*select, o);
    add_hep_flags(*select, o);
    add_selection_flags(*select, o);
    select->add_option("-m,--method", o.method, "Selection method")->capture_default_str();
    select->add_option("--scores", o.scores, "Reuse centroids from a `score` output")->check(CLI::ExistingFile);
    select->add_option("-o,--output", o.output, "Output JSONL ('-' for stdout)")->capture_default_str();

    auto * eval = app.add_subcommand("eval", "Accuracy table for a set of methods on a labeled cache");
    add_common(*eval, o);
    add_hep_flags(*eval, o);
    add_selection_flags(*eval, o);
    eval->add_option("--methods", o.methods, "Methods to evaluate")->delimiter(',')->capture_default_str();
    eval->add_option("--dataset", o.dataset, "Dataset name for the report (default: input file stem)");
    eval->add_flag("--filter-impact", o.filter_impact, "Also report accuracy with minus without outlier filtering");
    eval->add_option("-o,--output", o.output, "Report path (.csv or .json)");

    auto * scale = app.add_subcommand("scale", "Accuracy versus number of sampled candidates");
    add_common(*scale, o);
    add_hep_flags(*scale, o);
    add_selection_flags(*scale, o);
    scale->add_option("--methods", o.methods, "Methods to evaluate")->delimiter(',')->capture_default_str();
    scale->add_option("--n-grid", o.n_grid, "Candidate counts (default: powers of two up to the smallest group)")
        ->delimiter(',');
    scale->add_option("-R,--repeats", o.repeats, "Subsampling repeats per n")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    scale->add_option("--dataset", o.dataset, "Dataset name for the report (default: input file stem)");
    scale->add_option("-o,--output", o.output, "Report path (.csv or .json)");

    auto * stats = app.add_subcommand("stats", "Phase-duration curves and centroid medians by label");
    add_common(*stats, o);
    add_hep_flags(*stats, o);
    stats->add_option("--bins", o.bins, "Position bins")->capture_default_str()->check(CLI::Range(2, 1 << 20));
    stats->add_option("--sigma", o.sigma, "Gaussian smoothing width in bins")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    stats->add_option("-o,--output", o.output, "Summary path (.csv plus per-curve CSVs, or .json)");

    auto * sweep_cmd = app.add_subcommand("sweep", "Accuracy over a grid of phase parameters");
    add_common(*sweep_cmd, o);
    add_selection_flags(*sweep_cmd, o);
    sweep_cmd->add_option("-m,--method", o.method, "Selection method")->capture_default_str();
    sweep_cmd->add_option("--top-percents", o.top_percents, "top_percent grid")->delimiter(',')->capture_default_str();
    sweep_cmd->add_option("--bottom-percents", o.bottom_percents, "bottom_percent grid")
        ->delimiter(',')
        ->capture_default_str();
    sweep_cmd->add_option("--exit-ks", o.exit_ks, "exit_k grid")->delimiter(',')->capture_default_str();
    sweep_cmd->add_flag("--renormalize", o.renormalize, "Renormalize top-k probabilities before the entropy sum");
    sweep_cmd->add_option("-o,--output", o.output, "Table path (.csv or .json)");

    auto * synth = app.add_subcommand("synth", "Generate a synthetic labeled cache");
    add_common(*synth, o, false);
    synth->add_option("--config", o.config, "Synthetic spec (JSON)")->check(CLI::ExistingFile);
    synth->add_option("--pattern", o.pattern, "front_loaded|back_loaded|uniform|mixed (default mixed)");
    synth->add_option("--problems", o.problems, "Number of problems")->capture_default_str();
    synth->add_option("--samples", o.samples, "Samples per problem")->capture_default_str();
    synth->add_option("--label-rule", o.label_rule, "front_is_correct | independent(P)");
    synth->add_option("--spike-rate", o.spike_rate, "Per-token spike probability outside bursts (default 0)");
    synth->add_option("--junk-rate", o.junk_rate, "Fraction of repetition-loop trajectories (default 0)");
    synth->add_option("--seed", o.seed, "Random seed (default 0)")->each([&](const std::string &) {
        o.seed_given = true;
    });
    synth->add_option("-o,--output", o.output, "Output JSONL ('-' for stdout)")->capture_default_str();

    std::vector<std::string> argv_rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(argv_rest.begin(), argv_rest.end());
    try {
        app.parse(argv_rest);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError & e) {
        err << "usage error: " << e.what() << "\n\n";
        const auto * sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << sub->help();
        return exit_usage;
    }

    Context ctx(o, out, err);
    try {
        if (*validate) {
            return cmd_validate(ctx);
        }
        if (*score) {
            return cmd_score(ctx);
        }
        if (*select) {
            return cmd_select(ctx);
        }
        if (*eval) {
            return cmd_eval(ctx);
        }
        if (*scale) {
            return cmd_scale(ctx);
        }
        if (*stats) {
            return cmd_stats(ctx);
        }
        if (*sweep_cmd) {
            return cmd_sweep(ctx);
        }
        if (*synth) {
            return cmd_synth(ctx);
        }
    } catch (const std::invalid_argument & e) {
        err << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const error & e) {
        err << "error: " << e.what() << '\n';
        return exit_data;
    }
    return exit_usage;
}

int run(int argc, const char * const * argv) {
    std::vector<std::string> args(argv, argv + argc);
    return run(args, std::cout, std::cerr);
}

} // namespace hepsel::cli
