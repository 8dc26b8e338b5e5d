#include "hepsel/centroid.hpp"
#include "hepsel/cli.hpp"
#include "hepsel/errors.hpp"
#include "hepsel/harness.hpp"
#include "hepsel/selection.hpp"
#include "hepsel/synth.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace hepsel;

namespace {

HepConfig make_hep(double top_percent, double bottom_percent, std::size_t exit_k) {
    HepConfig cfg{top_percent, bottom_percent, exit_k, std::nullopt};
    cfg.validate();
    return cfg;
}

SelectionConfig make_selection(const std::string & method, double outlier_tau, bool structural_filter,
                               std::size_t window, std::size_t topk, std::uint64_t seed) {
    SelectionConfig cfg;
    cfg.method = parse_method(method);
    cfg.outlier_tau = outlier_tau;
    cfg.structural_filter = structural_filter;
    cfg.window_w = window;
    cfg.topk_for_confidence = topk;
    cfg.rng_seed = seed;
    cfg.validate();
    return cfg;
}

py::dict selection_dict(const SelectionResult & r) {
    py::dict scores;
    for (const auto & [id, score] : r.scores) {
        scores[py::int_(id)] = score ? py::object(py::float_(*score)) : py::object(py::none());
    }
    py::list filtered;
    for (const auto & f : r.filtered) {
        filtered.append(py::make_tuple(f.sample_id, std::string(to_string(f.reason))));
    }
    py::dict d;
    d["problem_id"] = r.problem_id;
    d["method"] = std::string(to_string(r.method));
    d["chosen_sample_id"] = r.chosen_sample_id;
    d["scores"] = scores;
    d["filtered"] = filtered;
    return d;
}

#define HEP_ARGS                                                                                                       \
    py::arg("top_percent") = 0.01, py::arg("bottom_percent") = 0.80, py::arg("exit_k") = 2
#define SELECTION_ARGS                                                                                                 \
    py::arg("method") = "lowest_centroid", py::arg("outlier_tau") = 2.0, py::arg("structural_filter") = true,         \
    py::arg("window") = 1024, py::arg("topk") = 10, py::arg("seed") = 0

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Entropy-centroid trajectory selection.";

    py::register_exception<error>(m, "Error", PyExc_ValueError);

    py::class_<Hep>(m, "Hep")
        .def(py::init<std::size_t, std::size_t>(), py::arg("start"), py::arg("end"))
        .def_readonly("start", &Hep::start)
        .def_readonly("end", &Hep::end)
        .def_property_readonly("mass", &Hep::mass)
        .def_property_readonly("position", &Hep::position)
        .def("__eq__", [](const Hep & a, const Hep & b) { return a == b; })
        .def("__repr__", [](const Hep & h) {
            return "Hep(" + std::to_string(h.start) + ", " + std::to_string(h.end) + ")";
        });

    m.def(
        "entropy_from_topk",
        [](const std::vector<double> & logprobs, bool renormalize) {
            validate_token_logprobs(logprobs);
            return entropy_from_topk(logprobs, renormalize ? EntropyMode::renormalized : EntropyMode::raw);
        },
        py::arg("logprobs"), py::arg("renormalize") = false);

    m.def(
        "compute_thresholds",
        [](const std::vector<double> & entropies, double top_percent, double bottom_percent) {
            const auto thr = compute_thresholds(EntropyTrace(entropies), make_hep(top_percent, bottom_percent, 1));
            return py::make_tuple(thr.theta_high, thr.theta_low);
        },
        py::arg("entropies"), py::arg("top_percent") = 0.01, py::arg("bottom_percent") = 0.80);

    m.def(
        "detect_heps",
        [](const std::vector<double> & entropies, double theta_high, double theta_low, std::size_t exit_k) {
            if (exit_k < 1) {
                throw std::invalid_argument("exit_k must be >= 1");
            }
            return detect_heps(EntropyTrace(entropies), Thresholds{theta_high, theta_low}, exit_k);
        },
        py::arg("entropies"), py::arg("theta_high"), py::arg("theta_low"), py::arg("exit_k") = 2);

    m.def(
        "compute_centroid", [](const std::vector<Hep> & heps, std::size_t length) { return compute_centroid(heps, length); },
        py::arg("heps"), py::arg("length"));

    m.def(
        "raw_entropy_centroid", [](const std::vector<double> & entropies) { return raw_entropy_centroid(entropies); },
        py::arg("entropies"));

    m.def(
        "score",
        [](const std::vector<double> & entropies, double top_percent, double bottom_percent, std::size_t exit_k) {
            const auto s = score_trace(EntropyTrace(entropies), make_hep(top_percent, bottom_percent, exit_k));
            py::dict d;
            d["centroid"] = s.value;
            d["heps"] = s.heps;
            d["theta_high"] = s.thresholds.theta_high;
            d["theta_low"] = s.thresholds.theta_low;
            d["length"] = s.length;
            return d;
        },
        py::arg("entropies"), HEP_ARGS);

    m.def(
        "filter_outliers",
        [](const std::vector<std::optional<double>> & centroids, const std::vector<bool> & abnormal, double tau,
           bool structural_filter) {
            if (!abnormal.empty() && abnormal.size() != centroids.size()) {
                throw std::invalid_argument("abnormal must match centroids in length");
            }
            std::vector<FilterCandidate> pool;
            for (std::size_t i = 0; i < centroids.size(); ++i) {
                pool.push_back(FilterCandidate{i, centroids[i], !abnormal.empty() && abnormal[i]});
            }
            return filter_outliers(pool, tau, structural_filter).survivors;
        },
        py::arg("centroids"), py::arg("abnormal") = std::vector<bool>{}, py::arg("tau") = 2.0,
        py::arg("structural_filter") = true);

    py::class_<TrajectoryCache>(m, "Cache")
        .def_static(
            "read", [](const std::filesystem::path & path) { return read_cache(path); }, py::arg("path"))
        .def_static(
            "from_jsonl",
            [](const std::string & text) {
                std::istringstream in(text);
                return read_cache(in);
            },
            py::arg("text"))
        .def_static(
            "synth",
            [](py::dict spec, std::size_t problems, std::size_t samples) {
                const auto json = py::module_::import("json").attr("dumps")(spec).cast<std::string>();
                return generate_corpus(synth_spec_from_json(nlohmann::json::parse(json)), problems, samples, 0);
            },
            py::arg("spec") = py::dict(), py::arg("problems") = 100, py::arg("samples") = 64)
        .def("write",
             [](const TrajectoryCache & c, const std::filesystem::path & path) { write_cache(c, path); })
        .def("to_jsonl",
             [](const TrajectoryCache & c) {
                 std::ostringstream out;
                 write_cache(c, out);
                 return out.str();
             })
        .def("__len__", &TrajectoryCache::record_count)
        .def_property_readonly("problem_ids",
                               [](const TrajectoryCache & c) {
                                   std::vector<std::string> ids;
                                   for (const auto & g : c.groups()) {
                                       ids.push_back(g.problem_id);
                                   }
                                   return ids;
                               })
        .def_property_readonly("min_group_size", &TrajectoryCache::min_group_size)
        .def_property_readonly("max_group_size", &TrajectoryCache::max_group_size)
        .def(
            "entropies",
            [](const TrajectoryCache & c, const std::string & problem_id, std::uint64_t sample_id) {
                for (const auto & g : c.groups()) {
                    for (const auto & r : g.records) {
                        if (g.problem_id == problem_id && r.sample_id == sample_id) {
                            const auto t = trace_of(r);
                            return std::vector<double>(t.values().begin(), t.values().end());
                        }
                    }
                }
                throw py::key_error("no such record");
            },
            py::arg("problem_id"), py::arg("sample_id"));

    m.def(
        "select",
        [](const TrajectoryCache & cache, double top_percent, double bottom_percent, std::size_t exit_k,
           const std::string & method, double tau, bool structural, std::size_t window, std::size_t topk,
           std::uint64_t seed) {
            const auto hep = make_hep(top_percent, bottom_percent, exit_k);
            const auto cfg = make_selection(method, tau, structural, window, topk, seed);
            py::list out;
            for (const auto & g : cache.groups()) {
                out.append(selection_dict(select(g.records, hep, cfg)));
            }
            return out;
        },
        py::arg("cache"), HEP_ARGS, SELECTION_ARGS);

    m.def("pass_at_1", &pass_at_1, py::arg("cache"));

    m.def(
        "method_accuracy",
        [](const TrajectoryCache & cache, double top_percent, double bottom_percent, std::size_t exit_k,
           const std::string & method, double tau, bool structural, std::size_t window, std::size_t topk,
           std::uint64_t seed, std::size_t jobs) {
            const auto r = method_accuracy(cache, make_hep(top_percent, bottom_percent, exit_k),
                                           make_selection(method, tau, structural, window, topk, seed), jobs);
            py::dict d;
            d["accuracy"] = r.accuracy ? py::object(py::float_(*r.accuracy)) : py::object(py::none());
            d["evaluated"] = r.evaluated;
            d["skipped"] = r.skipped.size();
            return d;
        },
        py::arg("cache"), HEP_ARGS, SELECTION_ARGS, py::arg("jobs") = 1);

    m.def(
        "scaling_curve",
        [](const TrajectoryCache & cache, const std::vector<std::size_t> & n_grid, std::size_t repeats,
           double top_percent, double bottom_percent, std::size_t exit_k, const std::string & method, double tau,
           bool structural, std::size_t window, std::size_t topk, std::uint64_t seed, std::size_t jobs) {
            const auto points =
                scaling_curve(cache, make_hep(top_percent, bottom_percent, exit_k),
                              make_selection(method, tau, structural, window, topk, seed), n_grid, repeats, seed, jobs);
            py::list out;
            for (const auto & p : points) {
                out.append(py::dict(py::arg("n") = p.n, py::arg("repeats") = p.repeats,
                                    py::arg("mean_accuracy") = p.mean_accuracy,
                                    py::arg("std_accuracy") = p.std_accuracy));
            }
            return out;
        },
        py::arg("cache"), py::arg("n_grid"), py::arg("repeats") = 50, HEP_ARGS, SELECTION_ARGS, py::arg("jobs") = 1);

    m.def(
        "separation_stats",
        [](const TrajectoryCache & cache, std::size_t bins, double sigma, double top_percent, double bottom_percent,
           std::size_t exit_k) {
            const auto s = separation_stats(cache, make_hep(top_percent, bottom_percent, exit_k), bins, sigma);
            auto median = [](const std::optional<LabelCurve> & g) -> py::object {
                return g && g->median_centroid ? py::object(py::float_(*g->median_centroid)) : py::object(py::none());
            };
            py::dict d;
            d["median_centroid_correct"] = median(s.correct);
            d["median_centroid_incorrect"] = median(s.incorrect);
            d["correct"] = s.correct ? py::cast(s.correct->mean_duration) : py::object(py::none());
            d["incorrect"] = s.incorrect ? py::cast(s.incorrect->mean_duration) : py::object(py::none());
            d["difference"] = s.difference;
            d["smoothed_difference"] = s.smoothed_difference;
            return d;
        },
        py::arg("cache"), py::arg("bins") = 50, py::arg("sigma") = 2.0, HEP_ARGS);

    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "hepsel");
            std::ostringstream out;
            std::ostringstream err;
            const int code = cli::run(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
