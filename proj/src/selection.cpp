#include "hepsel/selection.hpp"

#include "hepsel/centroid.hpp"
#include "hepsel/errors.hpp"
#include "hepsel/rng.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace hepsel {

namespace {

constexpr std::array<std::string_view, 7> method_names = {
    "lowest_centroid", "raw_centroid", "self_certainty", "tail_confidence", "bottom_window", "random", "majority_vote",
};

constexpr std::array<Method, 7> method_list = {
    Method::lowest_centroid, Method::raw_centroid, Method::self_certainty, Method::tail_confidence,
    Method::bottom_window,   Method::random,       Method::majority_vote,
};

constexpr double inf = std::numeric_limits<double>::infinity();

// argmin (or argmax) over present scores; first index wins ties.
template <class Better>
std::size_t best_index(std::span<const std::optional<double>> scores, Better better) {
    std::size_t best = scores.size();
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] && (best == scores.size() || better(*scores[i], *scores[best]))) {
            best = i;
        }
    }
    return best;
}

SelectionResult centroid_based(std::string_view problem_id, std::span<const CandidateFeatures * const> candidates,
                               const SelectionConfig & cfg, bool raw) {
    SelectionResult result{std::string(problem_id), cfg.method, 0, {}, {}};
    std::vector<FilterCandidate> pool;
    pool.reserve(candidates.size());
    for (const auto * c : candidates) {
        const auto & value = raw ? c->raw_centroid : c->centroid;
        pool.push_back(FilterCandidate{c->sample_id, value, c->finish_reason != FinishReason::stop});
        result.scores.emplace_back(c->sample_id, value);
    }
    auto outcome = filter_outliers(pool, cfg.outlier_tau, cfg.structural_filter);
    result.filtered = std::move(outcome.filtered);

    std::uint64_t chosen = outcome.survivors.front(); // degenerate path: nobody has a centroid
    double best = inf;
    for (const auto & fc : pool) {
        if (fc.centroid && *fc.centroid < best &&
            std::find(outcome.survivors.begin(), outcome.survivors.end(), fc.sample_id) != outcome.survivors.end()) {
            best = *fc.centroid;
            chosen = fc.sample_id;
        }
    }
    result.chosen_sample_id = chosen;
    return result;
}

SelectionResult argmax_score(std::string_view problem_id, std::span<const CandidateFeatures * const> candidates,
                             const SelectionConfig & cfg) {
    SelectionResult result{std::string(problem_id), cfg.method, 0, {}, {}};
    std::vector<std::optional<double>> scores;
    scores.reserve(candidates.size());
    for (const auto * c : candidates) {
        std::optional<double> score;
        switch (cfg.method) {
        case Method::self_certainty:
            score = -c->mean_entropy;
            break;
        case Method::tail_confidence:
            score = c->tail_confidence;
            break;
        case Method::bottom_window:
            score = c->bottom_window;
            break;
        default:
            break;
        }
        if (!score) {
            throw unsupported_payload_error(std::string(to_string(cfg.method)) +
                                            " requires topk_logprobs payloads (sample_id " +
                                            std::to_string(c->sample_id) + " has entropies only)");
        }
        scores.push_back(score);
        result.scores.emplace_back(c->sample_id, score);
    }
    result.chosen_sample_id = candidates[best_index(scores, std::greater<>{})]->sample_id;
    return result;
}

SelectionResult vote(std::string_view problem_id, std::span<const CandidateFeatures * const> candidates,
                     const SelectionConfig & cfg) {
    struct Group {
        std::size_t count = 0;
        double best_centroid = inf;
        std::uint64_t best_sample = std::numeric_limits<std::uint64_t>::max();
    };
    std::map<std::string, Group> groups;
    for (const auto * c : candidates) {
        if (!c->answer) {
            throw unsupported_payload_error("majority_vote requires an answer on every candidate (sample_id " +
                                            std::to_string(c->sample_id) + " has none)");
        }
        auto & g = groups[*c->answer];
        ++g.count;
        const double centroid = c->centroid.value_or(inf);
        // candidates arrive in ascending sample_id, so strict < keeps the lowest id on ties
        if (g.count == 1 || centroid < g.best_centroid) {
            g.best_centroid = centroid;
            g.best_sample = c->sample_id;
        }
    }
    const Group * winner = nullptr;
    for (const auto & [answer, g] : groups) {
        if (winner == nullptr || g.count > winner->count ||
            (g.count == winner->count &&
             (g.best_centroid < winner->best_centroid ||
              (g.best_centroid == winner->best_centroid && g.best_sample < winner->best_sample)))) {
            winner = &g;
        }
    }
    SelectionResult result{std::string(problem_id), cfg.method, winner->best_sample, {}, {}};
    for (const auto * c : candidates) {
        result.scores.emplace_back(c->sample_id, static_cast<double>(groups[*c->answer].count));
    }
    return result;
}

} // namespace

std::string_view to_string(Method method) { return method_names[static_cast<std::size_t>(method)]; }

Method parse_method(std::string_view name) {
    for (std::size_t i = 0; i < method_names.size(); ++i) {
        if (method_names[i] == name) {
            return method_list[i];
        }
    }
    throw std::invalid_argument("unknown selection method '" + std::string(name) + "'");
}

std::span<const Method> all_methods() { return method_list; }

void SelectionConfig::validate() const {
    if (!(outlier_tau > 0.0)) {
        throw std::invalid_argument("outlier_tau must be > 0");
    }
    if (window_w < 1) {
        throw std::invalid_argument("window_w must be >= 1");
    }
    if (topk_for_confidence < 1) {
        throw std::invalid_argument("topk_for_confidence must be >= 1");
    }
}

std::string_view to_string(FilterReason reason) {
    switch (reason) {
    case FilterReason::structural:
        return "structural";
    case FilterReason::centroid_outlier:
        return "centroid-outlier";
    case FilterReason::no_centroid:
        return "no-centroid";
    }
    return "unknown";
}

nlohmann::ordered_json to_json(const SelectionResult & result) {
    nlohmann::ordered_json obj;
    obj["problem_id"] = result.problem_id;
    obj["method"] = std::string(to_string(result.method));
    obj["chosen_sample_id"] = result.chosen_sample_id;
    auto scores = nlohmann::ordered_json::object();
    for (const auto & [id, score] : result.scores) {
        scores[std::to_string(id)] = score ? nlohmann::ordered_json(*score) : nlohmann::ordered_json(nullptr);
    }
    obj["scores"] = std::move(scores);
    auto filtered = nlohmann::ordered_json::array();
    for (const auto & f : result.filtered) {
        filtered.push_back({{"sample_id", f.sample_id}, {"reason", std::string(to_string(f.reason))}});
    }
    obj["filtered"] = std::move(filtered);
    return obj;
}

FilterOutcome filter_outliers(std::span<const FilterCandidate> candidates, double tau, bool structural_filter) {
    if (candidates.empty()) {
        throw empty_pool_error("no candidates to filter");
    }
    std::vector<const FilterCandidate *> pool;
    std::vector<FilteredCandidate> filtered;

    // Keeps candidates passing `keep`; records the rest unless that empties the pool.
    auto stage = [&](auto keep, FilterReason reason) {
        std::vector<const FilterCandidate *> kept;
        std::vector<FilteredCandidate> dropped;
        for (const auto * c : pool) {
            if (keep(*c)) {
                kept.push_back(c);
            } else {
                dropped.push_back({c->sample_id, reason});
            }
        }
        if (!kept.empty()) {
            pool = std::move(kept);
            filtered.insert(filtered.end(), dropped.begin(), dropped.end());
        }
    };

    for (const auto & c : candidates) {
        pool.push_back(&c);
    }
    stage([](const FilterCandidate & c) { return c.centroid.has_value(); }, FilterReason::no_centroid);
    if (structural_filter) {
        stage([](const FilterCandidate & c) { return !c.structurally_abnormal; }, FilterReason::structural);
    }
    if (std::isfinite(tau) && pool.front()->centroid) {
        double mean = 0.0;
        for (const auto * c : pool) {
            mean += *c->centroid;
        }
        mean /= static_cast<double>(pool.size());
        double var = 0.0;
        for (const auto * c : pool) {
            var += (*c->centroid - mean) * (*c->centroid - mean);
        }
        const double sd = std::sqrt(var / static_cast<double>(pool.size()));
        if (sd > 0.0) {
            stage([&](const FilterCandidate & c) { return std::abs(*c.centroid - mean) <= tau * sd; },
                  FilterReason::centroid_outlier);
        }
    }

    FilterOutcome outcome;
    outcome.survivors.reserve(pool.size());
    for (const auto * c : pool) {
        outcome.survivors.push_back(c->sample_id);
    }
    std::sort(filtered.begin(), filtered.end(),
              [](const auto & a, const auto & b) { return a.sample_id < b.sample_id; });
    outcome.filtered = std::move(filtered);
    return outcome;
}

double token_confidence(std::span<const double> logprobs, std::size_t k_top) {
    const std::size_t k = std::min(k_top, logprobs.size());
    if (k == 0) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        sum += logprobs[j];
    }
    const double c = -sum / static_cast<double>(k);
    return c == 0.0 ? 0.0 : c;
}

double tail_confidence(std::span<const double> confidences, std::size_t window) {
    const std::size_t w = std::min(window, confidences.size());
    double sum = 0.0;
    for (std::size_t i = confidences.size() - w; i < confidences.size(); ++i) {
        sum += confidences[i];
    }
    return sum / static_cast<double>(w);
}

double bottom_window_confidence(std::span<const double> confidences, std::size_t window) {
    const std::size_t w = std::min(window, confidences.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < w; ++i) {
        sum += confidences[i];
    }
    double lowest = sum;
    for (std::size_t i = w; i < confidences.size(); ++i) {
        sum += confidences[i] - confidences[i - w];
        lowest = std::min(lowest, sum);
    }
    return lowest / static_cast<double>(w);
}

std::string normalize_answer(std::string_view answer) {
    const auto first = answer.find_first_not_of(" \t\r\n\f\v");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = answer.find_last_not_of(" \t\r\n\f\v");
    std::string out(answer.substr(first, last - first + 1));
    for (auto & ch : out) {
        ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    return out;
}

CandidateFeatures compute_features(const TrajectoryRecord & record, const HepConfig & hep, const SelectionConfig & cfg) {
    CandidateFeatures f;
    f.sample_id = record.sample_id;
    f.finish_reason = record.finish_reason;

    const EntropyTrace trace = trace_of(record, cfg.entropy_mode);
    try {
        f.centroid = score_trace(trace, hep).value;
    } catch (const no_centroid_error &) {
    }
    try {
        f.raw_centroid = raw_entropy_centroid(trace);
    } catch (const no_centroid_error &) {
    }
    double sum = 0.0;
    for (double t : trace.values()) {
        sum += t;
    }
    f.mean_entropy = sum / static_cast<double>(trace.length());

    if (const auto * topk = std::get_if<TopkLogprobs>(&record.payload)) {
        std::vector<double> confidences(topk->size());
        for (std::size_t i = 0; i < topk->size(); ++i) {
            confidences[i] = token_confidence((*topk)[i], cfg.topk_for_confidence);
        }
        f.tail_confidence = tail_confidence(confidences, cfg.window_w);
        f.bottom_window = bottom_window_confidence(confidences, cfg.window_w);
    }
    if (record.answer) {
        f.answer = normalize_answer(*record.answer);
    }
    return f;
}

SelectionResult select_features(std::string_view problem_id, std::span<const CandidateFeatures * const> candidates,
                                const SelectionConfig & cfg, std::uint64_t random_stream) {
    if (candidates.empty()) {
        throw empty_pool_error("problem " + std::string(problem_id) + " has no candidates");
    }
    switch (cfg.method) {
    case Method::lowest_centroid:
        return centroid_based(problem_id, candidates, cfg, false);
    case Method::raw_centroid:
        return centroid_based(problem_id, candidates, cfg, true);
    case Method::self_certainty:
    case Method::tail_confidence:
    case Method::bottom_window:
        return argmax_score(problem_id, candidates, cfg);
    case Method::random: {
        Rng rng(random_stream);
        const auto index = uniform_index(rng, candidates.size());
        return SelectionResult{std::string(problem_id), cfg.method, candidates[index]->sample_id, {}, {}};
    }
    case Method::majority_vote:
        return vote(problem_id, candidates, cfg);
    }
    throw std::logic_error("unhandled selection method");
}

std::uint64_t problem_stream(std::uint64_t rng_seed, std::string_view problem_id) {
    return derive_seed(rng_seed, {fnv1a64(problem_id)});
}

SelectionResult select(std::span<const TrajectoryRecord> candidates, const HepConfig & hep, const SelectionConfig & cfg) {
    if (candidates.empty()) {
        throw empty_pool_error("no candidates");
    }
    std::vector<CandidateFeatures> features;
    features.reserve(candidates.size());
    for (const auto & record : candidates) {
        features.push_back(compute_features(record, hep, cfg));
    }
    std::vector<const CandidateFeatures *> view;
    for (const auto & f : features) {
        view.push_back(&f);
    }
    const auto & pid = candidates.front().problem_id;
    return select_features(pid, view, cfg, problem_stream(cfg.rng_seed, pid));
}

SelectionResult lowest_centroid_select(std::span<const TrajectoryRecord> candidates, const HepConfig & hep,
                                       SelectionConfig cfg) {
    cfg.method = Method::lowest_centroid;
    return select(candidates, hep, cfg);
}

SelectionResult raw_centroid_select(std::span<const TrajectoryRecord> candidates, SelectionConfig cfg) {
    cfg.method = Method::raw_centroid;
    return select(candidates, HepConfig{}, cfg);
}

SelectionResult self_certainty_select(std::span<const TrajectoryRecord> candidates, SelectionConfig cfg) {
    cfg.method = Method::self_certainty;
    return select(candidates, HepConfig{}, cfg);
}

SelectionResult tail_confidence_select(std::span<const TrajectoryRecord> candidates, std::size_t window_w,
                                       SelectionConfig cfg) {
    cfg.method = Method::tail_confidence;
    cfg.window_w = window_w;
    return select(candidates, HepConfig{}, cfg);
}

SelectionResult bottom_window_select(std::span<const TrajectoryRecord> candidates, std::size_t window_w,
                                     SelectionConfig cfg) {
    cfg.method = Method::bottom_window;
    cfg.window_w = window_w;
    return select(candidates, HepConfig{}, cfg);
}

SelectionResult random_select(std::span<const TrajectoryRecord> candidates, std::uint64_t rng_seed) {
    SelectionConfig cfg;
    cfg.method = Method::random;
    cfg.rng_seed = rng_seed;
    return select(candidates, HepConfig{}, cfg);
}

SelectionResult majority_vote(std::span<const TrajectoryRecord> candidates, const HepConfig & hep, SelectionConfig cfg) {
    cfg.method = Method::majority_vote;
    return select(candidates, hep, cfg);
}

} // namespace hepsel
