#include "hepsel/trace_model.hpp"

#include "hepsel/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <tuple>

namespace hepsel {

namespace {

constexpr std::string_view finish_names[] = {"stop", "length", "repetition", "other"};

void check_logprob_value(double value) {
    if (!std::isfinite(value)) {
        throw malformed_trace_error("non-finite logprob");
    }
    if (value > 0.0) {
        throw malformed_trace_error("positive logprob " + std::to_string(value));
    }
}

} // namespace

std::string_view to_string(FinishReason reason) {
    return finish_names[static_cast<int>(reason)];
}

FinishReason parse_finish_reason(std::string_view name) {
    for (std::size_t i = 0; i < std::size(finish_names); ++i) {
        if (finish_names[i] == name) {
            return static_cast<FinishReason>(i);
        }
    }
    throw error("unknown finish_reason '" + std::string(name) + "'");
}

void validate_token_logprobs(std::span<const double> logprobs) {
    if (logprobs.empty()) {
        throw malformed_trace_error("empty top-k list");
    }
    if (logprobs.size() > max_topk) {
        throw malformed_trace_error("top-k list longer than " + std::to_string(max_topk));
    }
    for (std::size_t j = 0; j < logprobs.size(); ++j) {
        check_logprob_value(logprobs[j]);
        if (j > 0 && logprobs[j] > logprobs[j - 1]) {
            throw malformed_trace_error("top-k list not sorted descending");
        }
    }
}

void TopkLogprobs::push_back(std::span<const double> logprobs) {
    validate_token_logprobs(logprobs);
    values_.insert(values_.end(), logprobs.begin(), logprobs.end());
    offsets_.push_back(values_.size());
}

EntropyTrace::EntropyTrace(std::vector<double> entropies) : values_(std::move(entropies)) {
    if (values_.empty()) {
        throw malformed_trace_error("entropy trace must be nonempty");
    }
    for (double t : values_) {
        if (!std::isfinite(t) || t < 0.0) {
            throw malformed_trace_error("entropy values must be finite and >= 0");
        }
    }
}

double entropy_from_topk(std::span<const double> logprobs, EntropyMode mode) {
    for (double x : logprobs) {
        check_logprob_value(x);
    }
    double log_z = 0.0;
    if (mode == EntropyMode::renormalized) {
        double z = 0.0;
        for (double x : logprobs) {
            z += std::exp(x);
        }
        if (z <= 0.0) {
            return 0.0;
        }
        log_z = std::log(z);
    }
    double h = 0.0;
    for (double x : logprobs) {
        const double lp = x - log_z;
        const double p = std::exp(lp);
        if (p > 0.0) {
            h -= p * lp;
        }
    }
    // -0.0 and tiny negative rounding residue both map to 0
    return h > 0.0 ? h : 0.0;
}

std::size_t TrajectoryRecord::length() const noexcept {
    if (const auto * topk = std::get_if<TopkLogprobs>(&payload)) {
        return topk->size();
    }
    return std::get<EntropyTrace>(payload).length();
}

EntropyTrace trace_of(const TrajectoryRecord & record, EntropyMode mode) {
    if (const auto * trace = std::get_if<EntropyTrace>(&record.payload)) {
        return *trace;
    }
    const auto & topk = std::get<TopkLogprobs>(record.payload);
    std::vector<double> entropies;
    entropies.reserve(topk.size());
    for (std::size_t i = 0; i < topk.size(); ++i) {
        entropies.push_back(entropy_from_topk(topk[i], mode));
    }
    return EntropyTrace(std::move(entropies));
}

//
// cache
//

TrajectoryCache TrajectoryCache::from_records(std::vector<TrajectoryRecord> records) {
    std::sort(records.begin(), records.end(), [](const auto & a, const auto & b) {
        return std::tie(a.problem_id, a.sample_id) < std::tie(b.problem_id, b.sample_id);
    });
    TrajectoryCache cache;
    for (auto & record : records) {
        if (cache.groups_.empty() || cache.groups_.back().problem_id != record.problem_id) {
            cache.groups_.push_back(ProblemGroup{record.problem_id, {}});
        } else if (cache.groups_.back().records.back().sample_id == record.sample_id) {
            throw duplicate_key_error("duplicate (problem_id, sample_id) = (" + record.problem_id + ", " +
                                      std::to_string(record.sample_id) + ")");
        }
        cache.groups_.back().records.push_back(std::move(record));
    }
    return cache;
}

std::size_t TrajectoryCache::record_count() const noexcept {
    std::size_t n = 0;
    for (const auto & g : groups_) {
        n += g.records.size();
    }
    return n;
}

std::size_t TrajectoryCache::min_group_size() const noexcept {
    std::size_t n = groups_.empty() ? 0 : groups_.front().records.size();
    for (const auto & g : groups_) {
        n = std::min(n, g.records.size());
    }
    return n;
}

std::size_t TrajectoryCache::max_group_size() const noexcept {
    std::size_t n = 0;
    for (const auto & g : groups_) {
        n = std::max(n, g.records.size());
    }
    return n;
}

//
// JSONL
//

namespace {

using nlohmann::json;

const json & require(const json & obj, const char * key) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw error(std::string("missing field '") + key + "'");
    }
    return *it;
}

std::vector<double> number_array(const json & value, const char * what) {
    if (!value.is_array()) {
        throw error(std::string(what) + " must be an array");
    }
    std::vector<double> out;
    out.reserve(value.size());
    for (const auto & v : value) {
        if (!v.is_number()) {
            throw error(std::string(what) + " must contain only numbers");
        }
        out.push_back(v.get<double>());
    }
    return out;
}

TrajectoryRecord record_from_json(const json & obj) {
    if (!obj.is_object()) {
        throw error("record must be a JSON object");
    }
    TrajectoryRecord rec;

    const auto & pid = require(obj, "problem_id");
    if (!pid.is_string()) {
        throw error("problem_id must be a string");
    }
    rec.problem_id = pid.get<std::string>();

    const auto & sid = require(obj, "sample_id");
    if (!sid.is_number_unsigned()) {
        throw error("sample_id must be a non-negative integer");
    }
    rec.sample_id = sid.get<std::uint64_t>();

    const bool has_topk = obj.contains("topk_logprobs");
    const bool has_entropies = obj.contains("entropies");
    if (has_topk == has_entropies) {
        throw error("exactly one of topk_logprobs / entropies is required");
    }
    if (has_topk) {
        const auto & rows = obj["topk_logprobs"];
        if (!rows.is_array() || rows.empty()) {
            throw error("topk_logprobs must be a nonempty array");
        }
        TopkLogprobs topk;
        for (const auto & row : rows) {
            topk.push_back(number_array(row, "topk_logprobs row"));
        }
        rec.payload = std::move(topk);
    } else {
        rec.payload = EntropyTrace(number_array(obj["entropies"], "entropies"));
    }

    const auto & fr = require(obj, "finish_reason");
    if (!fr.is_string()) {
        throw error("finish_reason must be a string");
    }
    rec.finish_reason = parse_finish_reason(fr.get<std::string>());

    if (auto it = obj.find("label"); it != obj.end() && !it->is_null()) {
        if (!it->is_boolean()) {
            throw error("label must be a boolean");
        }
        rec.label = it->get<bool>();
    }
    if (auto it = obj.find("answer"); it != obj.end() && !it->is_null()) {
        if (!it->is_string()) {
            throw error("answer must be a string");
        }
        rec.answer = it->get<std::string>();
    }

    for (auto it = obj.begin(); it != obj.end(); ++it) {
        static constexpr std::string_view known[] = {"problem_id",    "sample_id", "topk_logprobs", "entropies",
                                                     "finish_reason", "label",     "answer"};
        if (std::find(std::begin(known), std::end(known), it.key()) == std::end(known)) {
            rec.extra[it.key()] = it.value();
        }
    }
    return rec;
}

} // namespace

TrajectoryRecord parse_record(std::string_view line, std::size_t line_number) {
    json obj;
    try {
        obj = json::parse(line.begin(), line.end());
    } catch (const json::exception & e) {
        throw parse_error(line_number, std::string("invalid JSON: ") + e.what());
    }
    try {
        return record_from_json(obj);
    } catch (const error & e) {
        throw parse_error(line_number, e.what());
    } catch (const json::exception & e) {
        throw parse_error(line_number, e.what());
    }
}

std::string serialize_record(const TrajectoryRecord & record) {
    nlohmann::ordered_json obj;
    obj["problem_id"] = record.problem_id;
    obj["sample_id"] = record.sample_id;
    if (const auto * topk = std::get_if<TopkLogprobs>(&record.payload)) {
        auto rows = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < topk->size(); ++i) {
            const auto row = (*topk)[i];
            rows.push_back(std::vector<double>(row.begin(), row.end()));
        }
        obj["topk_logprobs"] = std::move(rows);
    } else {
        const auto values = std::get<EntropyTrace>(record.payload).values();
        obj["entropies"] = std::vector<double>(values.begin(), values.end());
    }
    obj["finish_reason"] = std::string(to_string(record.finish_reason));
    if (record.label) {
        obj["label"] = *record.label;
    }
    if (record.answer) {
        obj["answer"] = *record.answer;
    }
    for (auto it = record.extra.begin(); it != record.extra.end(); ++it) {
        obj[it.key()] = nlohmann::ordered_json::parse(it.value().dump());
    }
    return obj.dump();
}

TrajectoryCache read_cache(std::istream & in) {
    std::vector<TrajectoryRecord> records;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) {
            continue;
        }
        records.push_back(parse_record(line, line_number));
    }
    return TrajectoryCache::from_records(std::move(records));
}

TrajectoryCache read_cache(const std::filesystem::path & path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open " + path.string());
    }
    return read_cache(in);
}

void write_cache(const TrajectoryCache & cache, std::ostream & out) {
    for (const auto & group : cache.groups()) {
        for (const auto & record : group.records) {
            out << serialize_record(record) << '\n';
        }
    }
}

void write_cache(const TrajectoryCache & cache, const std::filesystem::path & path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw io_error("cannot write " + path.string());
    }
    write_cache(cache, out);
    if (!out) {
        throw io_error("write failed for " + path.string());
    }
}

} // namespace hepsel
