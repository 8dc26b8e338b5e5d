#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace hepsel {

// Truncation level of the per-token top-k distributions.
inline constexpr std::size_t max_topk = 10;

enum class FinishReason { stop, length, repetition, other };

std::string_view to_string(FinishReason reason);
// Throws hepsel::error on unknown names.
FinishReason parse_finish_reason(std::string_view name);

// Checks one token's top-k list: nonempty, at most max_topk entries, every
// value finite and <= 0, sorted descending. Throws malformed_trace_error.
void validate_token_logprobs(std::span<const double> logprobs);

/// Per-token top-k log-probabilities for a whole trajectory, stored flat.
class TopkLogprobs {
public:
    TopkLogprobs() = default;

    /// Appends one token's list after validating it.
    void push_back(std::span<const double> logprobs);

    std::size_t size() const noexcept { return offsets_.size() - 1; }
    bool empty() const noexcept { return size() == 0; }

    std::span<const double> operator[](std::size_t token) const {
        return {values_.data() + offsets_[token], offsets_[token + 1] - offsets_[token]};
    }

    bool operator==(const TopkLogprobs &) const = default;

private:
    std::vector<double> values_;
    std::vector<std::size_t> offsets_{0};
};

/// Token entropies t_1..t_L in nats. Always nonempty, finite and >= 0.
class EntropyTrace {
public:
    explicit EntropyTrace(std::vector<double> entropies);

    std::size_t length() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    // 0-based access; 1-based token i is at [i - 1].
    double operator[](std::size_t index) const noexcept { return values_[index]; }

    bool operator==(const EntropyTrace &) const = default;

private:
    std::vector<double> values_;
};

enum class EntropyMode {
    raw,          // -sum p ln p over the provided entries as-is
    renormalized, // probabilities rescaled to sum to one first
};

// Shannon entropy (nats) of a truncated distribution given as logprobs.
// Order-insensitive. Throws malformed_trace_error on non-finite or positive
// values.
double entropy_from_topk(std::span<const double> logprobs, EntropyMode mode = EntropyMode::raw);

using Payload = std::variant<TopkLogprobs, EntropyTrace>;

struct TrajectoryRecord {
    std::string problem_id;
    std::uint64_t sample_id = 0;
    Payload payload{EntropyTrace{{0.0}}};
    FinishReason finish_reason = FinishReason::stop;
    std::optional<bool> label;
    std::optional<std::string> answer;
    // Fields outside the canonical schema, carried through unchanged.
    nlohmann::json extra = nlohmann::json::object();

    std::size_t length() const noexcept;
    bool has_topk() const noexcept { return std::holds_alternative<TopkLogprobs>(payload); }

    bool operator==(const TrajectoryRecord &) const = default;
};

EntropyTrace trace_of(const TrajectoryRecord & record, EntropyMode mode = EntropyMode::raw);

struct ProblemGroup {
    std::string problem_id;
    std::vector<TrajectoryRecord> records; // ascending sample_id

    bool operator==(const ProblemGroup &) const = default;
};

/// Records grouped by problem, canonical order (problem_id, sample_id).
class TrajectoryCache {
public:
    TrajectoryCache() = default;

    /// Sorts and groups. Throws duplicate_key_error on a repeated
    /// (problem_id, sample_id).
    static TrajectoryCache from_records(std::vector<TrajectoryRecord> records);

    const std::vector<ProblemGroup> & groups() const noexcept { return groups_; }
    bool empty() const noexcept { return groups_.empty(); }
    std::size_t record_count() const noexcept;
    std::size_t min_group_size() const noexcept;
    std::size_t max_group_size() const noexcept;

    bool operator==(const TrajectoryCache &) const = default;

private:
    std::vector<ProblemGroup> groups_;
};

// JSONL wire format, one record per line.
TrajectoryRecord parse_record(std::string_view line, std::size_t line_number);
std::string serialize_record(const TrajectoryRecord & record);

TrajectoryCache read_cache(std::istream & in);
TrajectoryCache read_cache(const std::filesystem::path & path);
void write_cache(const TrajectoryCache & cache, std::ostream & out);
void write_cache(const TrajectoryCache & cache, const std::filesystem::path & path);

} // namespace hepsel
