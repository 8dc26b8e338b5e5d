#pragma once

#include "hepsel/trace_model.hpp"

#include <string>
#include <vector>

namespace hepsel::testing {

inline TrajectoryRecord entropy_record(std::string problem_id, std::uint64_t sample_id, std::vector<double> entropies,
                                       std::optional<bool> label = std::nullopt,
                                       FinishReason reason = FinishReason::stop) {
    TrajectoryRecord r;
    r.problem_id = std::move(problem_id);
    r.sample_id = sample_id;
    r.payload = EntropyTrace(std::move(entropies));
    r.label = label;
    r.finish_reason = reason;
    return r;
}

inline TrajectoryRecord topk_record(std::string problem_id, std::uint64_t sample_id,
                                    const std::vector<std::vector<double>> & tokens) {
    TopkLogprobs topk;
    for (const auto & t : tokens) {
        topk.push_back(t);
    }
    TrajectoryRecord r;
    r.problem_id = std::move(problem_id);
    r.sample_id = sample_id;
    r.payload = std::move(topk);
    return r;
}

// A trace of `length` base tokens at 0.1 with a burst of 2.0 over [start, end].
inline std::vector<double> burst_trace(std::size_t length, std::size_t start, std::size_t end) {
    std::vector<double> t(length, 0.1);
    for (std::size_t i = start; i <= end; ++i) {
        t[i - 1] = 2.0;
    }
    return t;
}

} // namespace hepsel::testing
