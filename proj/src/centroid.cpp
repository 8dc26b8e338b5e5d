#include "hepsel/centroid.hpp"

#include "hepsel/errors.hpp"

#include <cstdint>

namespace hepsel {

double compute_centroid(std::span<const Hep> heps, std::size_t length) {
    if (heps.empty()) {
        throw no_centroid_error("no high entropy phase detected");
    }
    // Exact integer accumulation: sum m*(a+b) = 2 * sum m*p.
    std::uint64_t weighted = 0;
    std::uint64_t mass = 0;
    for (const auto & h : heps) {
        weighted += static_cast<std::uint64_t>(h.mass()) * (h.start + h.end);
        mass += h.mass();
    }
    return static_cast<double>(weighted) / (2.0 * static_cast<double>(length) * static_cast<double>(mass));
}

double raw_entropy_centroid(std::span<const double> entropies) {
    double weighted = 0.0;
    double mass = 0.0;
    for (std::size_t i = 0; i < entropies.size(); ++i) {
        weighted += entropies[i] * static_cast<double>(i + 1);
        mass += entropies[i];
    }
    if (!(mass > 0.0)) {
        throw no_centroid_error("trace has zero total entropy");
    }
    return weighted / (static_cast<double>(entropies.size()) * mass);
}

CentroidScore score_trace(const EntropyTrace & trace, const HepConfig & cfg) {
    CentroidScore score;
    score.length = trace.length();
    score.thresholds = compute_thresholds(trace, cfg);
    score.heps = detect_heps(trace, score.thresholds, cfg.exit_k);
    score.value = compute_centroid(score.heps, score.length);
    return score;
}

} // namespace hepsel
