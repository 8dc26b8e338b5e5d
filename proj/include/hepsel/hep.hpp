#pragma once

#include "hepsel/trace_model.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace hepsel {

struct Thresholds {
    double theta_high = 0.0;
    double theta_low = 0.0;

    bool operator==(const Thresholds &) const = default;
};

struct HepConfig {
    double top_percent = 0.01;    // tokens at or above the top 1% trigger a phase
    double bottom_percent = 0.80; // tokens at or below the 80th percentile count as low
    std::size_t exit_k = 2;       // consecutive low tokens that close a phase
    // Fixed thresholds instead of per-trajectory percentiles. Experimentation only.
    std::optional<Thresholds> absolute;

    // Throws std::invalid_argument.
    void validate() const;
};

/// One High Entropy Phase, 1-based inclusive token span [start, end].
struct Hep {
    std::size_t start = 1;
    std::size_t end = 1;

    std::size_t mass() const noexcept { return end - start + 1; }
    double position() const noexcept { return static_cast<double>(start + end) / 2.0; }

    bool operator==(const Hep &) const = default;
};

// Value at nearest rank ceil(fraction * n) of the ascending order, rank
// clamped to [1, n]. Reorders `scratch`.
double nearest_rank(std::span<double> scratch, double fraction);

// Per-trajectory percentile thresholds, or cfg.absolute when set.
Thresholds compute_thresholds(const EntropyTrace & trace, const HepConfig & cfg);

// Runs the phase state machine. A phase opens on t_i >= theta_high and
// closes at the first i whose last exit_k tokens (t_i included) are all
// <= theta_low; the closing token is not part of the phase. A phase still
// open after the last token ends at L.
std::vector<Hep> detect_heps(std::span<const double> entropies, const Thresholds & thresholds, std::size_t exit_k);

inline std::vector<Hep> detect_heps(const EntropyTrace & trace, const Thresholds & thresholds, std::size_t exit_k) {
    return detect_heps(trace.values(), thresholds, exit_k);
}

} // namespace hepsel
