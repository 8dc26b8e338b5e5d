#pragma once

#include "hepsel/hep.hpp"
#include "hepsel/trace_model.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace hepsel {

struct CentroidScore {
    double value = 0.0; // in [1/L, 1]
    std::vector<Hep> heps;
    Thresholds thresholds;
    std::size_t length = 0;
};

// Mass-weighted mean HEP midpoint divided by L. Every token inside a phase
// has mass one, tokens outside have mass zero. Throws no_centroid_error when
// `heps` is empty.
double compute_centroid(std::span<const Hep> heps, std::size_t length);

// Ablation: every token weighted by its raw entropy. Throws
// no_centroid_error when the trace carries no entropy mass.
double raw_entropy_centroid(std::span<const double> entropies);

inline double raw_entropy_centroid(const EntropyTrace & trace) { return raw_entropy_centroid(trace.values()); }

// Thresholds, phases and centroid for one trajectory.
CentroidScore score_trace(const EntropyTrace & trace, const HepConfig & cfg);

} // namespace hepsel
