#include "hepsel/hep.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hepsel {

void HepConfig::validate() const {
    if (!(top_percent > 0.0 && top_percent < 1.0)) {
        throw std::invalid_argument("top_percent must lie in (0, 1)");
    }
    if (!(bottom_percent > 0.0 && bottom_percent < 1.0)) {
        throw std::invalid_argument("bottom_percent must lie in (0, 1)");
    }
    if (exit_k < 1) {
        throw std::invalid_argument("exit_k must be >= 1");
    }
    if (absolute && absolute->theta_low > absolute->theta_high) {
        throw std::invalid_argument("absolute theta_low must not exceed theta_high");
    }
}

double nearest_rank(std::span<double> scratch, double fraction) {
    const auto n = static_cast<std::ptrdiff_t>(scratch.size());
    // 1e-9 absorbs products like 0.29 * 100 = 28.999999999999996 landing one rank low
    auto rank = static_cast<std::ptrdiff_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
    rank = std::clamp<std::ptrdiff_t>(rank, 1, n);
    auto nth = scratch.begin() + (rank - 1);
    std::nth_element(scratch.begin(), nth, scratch.end());
    return *nth;
}

Thresholds compute_thresholds(const EntropyTrace & trace, const HepConfig & cfg) {
    if (cfg.absolute) {
        return *cfg.absolute;
    }
    std::vector<double> scratch(trace.values().begin(), trace.values().end());
    Thresholds thr;
    thr.theta_high = nearest_rank(scratch, 1.0 - cfg.top_percent);
    thr.theta_low = nearest_rank(scratch, cfg.bottom_percent);
    return thr;
}

std::vector<Hep> detect_heps(std::span<const double> entropies, const Thresholds & thresholds, std::size_t exit_k) {
    std::vector<Hep> heps;
    bool active = false;
    std::size_t start = 0;
    std::size_t low_run = 0; // consecutive tokens <= theta_low ending at i

    const std::size_t length = entropies.size();
    for (std::size_t i = 1; i <= length; ++i) {
        const double t = entropies[i - 1];
        low_run = t <= thresholds.theta_low ? low_run + 1 : 0;
        if (!active) {
            if (t >= thresholds.theta_high) {
                active = true;
                start = i;
            }
        } else if (low_run >= exit_k) {
            active = false;
            heps.push_back(Hep{start, i - 1});
        }
    }
    if (active) {
        heps.push_back(Hep{start, length});
    }
    return heps;
}

} // namespace hepsel
