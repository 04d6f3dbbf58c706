#pragma once

#include "popcal/impute/model.hpp"

#include <cstdint>
#include <vector>

namespace popcal::sim {

struct TileSimConfig {
    int n_tiles = 200;
    int n_days = 151;
    int censor_threshold = 10;
    double rate_scale = 5.0; ///< lambda ~ Exp(scale rate_scale)
    /// Thin histories to roughly 3/4, 1/2 or 1/4 of the days for a share
    /// of tiles, giving the spiky entry-count spectrum of real tile feeds.
    bool drop_days = false;
    std::uint64_t seed = 1;
};

struct SimulatedTiles {
    std::vector<impute::TileHistory> histories;
    std::vector<double> lambda;
};

/// Draws lambda per tile, then one Poisson count per retained day, censoring
/// counts below the threshold. Pass `lambda` to fix the rates instead.
SimulatedTiles simulate_tiles(const TileSimConfig& cfg, const std::vector<double>* lambda = nullptr);

/// Retained-day share per thinning level. Index 0 keeps every day.
inline constexpr double kEntryShares[4] = {1.0, 0.75, 0.5, 0.25};

} // namespace popcal::sim
