#include "popcal/sim/tiles.hpp"

#include "popcal/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace popcal::sim {

SimulatedTiles simulate_tiles(const TileSimConfig& cfg, const std::vector<double>* lambda)
{
    if (cfg.n_tiles < 1 || cfg.n_days < 1) {
        throw UsageError("tile simulation needs at least one tile and one day");
    }
    if (cfg.censor_threshold < 1) {
        throw UsageError("censor threshold must be >= 1");
    }
    if (lambda && lambda->size() != static_cast<std::size_t>(cfg.n_tiles)) {
        throw UsageError("fixed rates must match n_tiles");
    }
    std::mt19937_64 rng(cfg.seed);
    std::exponential_distribution<double> rate(1.0 / cfg.rate_scale);
    std::discrete_distribution<int> level({0.55, 0.15, 0.15, 0.15});

    SimulatedTiles out;
    std::vector<int> days(static_cast<std::size_t>(cfg.n_days));
    for (int t = 0; t < cfg.n_tiles; ++t) {
        const double lam = lambda ? (*lambda)[static_cast<std::size_t>(t)] : rate(rng);
        std::size_t keep = days.size();
        if (cfg.drop_days) {
            const double share = kEntryShares[level(rng)];
            keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(share * cfg.n_days)));
        }
        impute::TileHistory h;
        h.tile_id = "tile" + std::to_string(t);
        std::poisson_distribution<long long> pois(lam > 0.0 ? lam : 1e-300);
        for (std::size_t d = 0; d < keep; ++d) {
            const long long u = lam > 0.0 ? pois(rng) : 0;
            h.counts.push_back(u >= cfg.censor_threshold ? std::optional<long long>(u) : std::nullopt);
        }
        out.histories.push_back(std::move(h));
        out.lambda.push_back(lam);
    }
    return out;
}

} // namespace popcal::sim
