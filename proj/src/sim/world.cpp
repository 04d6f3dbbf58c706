#include "popcal/sim/world.hpp"

#include "popcal/common/error.hpp"
#include "popcal/geo/io.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace popcal::sim {

namespace {

constexpr int kSub = 2; // tiles and raster cells per unit side
constexpr double kSubCell = kGridCell / kSub;

std::string tile_id(int row, int col) { return "t" + std::to_string(row) + "_" + std::to_string(col); }

} // namespace

void WorldConfig::validate() const
{
    units.validate();
    if (!units.grid_layout) {
        throw UsageError("the synthetic world needs the grid layout");
    }
    if (window < 0 || window > 2) {
        throw UsageError("window must be 0, 1 or 2");
    }
    if (!(tile_concentration > 0.0)) {
        throw UsageError("tile concentration must be positive");
    }
    if (!reference_date.ok() || !start_date.ok()) {
        throw UsageError("invalid date");
    }
    const auto first = std::chrono::sys_days(start_date);
    const auto ref = std::chrono::sys_days(reference_date);
    if (ref < first || ref >= first + std::chrono::days(units.n_days)) {
        throw UsageError("reference date outside the simulated days");
    }
}

SimulatedWorld simulate_world(const WorldConfig& cfg)
{
    cfg.validate();
    SimulatedWorld w;
    w.units = simulate_units(cfg.units);
    const auto& truth = w.units.truth.units;
    const int n = cfg.units.n_units;
    const int cols = grid_columns(n);
    const int rows = (n + cols - 1) / cols;

    const int rcols = cols * kSub;
    const int rrows = rows * kSub;
    w.duc = geo::RasterGrid(rcols, rrows, kGridLon0, kGridLat0, kSubCell, 0.0);
    w.population = geo::RasterGrid(rcols, rrows, kGridLon0, kGridLat0, kSubCell, -9999.0);
    w.radiance = geo::RasterGrid(rcols, rrows, kGridLon0, kGridLat0, kSubCell, -9999.0);
    for (int r = 0; r < rrows; ++r) {
        for (int c = 0; c < rcols; ++c) {
            w.population.at(r, c) = -9999.0;
            w.radiance.at(r, c) = -9999.0;
        }
    }

    // Separate stream so the unit draws match simulate_units exactly.
    std::mt19937_64 rng(cfg.units.seed ^ 0x7f4a7c15ULL);
    std::gamma_distribution<double> share(cfg.tile_concentration, 1.0);
    const auto first = std::chrono::sys_days(cfg.start_date);
    const auto ref = std::chrono::sys_days(cfg.reference_date);

    for (int i = 0; i < n; ++i) {
        const auto& u = truth[static_cast<std::size_t>(i)];
        const auto& rec = w.units.dataset.units[static_cast<std::size_t>(i)];
        const int gr = i / cols;
        const int gc = i % cols;
        const geo::Rect cell{kGridLon0 + gc * kGridCell, kGridLat0 + gr * kGridCell, kGridLon0 + (gc + 1) * kGridCell,
                             kGridLat0 + (gr + 1) * kGridCell};
        w.boundaries.push_back({rec.unit_id, geo::make_rect_polygon(cell)});
        w.attributes.push_back({rec.unit_id, u.population, u.working_age});

        // Users spread over the 4 tiles with Dirichlet shares.
        double g[kSub * kSub];
        double gsum = 0.0;
        for (double& v : g) {
            v = share(rng);
            gsum += v;
        }
        long long left = rec.users;
        double pleft = 1.0;
        for (int t = 0; t < kSub * kSub; ++t) {
            const int tr = gr * kSub + t / kSub;
            const int tc = gc * kSub + t % kSub;
            const double p = gsum > 0.0 ? g[t] / gsum : 1.0 / (kSub * kSub);
            long long count = left;
            if (t + 1 < kSub * kSub) {
                count = std::binomial_distribution<long long>(left, std::min(1.0, p / pleft))(rng);
                pleft -= p;
            }
            left -= count;
            const std::string id = tile_id(tr, tc);
            const geo::Rect tr_rect{kGridLon0 + tc * kSubCell, kGridLat0 + tr * kSubCell,
                                    kGridLon0 + (tc + 1) * kSubCell, kGridLat0 + (tr + 1) * kSubCell};
            w.tiles.push_back({id, tr_rect, 1.0, 1.0});
            w.tile_users[id] = count;

            // Daily history around the reference count; the reference day
            // itself reports the true count.
            std::poisson_distribution<long long> daily(static_cast<double>(count));
            for (int d = 0; d < cfg.units.n_days; ++d) {
                const auto day = first + std::chrono::days(d);
                const long long v = (day == ref) ? count : (count > 0 ? daily(rng) : 0);
                geo::TileObservation obs{id, std::chrono::year_month_day(day), cfg.window, std::nullopt};
                if (v >= cfg.units.censor_threshold) {
                    obs.count = v;
                }
                w.observations.push_back(std::move(obs));
            }

            // Raster row 0 is the northernmost row.
            const int rr = rrows - 1 - tr;
            w.duc.at(rr, tc) = static_cast<double>(static_cast<int>(u.duc));
            w.population.at(rr, tc) = static_cast<double>(u.population) / (kSub * kSub);
            w.radiance.at(rr, tc) = std::exp(u.log_radiance);
        }
    }
    return w;
}

void write_world(const SimulatedWorld& world, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    geo::write_units_geojson(dir / WorldFiles::kUnits, world.boundaries);
    geo::write_unit_attributes_csv(dir / WorldFiles::kAttributes, world.attributes);
    geo::write_tiles_csv(dir / WorldFiles::kTiles, world.tiles);
    geo::write_observations_csv(dir / WorldFiles::kObservations, world.observations);
    world.duc.write_ascii(dir / WorldFiles::kDucRaster);
    world.population.write_ascii(dir / WorldFiles::kPopulationRaster);
    world.radiance.write_ascii(dir / WorldFiles::kRadianceRaster);
    world.units.dataset.write_csv(dir / WorldFiles::kDataset);
    world.units.dataset.write_scaling(uptake::scaling_path_for(dir / WorldFiles::kDataset));

    auto truth = truth_to_json(world.units.truth);
    nlohmann::json tiles = nlohmann::json::object();
    for (const auto& [id, c] : world.tile_users) {
        tiles[id] = c;
    }
    truth["tile_users"] = tiles;
    std::ofstream out(dir / WorldFiles::kTruth);
    if (!out) {
        throw DataError("cannot write '" + (dir / WorldFiles::kTruth).string() + "'");
    }
    out << truth.dump(2) << '\n';
}

} // namespace popcal::sim
