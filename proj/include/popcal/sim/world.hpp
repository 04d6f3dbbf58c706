#pragma once

#include "popcal/geo/ingest.hpp"
#include "popcal/geo/raster.hpp"
#include "popcal/sim/units.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace popcal::sim {

/// Synthetic geography around simulate_units: every unit is one grid cell
/// split into 2 x 2 tiles and 2 x 2 raster cells, so ingest recovers the
/// simulated covariates exactly.
struct WorldConfig {
    SimConfig units;
    std::chrono::year_month_day reference_date{std::chrono::year{2020}, std::chrono::month{5}, std::chrono::day{4}};
    int window = 2;
    /// First observed day; n_days consecutive days follow.
    std::chrono::year_month_day start_date{std::chrono::year{2020}, std::chrono::month{3}, std::chrono::day{1}};
    /// Dirichlet concentration of how a unit's users spread over its tiles.
    /// Small values leave some tiles sparse enough to be censored.
    double tile_concentration = 0.5;

    void validate() const;
};

struct SimulatedWorld {
    SimulatedUnits units;
    std::vector<geo::UnitBoundary> boundaries;
    std::vector<geo::UnitAttributes> attributes;
    std::vector<geo::GridTile> tiles;
    std::vector<geo::TileObservation> observations;
    std::map<std::string, long long> tile_users; ///< true reference-time counts
    geo::RasterGrid duc;
    geo::RasterGrid population;
    geo::RasterGrid radiance;
};

SimulatedWorld simulate_world(const WorldConfig& cfg);

/// File names written by write_world, relative to the output directory.
struct WorldFiles {
    static constexpr const char* kUnits = "units.geojson";
    static constexpr const char* kAttributes = "unit_attributes.csv";
    static constexpr const char* kTiles = "tiles.csv";
    static constexpr const char* kObservations = "observations.csv";
    static constexpr const char* kDucRaster = "duc.asc";
    static constexpr const char* kPopulationRaster = "population.asc";
    static constexpr const char* kRadianceRaster = "radiance.asc";
    static constexpr const char* kDataset = "dataset.csv";
    static constexpr const char* kTruth = "truth.json";
};

void write_world(const SimulatedWorld& world, const std::filesystem::path& dir);

} // namespace popcal::sim
