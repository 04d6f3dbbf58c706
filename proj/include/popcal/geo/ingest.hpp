#pragma once

#include "popcal/geo/geometry.hpp"
#include "popcal/geo/raster.hpp"
#include "popcal/uptake/dataset.hpp"

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace popcal::geo {

/// One Bing-style grid tile. `inhabited_fraction` is optional in input files;
/// when missing it defaults to the land fraction.
struct GridTile {
    std::string tile_id;
    Rect bounds;
    double land_fraction = 1.0;
    double inhabited_fraction = 1.0;

    /// Throws DataError when the invariants do not hold.
    void validate() const;
};

/// Counts below the privacy threshold are never reported, so a censored
/// observation carries no count at all.
struct TileObservation {
    std::string tile_id;
    std::chrono::year_month_day date;
    int window = 0; ///< 8-hour window index in {0, 1, 2}
    std::optional<long long> count;

    bool censored() const { return !count.has_value(); }
};

struct UnitBoundary {
    std::string unit_id;
    MultiPolygon polygon;
};

struct UnitAttributes {
    std::string unit_id;
    long long population = 0;
    double working_age = 0.0;
};

/// A municipality with every covariate resolved (raw, unstandardized).
struct AdminUnit {
    UnitBoundary boundary;
    long long population = 0;
    double working_age = 0.0;
    uptake::Duc duc = uptake::Duc::Rural;
    double radiance = 0.0;
    Point centroid;

    const std::string& unit_id() const { return boundary.unit_id; }
};

struct TileCount {
    std::string tile_id;
    double count = 0.0;
};

struct Apportionment {
    std::map<std::string, double> unit_counts;
    std::vector<std::string> orphan_tiles;
    double orphan_total = 0.0;
    double input_total = 0.0;
};

/// Spreads each tile's count over the units it intersects, assuming users are
/// spread evenly over the tile's land. The land portion of a tile is its
/// intersection with the union of unit polygons, so the whole count lands on
/// land even for coastal tiles. Tiles touching no unit are reported as orphans.
Apportionment apportion_tile_counts(std::span<const GridTile> tiles, std::span<const TileCount> counts,
                                    std::span<const UnitBoundary> units);

/// Majority degree-of-urbanisation class by resident population. Each cell
/// contributes population × (fraction of the cell inside the unit). Ties go to
/// the lowest class code. Rasters must be aligned; cells whose class code is
/// not 1, 2 or 3 are ignored.
uptake::Duc assign_duc(const MultiPolygon& unit, const RasterGrid& duc_raster, const RasterGrid& pop_raster);

/// Unweighted mean of every non-nodata cell whose rectangle overlaps the unit
/// with positive area.
double zonal_mean_radiance(const MultiPolygon& unit, const RasterGrid& radiance);

/// Joins boundaries with their attribute rows and resolves DUC, radiance and
/// centroid from the rasters. Units keep the boundary order. Throws
/// DataError on a boundary without attributes or duplicate ids.
std::vector<AdminUnit> resolve_units(std::span<const UnitBoundary> boundaries,
                                     std::span<const UnitAttributes> attributes, const RasterGrid& duc_raster,
                                     const RasterGrid& pop_raster, const RasterGrid& radiance_raster);

struct DatasetBuild {
    uptake::UptakeDataset dataset;
    std::vector<std::string> warnings;
};

/// Rounds apportioned users (half to even), clamps FB to N, floors
/// non-positive radiance, stratifies an 80/20 (by default) split per DUC and
/// z-scores covariates with train-only population moments.
DatasetBuild build_dataset(std::span<const AdminUnit> units, const std::map<std::string, double>& user_counts,
                           std::uint64_t split_seed, double train_fraction = 0.8);

/// Deterministic stratified split. Returns a Train/Test flag per unit.
std::vector<uptake::Split> stratified_split(std::span<const uptake::Duc> ducs, std::uint64_t seed,
                                            double train_fraction);

std::chrono::year_month_day parse_date(std::string_view iso);
std::string format_date(std::chrono::year_month_day d);
bool is_weekday(std::chrono::year_month_day d);

} // namespace popcal::geo
