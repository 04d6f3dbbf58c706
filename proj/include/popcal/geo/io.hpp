#pragma once

#include "popcal/geo/ingest.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace popcal::geo {

// tile_id,min_lon,min_lat,max_lon,max_lat,land_fraction,inhabited_fraction
// (inhabited_fraction may be left empty)
std::vector<GridTile> read_tiles_csv(const std::filesystem::path& path);
void write_tiles_csv(const std::filesystem::path& path, std::span<const GridTile> tiles);

// tile_id,date,window,count   (empty count = censored)
std::vector<TileObservation> read_observations_csv(const std::filesystem::path& path, long long censor_threshold = 10);
void write_observations_csv(const std::filesystem::path& path, std::span<const TileObservation> obs);

/// GeoJSON FeatureCollection of Polygon/MultiPolygon features carrying a
/// "unit_id" property.
std::vector<UnitBoundary> read_units_geojson(const std::filesystem::path& path);
void write_units_geojson(const std::filesystem::path& path, std::span<const UnitBoundary> units);

// unit_id,pop,working_age_prop
std::vector<UnitAttributes> read_unit_attributes_csv(const std::filesystem::path& path);
void write_unit_attributes_csv(const std::filesystem::path& path, std::span<const UnitAttributes> attrs);

} // namespace popcal::geo
