#include "popcal/geo/io.hpp"

#include "popcal/common/csv.hpp"
#include "popcal/common/error.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

namespace popcal::geo {

using nlohmann::json;

std::vector<GridTile> read_tiles_csv(const std::filesystem::path& path)
{
    const auto t = csv::Table::read(path);
    const auto c_id = t.column("tile_id");
    const auto c_x0 = t.column("min_lon");
    const auto c_y0 = t.column("min_lat");
    const auto c_x1 = t.column("max_lon");
    const auto c_y1 = t.column("max_lat");
    const auto c_land = t.column("land_fraction");
    const auto c_inh = t.find_column("inhabited_fraction");

    std::vector<GridTile> tiles;
    std::set<std::string> seen;
    for (const auto& row : t.rows()) {
        GridTile tile;
        tile.tile_id = t.str(row, c_id);
        if (!seen.insert(tile.tile_id).second) {
            t.fail(row, c_id, "duplicate tile id '" + tile.tile_id + "'");
        }
        tile.bounds = {t.real(row, c_x0), t.real(row, c_y0), t.real(row, c_x1), t.real(row, c_y1)};
        if (tile.bounds.degenerate()) {
            t.fail(row, c_x1, "degenerate tile bounds");
        }
        tile.land_fraction = t.real(row, c_land);
        if (!(tile.land_fraction >= 0.0 && tile.land_fraction <= 1.0)) {
            t.fail(row, c_land, "must lie in [0, 1]");
        }
        tile.inhabited_fraction = tile.land_fraction;
        if (c_inh && !t.str(row, *c_inh).empty()) {
            tile.inhabited_fraction = t.real(row, *c_inh);
            if (!(tile.inhabited_fraction >= 0.0 && tile.inhabited_fraction <= tile.land_fraction + 1e-12)) {
                t.fail(row, *c_inh, "must lie in [0, land_fraction]");
            }
        }
        tiles.push_back(std::move(tile));
    }
    return tiles;
}

void write_tiles_csv(const std::filesystem::path& path, std::span<const GridTile> tiles)
{
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    out << "tile_id,min_lon,min_lat,max_lon,max_lat,land_fraction,inhabited_fraction\n";
    for (const auto& t : tiles) {
        out << t.tile_id << ',' << csv::format_real(t.bounds.min_x) << ',' << csv::format_real(t.bounds.min_y) << ','
            << csv::format_real(t.bounds.max_x) << ',' << csv::format_real(t.bounds.max_y) << ','
            << csv::format_real(t.land_fraction) << ',' << csv::format_real(t.inhabited_fraction) << '\n';
    }
}

std::vector<TileObservation> read_observations_csv(const std::filesystem::path& path, long long censor_threshold)
{
    const auto t = csv::Table::read(path);
    const auto c_id = t.column("tile_id");
    const auto c_date = t.column("date");
    const auto c_win = t.column("window");
    const auto c_count = t.column("count");

    std::vector<TileObservation> obs;
    obs.reserve(t.rows().size());
    for (const auto& row : t.rows()) {
        TileObservation o;
        o.tile_id = t.str(row, c_id);
        try {
            o.date = parse_date(t.str(row, c_date));
        } catch (const DataError& e) {
            t.fail(row, c_date, e.what());
        }
        const auto w = t.integer(row, c_win);
        if (w < 0 || w > 2) {
            t.fail(row, c_win, "window must be 0, 1 or 2");
        }
        o.window = static_cast<int>(w);
        o.count = t.optional_integer(row, c_count);
        if (o.count && *o.count < censor_threshold) {
            t.fail(row, c_count, "observed count below the censoring threshold " + std::to_string(censor_threshold));
        }
        obs.push_back(std::move(o));
    }
    return obs;
}

void write_observations_csv(const std::filesystem::path& path, std::span<const TileObservation> obs)
{
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    out << "tile_id,date,window,count\n";
    for (const auto& o : obs) {
        out << o.tile_id << ',' << format_date(o.date) << ',' << o.window << ',';
        if (o.count) {
            out << *o.count;
        }
        out << '\n';
    }
}

namespace {

Ring parse_ring(const json& j)
{
    Ring r;
    for (const auto& p : j) {
        r.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    if (r.size() > 1 && r.front().x == r.back().x && r.front().y == r.back().y) {
        r.pop_back();
    }
    if (r.size() < 3) {
        throw DataError("polygon ring with fewer than three vertices");
    }
    return r;
}

Polygon parse_polygon(const json& rings)
{
    if (!rings.is_array() || rings.empty()) {
        throw DataError("polygon without rings");
    }
    Polygon p;
    p.outer = parse_ring(rings.at(0));
    for (std::size_t i = 1; i < rings.size(); ++i) {
        p.holes.push_back(parse_ring(rings.at(i)));
    }
    return p;
}

json ring_json(const Ring& r)
{
    json out = json::array();
    for (const auto& p : r) {
        out.push_back({p.x, p.y});
    }
    if (!r.empty()) {
        out.push_back({r.front().x, r.front().y});
    }
    return out;
}

} // namespace

std::vector<UnitBoundary> read_units_geojson(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    std::vector<UnitBoundary> units;
    try {
        const json doc = json::parse(in);
        std::size_t index = 0;
        for (const auto& f : doc.at("features")) {
            const std::string where = path.string() + ": feature " + std::to_string(index++);
            UnitBoundary u;
            const auto& props = f.at("properties");
            const auto& id = props.at("unit_id");
            u.unit_id = id.is_string() ? id.get<std::string>() : id.dump();
            const auto& geom = f.at("geometry");
            const auto type = geom.at("type").get<std::string>();
            try {
                if (type == "Polygon") {
                    u.polygon.parts.push_back(parse_polygon(geom.at("coordinates")));
                } else if (type == "MultiPolygon") {
                    for (const auto& poly : geom.at("coordinates")) {
                        u.polygon.parts.push_back(parse_polygon(poly));
                    }
                } else {
                    throw DataError("unsupported geometry type '" + type + "'");
                }
            } catch (const DataError& e) {
                throw DataError(where + ": " + e.what());
            }
            if (!(u.polygon.area() > 0.0)) {
                throw DataError(where + ": polygon area must be positive");
            }
            units.push_back(std::move(u));
        }
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": malformed GeoJSON: " + e.what());
    }
    return units;
}

void write_units_geojson(const std::filesystem::path& path, std::span<const UnitBoundary> units)
{
    json doc;
    doc["type"] = "FeatureCollection";
    doc["features"] = json::array();
    for (const auto& u : units) {
        json coords = json::array();
        for (const auto& part : u.polygon.parts) {
            json rings = json::array();
            rings.push_back(ring_json(part.outer));
            for (const auto& h : part.holes) {
                rings.push_back(ring_json(h));
            }
            coords.push_back(std::move(rings));
        }
        json f;
        f["type"] = "Feature";
        f["properties"] = {{"unit_id", u.unit_id}};
        f["geometry"] = {{"type", "MultiPolygon"}, {"coordinates", std::move(coords)}};
        doc["features"].push_back(std::move(f));
    }
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    out << doc.dump() << '\n';
}

std::vector<UnitAttributes> read_unit_attributes_csv(const std::filesystem::path& path)
{
    const auto t = csv::Table::read(path);
    const auto c_id = t.column("unit_id");
    const auto c_pop = t.column("pop");
    const auto c_w = t.column("working_age_prop");
    std::vector<UnitAttributes> out;
    for (const auto& row : t.rows()) {
        UnitAttributes a;
        a.unit_id = t.str(row, c_id);
        a.population = t.integer(row, c_pop);
        if (a.population < 1) {
            t.fail(row, c_pop, "population must be >= 1");
        }
        a.working_age = t.real(row, c_w);
        if (!(a.working_age > 0.0 && a.working_age < 1.0)) {
            t.fail(row, c_w, "must lie in (0, 1)");
        }
        out.push_back(std::move(a));
    }
    return out;
}

void write_unit_attributes_csv(const std::filesystem::path& path, std::span<const UnitAttributes> attrs)
{
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    out << "unit_id,pop,working_age_prop\n";
    for (const auto& a : attrs) {
        out << a.unit_id << ',' << a.population << ',' << csv::format_real(a.working_age) << '\n';
    }
}

} // namespace popcal::geo
