#include "popcal/geo/ingest.hpp"

#include "popcal/common/error.hpp"
#include "popcal/common/math.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

namespace popcal::geo {

using uptake::Duc;
using uptake::Split;

void GridTile::validate() const
{
    if (bounds.degenerate()) {
        throw DataError("tile '" + tile_id + "': degenerate bounds");
    }
    if (!(land_fraction >= 0.0 && land_fraction <= 1.0)) {
        throw DataError("tile '" + tile_id + "': land_fraction outside [0, 1]");
    }
    if (!(inhabited_fraction >= 0.0 && inhabited_fraction <= land_fraction + 1e-12)) {
        throw DataError("tile '" + tile_id + "': inhabited_fraction outside [0, land_fraction]");
    }
}

Apportionment apportion_tile_counts(std::span<const GridTile> tiles, std::span<const TileCount> counts,
                                    std::span<const UnitBoundary> units)
{
    std::unordered_map<std::string, const GridTile*> by_id;
    for (const auto& t : tiles) {
        by_id.emplace(t.tile_id, &t);
    }
    std::vector<Rect> unit_bounds;
    unit_bounds.reserve(units.size());
    for (const auto& u : units) {
        unit_bounds.push_back(u.polygon.bounds());
    }

    Apportionment out;
    for (const auto& u : units) {
        out.unit_counts.emplace(u.unit_id, 0.0);
    }

    std::vector<std::pair<std::size_t, double>> overlaps;
    for (const auto& c : counts) {
        const auto it = by_id.find(c.tile_id);
        if (it == by_id.end()) {
            throw DataError("observation references unknown tile '" + c.tile_id + "'");
        }
        const GridTile& tile = *it->second;
        out.input_total += c.count;

        overlaps.clear();
        double land_area = 0.0;
        for (std::size_t i = 0; i < units.size(); ++i) {
            if (!unit_bounds[i].intersects(tile.bounds)) {
                continue;
            }
            const double a = intersection_area(tile.bounds, units[i].polygon);
            if (a > 0.0) {
                overlaps.emplace_back(i, a);
                land_area += a;
            }
        }
        if (overlaps.empty()) {
            out.orphan_tiles.push_back(tile.tile_id);
            out.orphan_total += c.count;
            continue;
        }
        for (const auto& [i, a] : overlaps) {
            out.unit_counts[units[i].unit_id] += c.count * (a / land_area);
        }
    }
    return out;
}

Duc assign_duc(const MultiPolygon& unit, const RasterGrid& duc_raster, const RasterGrid& pop_raster)
{
    if (!duc_raster.aligned_with(pop_raster)) {
        throw DataError("DUC and population rasters are not aligned");
    }
    std::array<double, uptake::kDucCount> by_class{};
    const CellWindow w = duc_raster.window(unit.bounds());
    for (int r = w.row_begin; r < w.row_end; ++r) {
        for (int c = w.col_begin; c < w.col_end; ++c) {
            const double code = duc_raster.at(r, c);
            const double pop = pop_raster.at(r, c);
            if (duc_raster.is_nodata(code) || pop_raster.is_nodata(pop) || !(pop > 0.0)) {
                continue;
            }
            const double rounded = std::round(code);
            if (rounded != code || rounded < 1.0 || rounded > 3.0) {
                continue;
            }
            const double share = overlap_fraction(duc_raster.cell_rect(r, c), unit);
            by_class[static_cast<std::size_t>(rounded) - 1] += pop * share;
        }
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < by_class.size(); ++k) {
        if (by_class[k] > by_class[best]) {
            best = k;
        }
    }
    if (!(by_class[best] > 0.0)) {
        throw DataError("no DUC evidence");
    }
    return static_cast<Duc>(best + 1);
}

double zonal_mean_radiance(const MultiPolygon& unit, const RasterGrid& radiance)
{
    double sum = 0.0;
    std::size_t n = 0;
    const CellWindow w = radiance.window(unit.bounds());
    for (int r = w.row_begin; r < w.row_end; ++r) {
        for (int c = w.col_begin; c < w.col_end; ++c) {
            const double v = radiance.at(r, c);
            if (radiance.is_nodata(v)) {
                continue;
            }
            if (intersection_area(radiance.cell_rect(r, c), unit) > 0.0) {
                sum += v;
                ++n;
            }
        }
    }
    if (n == 0) {
        throw DataError("no radiance coverage");
    }
    return sum / static_cast<double>(n);
}

std::vector<Split> stratified_split(std::span<const Duc> ducs, std::uint64_t seed, double train_fraction)
{
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
        throw UsageError("train fraction must lie in (0, 1]");
    }
    std::vector<Split> out(ducs.size(), Split::Test);
    std::mt19937_64 rng(seed);
    for (Duc d : uptake::kAllDucs) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ducs.size(); ++i) {
            if (ducs[i] == d) {
                idx.push_back(i);
            }
        }
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(idx.size())));
        for (std::size_t k = 0; k < n_train; ++k) {
            out[idx[k]] = Split::Train;
        }
    }
    return out;
}

namespace {

uptake::ColumnScaling fit_scaling(const std::vector<double>& all, const std::vector<Split>& split,
                                  std::string_view name, std::vector<std::string>& warnings)
{
    std::vector<double> train;
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (split[i] == Split::Train) {
            train.push_back(all[i]);
        }
    }
    if (train.empty()) {
        throw DataError("train split is empty");
    }
    uptake::ColumnScaling s{mean(train), population_sd(train)};
    if (!(s.sd > 0.0)) {
        warnings.push_back("covariate '" + std::string(name) + "' is constant on the train split; using sd = 1");
        s.sd = 1.0;
    }
    return s;
}

} // namespace

std::vector<AdminUnit> resolve_units(std::span<const UnitBoundary> boundaries,
                                     std::span<const UnitAttributes> attributes, const RasterGrid& duc_raster,
                                     const RasterGrid& pop_raster, const RasterGrid& radiance_raster)
{
    std::map<std::string, const UnitAttributes*> by_id;
    for (const auto& a : attributes) {
        if (!by_id.emplace(a.unit_id, &a).second) {
            throw DataError("duplicate attributes for unit '" + a.unit_id + "'");
        }
    }
    std::vector<AdminUnit> out;
    out.reserve(boundaries.size());
    std::map<std::string, int> seen;
    for (const auto& b : boundaries) {
        if (seen[b.unit_id]++ > 0) {
            throw DataError("duplicate boundary for unit '" + b.unit_id + "'");
        }
        const auto it = by_id.find(b.unit_id);
        if (it == by_id.end()) {
            throw DataError("unit '" + b.unit_id + "' has no attribute row");
        }
        AdminUnit u;
        u.boundary = b;
        u.population = it->second->population;
        u.working_age = it->second->working_age;
        u.duc = assign_duc(b.polygon, duc_raster, pop_raster);
        u.radiance = zonal_mean_radiance(b.polygon, radiance_raster);
        u.centroid = b.polygon.centroid();
        out.push_back(std::move(u));
    }
    return out;
}

DatasetBuild build_dataset(std::span<const AdminUnit> units, const std::map<std::string, double>& user_counts,
                           std::uint64_t split_seed, double train_fraction)
{
    DatasetBuild out;
    if (units.empty()) {
        throw DataError("no administrative units");
    }

    double min_positive = INFINITY;
    for (const auto& u : units) {
        if (u.radiance > 0.0) {
            min_positive = std::min(min_positive, u.radiance);
        }
    }
    if (!std::isfinite(min_positive)) {
        throw DataError("no unit has positive radiance");
    }
    const double radiance_floor = 0.5 * min_positive;

    std::vector<Duc> ducs;
    std::vector<double> w_raw;
    std::vector<double> logl_raw;
    std::vector<double> lon_raw;
    std::vector<double> lat_raw;
    std::vector<long long> users;

    const int saved_round = std::fegetround();
    std::fesetround(FE_TONEAREST);
    for (const auto& u : units) {
        if (u.population < 1) {
            throw DataError("unit '" + u.unit_id() + "': population must be >= 1");
        }
        if (!(u.working_age > 0.0 && u.working_age < 1.0)) {
            throw DataError("unit '" + u.unit_id() + "': working-age proportion outside (0, 1)");
        }
        const auto it = user_counts.find(u.unit_id());
        if (it == user_counts.end()) {
            throw DataError("unit '" + u.unit_id() + "': no user count");
        }
        if (!(it->second >= 0.0)) {
            throw DataError("unit '" + u.unit_id() + "': negative user count");
        }
        auto fb = static_cast<long long>(std::nearbyint(it->second));
        if (fb > u.population) {
            std::ostringstream msg;
            msg << "unit '" << u.unit_id() << "': FB count " << it->second << " exceeds population "
                << u.population << "; clamped";
            out.warnings.push_back(msg.str());
            fb = u.population;
        }
        double radiance = u.radiance;
        if (!(radiance > 0.0)) {
            out.warnings.push_back("unit '" + u.unit_id() + "': non-positive radiance floored");
            radiance = radiance_floor;
        }
        ducs.push_back(u.duc);
        users.push_back(fb);
        w_raw.push_back(u.working_age);
        logl_raw.push_back(std::log(radiance));
        lon_raw.push_back(u.centroid.x);
        lat_raw.push_back(u.centroid.y);
    }
    std::fesetround(saved_round);

    const auto split = stratified_split(ducs, split_seed, train_fraction);

    auto& ds = out.dataset;
    ds.scaling.working_age = fit_scaling(w_raw, split, "working_age", out.warnings);
    ds.scaling.log_radiance = fit_scaling(logl_raw, split, "log_radiance", out.warnings);
    ds.scaling.lon = fit_scaling(lon_raw, split, "lon", out.warnings);
    ds.scaling.lat = fit_scaling(lat_raw, split, "lat", out.warnings);

    for (std::size_t i = 0; i < units.size(); ++i) {
        uptake::UnitRecord r;
        r.unit_id = units[i].unit_id();
        r.duc = ducs[i];
        r.population = units[i].population;
        r.users = users[i];
        r.working_age = ds.scaling.working_age.apply(w_raw[i]);
        r.log_radiance = ds.scaling.log_radiance.apply(logl_raw[i]);
        r.x = ds.scaling.lon.apply(lon_raw[i]);
        r.y = ds.scaling.lat.apply(lat_raw[i]);
        r.split = split[i];
        ds.units.push_back(std::move(r));
    }
    return out;
}

std::chrono::year_month_day parse_date(std::string_view iso)
{
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    char tail = 0;
    const std::string s(iso);
    if (std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3 || s.size() != 10) {
        throw DataError("invalid ISO-8601 date '" + s + "'");
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) {
        throw DataError("invalid calendar date '" + s + "'");
    }
    return ymd;
}

std::string format_date(std::chrono::year_month_day d)
{
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                  static_cast<unsigned>(d.day()));
    return buf;
}

bool is_weekday(std::chrono::year_month_day d)
{
    const std::chrono::weekday wd{std::chrono::sys_days{d}};
    return wd != std::chrono::Saturday && wd != std::chrono::Sunday;
}

} // namespace popcal::geo
