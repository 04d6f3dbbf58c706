#include "popcal/impute/impute.hpp"

#include "popcal/common/csv.hpp"
#include "popcal/common/error.hpp"
#include "popcal/common/math.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>

namespace popcal::impute {

namespace {

long long poisson_draw(std::mt19937_64& rng, double lambda)
{
    if (!(lambda > 0.0)) {
        return 0;
    }
    return std::poisson_distribution<long long>(lambda)(rng);
}

} // namespace

ImputedCounts impute(const mcmc::PosteriorDraws& draws, const ImputationModel& model,
                     std::span<const geo::GridTile> tiles, std::span<const geo::TileObservation> observations,
                     const ImputeOptions& options)
{
    if (draws.total_draws() == 0) {
        throw DataError("no posterior draws");
    }
    std::map<std::string, long long> observed;
    for (const auto& o : observations) {
        if (o.date == options.reference_date && o.window == options.reference_window && o.count) {
            observed[o.tile_id] = *o.count;
        }
    }
    std::mt19937_64 rng(options.seed);
    ImputedCounts out;
    out.reference_date = options.reference_date;
    out.reference_window = options.reference_window;
    out.draw_index = std::uniform_int_distribution<std::size_t>(0, draws.total_draws() - 1)(rng);
    const auto row = draws.row(out.draw_index);

    for (const auto& tile : tiles) {
        ImputedCount c;
        c.tile_id = tile.tile_id;
        if (const auto it = observed.find(tile.tile_id); it != observed.end()) {
            c.count = static_cast<double>(it->second);
            c.provenance = Provenance::Observed;
        } else {
            const auto col = model.rate_column(tile.tile_id);
            if (!col) {
                throw DataError("unmatched tile '" + tile.tile_id + "'");
            }
            const double weight =
                options.weight == LandWeight::Inhabited ? tile.inhabited_fraction : tile.land_fraction;
            c.count = static_cast<double>(poisson_draw(rng, row[*col])) * weight;
            c.provenance = model.provenance(tile.tile_id);
        }
        out.tiles.push_back(std::move(c));
    }
    return out;
}

std::string reference_timestamp(std::chrono::year_month_day date, int window)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "T%02d:00:00Z", 8 * window);
    return geo::format_date(date) + buf;
}

void write_imputed_csv(const std::filesystem::path& path, const ImputedCounts& counts)
{
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    const auto stamp = reference_timestamp(counts.reference_date, counts.reference_window);
    out << "tile_id,reference_timestamp,imputed_count,provenance\n";
    for (const auto& t : counts.tiles) {
        out << t.tile_id << ',' << stamp << ',' << csv::format_real(t.count) << ',' << provenance_name(t.provenance)
            << '\n';
    }
}

std::vector<geo::TileCount> read_imputed_csv(const std::filesystem::path& path)
{
    const auto t = csv::Table::read(path);
    const auto c_id = t.column("tile_id");
    const auto c_count = t.column("imputed_count");
    std::vector<geo::TileCount> out;
    std::set<std::string> seen;
    for (const auto& row : t.rows()) {
        geo::TileCount c{t.str(row, c_id), t.real(row, c_count)};
        if (!(c.count >= 0.0)) {
            t.fail(row, c_count, "count must be non-negative");
        }
        if (!seen.insert(c.tile_id).second) {
            t.fail(row, c_id, "duplicate tile");
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<PpcRow> imputation_ppc(const mcmc::PosteriorDraws& draws, const ImputationModel& model,
                                   std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<PpcRow> out;
    std::vector<double> predictive(draws.total_draws());
    for (const auto& h : model.histories()) {
        const auto col = *model.rate_column(h.tile_id);
        for (std::size_t d = 0; d < draws.total_draws(); ++d) {
            predictive[d] = static_cast<double>(poisson_draw(rng, draws.row(d)[col]));
        }
        PpcRow r;
        r.tile_id = h.tile_id;
        r.predictive_median = median(predictive);
        std::vector<double> obs;
        for (const auto& c : h.counts) {
            if (c) {
                obs.push_back(static_cast<double>(*c));
            }
        }
        if (!obs.empty()) {
            r.observed_median = median(obs);
            r.difference = r.predictive_median - *r.observed_median;
        }
        out.push_back(std::move(r));
    }
    return out;
}

void write_ppc_csv(const std::filesystem::path& path, std::span<const PpcRow> rows)
{
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    out << "tile_id,predictive_median,observed_median,difference\n";
    for (const auto& r : rows) {
        out << r.tile_id << ',' << csv::format_real(r.predictive_median) << ','
            << (r.observed_median ? csv::format_real(*r.observed_median) : "") << ','
            << (r.difference ? csv::format_real(*r.difference) : "") << '\n';
    }
}

std::vector<RateComparison> compare_rate_means(const mcmc::PosteriorDraws& hierarchical,
                                               const ImputationModel& hierarchical_model,
                                               const mcmc::PosteriorDraws& independent,
                                               const ImputationModel& independent_model)
{
    std::vector<RateComparison> out;
    for (const auto& h : hierarchical_model.histories()) {
        const auto other = independent_model.rate_column(h.tile_id);
        if (!other) {
            continue;
        }
        RateComparison c;
        c.tile_id = h.tile_id;
        c.hierarchical_mean = mean(hierarchical.flat(*hierarchical_model.rate_column(h.tile_id)));
        c.independent_mean = mean(independent.flat(*other));
        c.relative_difference = std::fabs(c.hierarchical_mean - c.independent_mean) / c.independent_mean;
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace popcal::impute
