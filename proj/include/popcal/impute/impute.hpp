#pragma once

#include "popcal/geo/ingest.hpp"
#include "popcal/impute/model.hpp"
#include "popcal/mcmc/draws.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace popcal::impute {

enum class LandWeight { Inhabited, Land };

struct ImputeOptions {
    std::chrono::year_month_day reference_date{};
    int reference_window = 2;
    std::uint64_t seed = 1;
    LandWeight weight = LandWeight::Inhabited;
};

struct ImputedCount {
    std::string tile_id;
    double count = 0.0;
    Provenance provenance = Provenance::Observed;
};

struct ImputedCounts {
    std::chrono::year_month_day reference_date{};
    int reference_window = 2;
    /// Index of the joint posterior draw used (chain-major flat index).
    std::size_t draw_index = 0;
    std::vector<ImputedCount> tiles;
};

/// Completes the reference-time counts for every tile in `tiles`. Observed
/// values pass through unchanged. A tile that is censored or missing at the
/// reference time gets a Poisson draw at its rate from one joint posterior
/// draw, scaled by its inhabited (or land) fraction. Throws DataError
/// "unmatched tile" when such a tile has no fitted rate.
ImputedCounts impute(const mcmc::PosteriorDraws& draws, const ImputationModel& model,
                     std::span<const geo::GridTile> tiles, std::span<const geo::TileObservation> observations,
                     const ImputeOptions& options);

std::string reference_timestamp(std::chrono::year_month_day date, int window);

// tile_id,reference_timestamp,imputed_count,provenance
void write_imputed_csv(const std::filesystem::path& path, const ImputedCounts& counts);
std::vector<geo::TileCount> read_imputed_csv(const std::filesystem::path& path);

struct PpcRow {
    std::string tile_id;
    double predictive_median = 0.0;
    std::optional<double> observed_median;
    std::optional<double> difference; ///< predictive minus observed
};

/// Per-tile posterior-predictive median (one Poisson draw per posterior draw)
/// against the median of the tile's observed entries.
std::vector<PpcRow> imputation_ppc(const mcmc::PosteriorDraws& draws, const ImputationModel& model,
                                   std::uint64_t seed);

void write_ppc_csv(const std::filesystem::path& path, std::span<const PpcRow> rows);

struct RateComparison {
    std::string tile_id;
    double hierarchical_mean = 0.0;
    double independent_mean = 0.0;
    double relative_difference = 0.0;
};

/// Posterior means of each tile's rate under the two fits.
std::vector<RateComparison> compare_rate_means(const mcmc::PosteriorDraws& hierarchical,
                                               const ImputationModel& hierarchical_model,
                                               const mcmc::PosteriorDraws& independent,
                                               const ImputationModel& independent_model);

} // namespace popcal::impute
