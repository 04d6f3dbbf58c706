#pragma once

#include "popcal/uptake/dataset.hpp"

#include <json.hpp>

#include <random>
#include <span>

#include <array>
#include <cstdint>
#include <vector>

namespace popcal::sim {

using PerDuc = std::array<double, uptake::kDucCount>;

/// Generating coefficients on the standardized covariate scale.
struct Truth {
    PerDuc a{-4.123, -4.054, -3.694};
    PerDuc b_w{0.306, 0.376, 0.125};
    PerDuc b_l{0.511, 0.286, 0.126};
    PerDuc rho{0.006, 0.004, 0.007}; ///< 0 gives a plain binomial
    double sigma = 0.352;
    double delta = 0.839;
};

struct SimConfig {
    int n_units = 1200;
    PerDuc duc_proportions{0.20, 0.55, 0.25};
    Truth truth;
    double train_fraction = 0.8;
    std::uint64_t seed = 1;
    /// Seed of the spatial field; 0 reuses `seed`.
    std::uint64_t spatial_seed = 0;
    int censor_threshold = 10;
    int n_days = 151;
    /// Place centroids at the centres of a regular grid of square cells
    /// instead of uniformly at random.
    bool grid_layout = false;

    void validate() const;
};

/// Raw (unstandardized) covariates and latent values per unit.
struct UnitTruth {
    uptake::Duc duc = uptake::Duc::Rural;
    long long population = 0;
    double working_age = 0.0;  ///< proportion
    double log_density = 0.0;  ///< log persons per km^2
    double log_radiance = 0.0;
    double lon = 0.0;
    double lat = 0.0;
    double spatial = 0.0;      ///< GP effect on the logit scale
    double eta = 0.0;
    double p = 0.0;
};

struct SimTruth {
    Truth truth;
    std::vector<UnitTruth> units;
};

struct SimulatedUnits {
    uptake::UptakeDataset dataset;
    SimTruth truth;
};

/// Grid layout: cells of kGridCell degrees, ceil(sqrt(n/3)) columns from
/// (kGridLon0, kGridLat0), filled row by row. Both constants are dyadic so
/// cell edges are exact in binary floating point.
inline constexpr double kGridCell = 0.0625;
inline constexpr double kGridLon0 = 120.0;
inline constexpr double kGridLat0 = 6.0;
int grid_columns(int n_units);

// Mean census population per DUC used for log-normal unit sizes.
inline constexpr PerDuc kMeanPopulation{26658.0, 42748.0, 203762.0};

/// Draws units from the urbanisation-driven generative graph:
/// DUC -> {age, density, radiance, FB}, density -> radiance, age -> FB,
/// radiance -> FB, plus a Matern-3/2 spatial field on the centroids.
SimulatedUnits simulate_units(const SimConfig& cfg);

nlohmann::json truth_to_json(const SimTruth& truth);

/// Exact Matern-3/2 field at the given points (Cholesky with 1e-8 jitter as
/// a fallback). Throws NumericalError if the covariance stays indefinite.
std::vector<double> matern32_field(std::span<const double> xs, std::span<const double> ys, double sigma,
                                   double delta, std::uint64_t seed);

/// Beta-binomial draw through a Beta(p phi, (1-p) phi) success probability.
/// rho = 0 reduces to a binomial draw.
long long beta_binomial_draw(std::mt19937_64& rng, long long n, double p, double rho);

} // namespace popcal::sim
