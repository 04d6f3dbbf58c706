#pragma once

#include "popcal/mcmc/draws.hpp"
#include "popcal/uptake/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace popcal::uptake {

struct UnitPrediction {
    std::size_t unit = 0; ///< dataset index
    double mean = 0.0;
    double median = 0.0;
    double hdi_lower = 0.0;
    double hdi_upper = 0.0;
};

struct Predictions {
    std::vector<UnitPrediction> summary;
    /// rates[u][d]: predictive uptake rate of the u-th requested unit under
    /// posterior draw d (chain-major).
    std::vector<std::vector<double>> rates;
};

inline constexpr double kHdiMass = 0.87;

/// One predictive count per posterior draw and unit, returned as rates
/// FB / N. Beta-binomial kinds draw p from Beta(alpha, beta) first. Every
/// unit has its own stream seeded from (seed, dataset index), so results do
/// not depend on which units are requested together.
Predictions posterior_predict(const UptakeModel& model, const mcmc::PosteriorDraws& draws,
                              std::span<const std::size_t> units, std::uint64_t seed, double hdi_mass = kHdiMass);

/// log p(FB_i | draw) for every draw (rows) and train unit (columns).
Eigen::MatrixXd pointwise_log_likelihood(const UptakeModel& model, const mcmc::PosteriorDraws& draws);

} // namespace popcal::uptake
