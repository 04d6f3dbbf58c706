#pragma once

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace popcal::eval {

struct ParetoFit {
    double k = 0.0;
    double sigma = 0.0;
};

/// Zhang-Stephens empirical-Bayes fit of a generalized Pareto distribution
/// to exceedances `x` sorted ascending, with the k shrinkage toward 0.5 used
/// by PSIS for small samples.
ParetoFit gpd_fit(std::span<const double> x);

/// Quantile of the generalized Pareto distribution with location 0.
double gpd_quantile(double p, double k, double sigma);

struct PsisResult {
    std::vector<double> log_weights; ///< normalised: log sum exp = 0
    double pareto_k = 0.0;           ///< -inf when every ratio is identical
    /// log_weights + log_normalizer are the smoothed weights on the scale of
    /// the input log ratios.
    double log_normalizer = 0.0;
};

/// Pareto-smoothed importance weights from log importance ratios. The
/// largest 20% of ratios are replaced by expected order statistics of the
/// fitted tail, capped at the largest raw ratio.
PsisResult psis_smooth(std::span<const double> log_ratios);

struct LooResult {
    std::vector<double> elpd_i;
    std::vector<double> pareto_k;
    double elpd = 0.0;
    double se = 0.0;

    /// Counts for k < 0.5, 0.5 <= k <= 0.7, k > 0.7.
    std::array<int, 3> k_brackets() const;
};

/// Leave-one-out predictive density from a draws x units log-likelihood
/// matrix. Throws std::invalid_argument on non-finite entries.
LooResult psis_loo(const Eigen::MatrixXd& log_lik);

// unit_id,elpd_i,pareto_k
void write_loo_csv(const std::filesystem::path& path, std::span<const std::string> unit_ids, const LooResult& loo);

} // namespace popcal::eval
