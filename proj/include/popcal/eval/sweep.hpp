#pragma once

#include "popcal/eval/metrics.hpp"
#include "popcal/mcmc/nuts.hpp"
#include "popcal/uptake/model.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace popcal::eval {

/// Predictive rate samples of a fitted model for the dataset's test units.
ModelPredictions test_predictions(const uptake::UptakeModel& model, const mcmc::PosteriorDraws& draws,
                                  std::uint64_t seed);

/// One fitted basis count: LOO over train units and per-DUC test metrics.
struct SweepRow {
    int n_basis = 0;
    double elpd_loo = 0.0;
    double elpd_se = 0.0;
    int pareto_k_high = 0; ///< units with k > 0.7
    std::vector<MetricRow> metrics;
};

/// Fits the full model once per basis count with the same sampler settings.
std::vector<SweepRow> basis_sweep(const uptake::UptakeDataset& data, std::span<const int> n_basis,
                                  const mcmc::SamplerConfig& sampler, std::uint64_t predict_seed);

/// Wide table, one row per basis count:
/// n_basis,elpd_loo,elpd_se,pareto_k_high, then <duc>_<metric> and
/// <duc>_<metric>_pct for every DUC and metric (empty when omitted).
std::vector<std::string> sweep_columns();
void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows);

} // namespace popcal::eval
