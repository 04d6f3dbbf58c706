#pragma once

#include "popcal/eval/psis.hpp"
#include "popcal/uptake/dataset.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace popcal::eval {

/// |observed - median(samples)|. Throws std::invalid_argument on no samples.
double aemed(std::span<const double> samples, double observed);

/// (observed - mean(samples))^2.
double semean(std::span<const double> samples, double observed);

/// mean |X - y| - 0.5 mean |X - X'| over all ordered pairs, computed from
/// the sorted sample in O(m log m). Needs at least two samples.
double crps(std::span<const double> samples, double observed);

/// Predictive rate samples of one model for a set of test units.
struct ModelPredictions {
    std::string model;
    std::vector<std::string> unit_ids;
    std::vector<uptake::Duc> ducs;
    std::vector<double> observed; ///< observed uptake rate FB / N
    std::vector<std::vector<double>> samples;
};

struct MetricRow {
    uptake::Duc duc = uptake::Duc::Rural;
    std::string metric; ///< "AEMed", "SEMean" or "CRPS"
    std::string model;
    double value = 0.0;
    double value_pct = 0.0;
};

struct ModelLoo {
    std::string model;
    double elpd = 0.0;
    double se = 0.0;
    std::array<int, 3> k_brackets{0, 0, 0};
};

/// elpd(model_a) - elpd(model_b) with the standard error of the paired
/// pointwise differences.
struct LooDifference {
    std::string model_a;
    std::string model_b;
    double elpd_diff = 0.0;
    double se_diff = 0.0;
};

struct MetricReport {
    std::vector<MetricRow> rows;
    std::vector<ModelLoo> loo;
    std::vector<LooDifference> loo_differences;
    std::vector<std::string> warnings;
};

/// Per DUC: mean AEMed, sqrt of mean SEMean and mean CRPS, each also as a
/// percentage of the DUC's mean observed rate. DUCs without test units are
/// left out with a warning.
MetricReport report(std::span<const ModelPredictions> models);

/// Fills the LOO summary and all pairwise differences. Results must cover
/// the same units in the same order.
void add_loo(MetricReport& report, std::span<const std::string> models, std::span<const LooResult> results);

// duc,metric,model,value,value_pct
void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricRow> rows);

} // namespace popcal::eval
