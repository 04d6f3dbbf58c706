#pragma once

#include "popcal/mcmc/draws.hpp"

#include <json.hpp>

#include <vector>

namespace popcal::mcmc {

using ChainDraws = std::vector<std::vector<double>>;

/// Classic split R-hat. Each chain is cut into two halves (the middle draw
/// of an odd-length chain is dropped). Returns 1.0 when every value is
/// identical and +inf when halves are constant but differ.
/// Requires >= 2 chains of >= 4 draws each; throws UsageError otherwise.
double split_rhat(const ChainDraws& chains);

/// Effective sample size from the Geyer initial monotone sequence of
/// autocorrelations pooled across chains. Constant draws give the total
/// draw count. Same preconditions as split_rhat, except one chain is allowed.
double ess(const ChainDraws& chains);

struct ParameterSummary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double q05 = 0.0;
    double q50 = 0.0;
    double q95 = 0.0;
    double rhat = 0.0;
    double ess = 0.0;
};

std::vector<ParameterSummary> summarize(const PosteriorDraws& draws);

/// {"divergences": n, "parameters": [{name, mean, sd, q05, q50, q95, rhat, ess}, ...]}
nlohmann::json summary_json(const PosteriorDraws& draws);

} // namespace popcal::mcmc
