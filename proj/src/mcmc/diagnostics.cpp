#include "popcal/mcmc/diagnostics.hpp"

#include "popcal/common/error.hpp"
#include "popcal/common/math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace popcal::mcmc {

namespace {

void require_shape(const ChainDraws& chains, std::size_t min_chains)
{
    if (chains.size() < min_chains) {
        throw UsageError("diagnostic needs at least " + std::to_string(min_chains) + " chains");
    }
    const std::size_t n = chains.front().size();
    for (const auto& c : chains) {
        if (c.size() != n) {
            throw UsageError("chains differ in length");
        }
    }
    if (n < 4) {
        throw UsageError("diagnostic needs at least 4 draws per chain");
    }
}

bool all_equal(const ChainDraws& chains)
{
    const double v = chains.front().front();
    return std::all_of(chains.begin(), chains.end(), [v](const std::vector<double>& c) {
        return std::all_of(c.begin(), c.end(), [v](double x) { return x == v; });
    });
}

} // namespace

double split_rhat(const ChainDraws& chains)
{
    require_shape(chains, 2);
    const std::size_t n = chains.front().size();
    const std::size_t half = n / 2;
    std::vector<double> means;
    std::vector<double> vars;
    for (const auto& c : chains) {
        const std::span<const double> first(c.data(), half);
        const std::span<const double> second(c.data() + (n - half), half);
        for (auto part : {first, second}) {
            means.push_back(mean(part));
            vars.push_back(sample_variance(part));
        }
    }
    const double between = static_cast<double>(half) * sample_variance(means);
    const double within = mean(vars);
    if (within == 0.0) {
        return between == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    }
    const double m = static_cast<double>(half);
    return std::sqrt((between / within + m - 1.0) / m);
}

double ess(const ChainDraws& chains)
{
    require_shape(chains, 1);
    const std::size_t m = chains.size();
    const std::size_t n = chains.front().size();
    const double total = static_cast<double>(m * n);
    if (all_equal(chains)) {
        return total;
    }

    std::vector<double> chain_mean(m);
    for (std::size_t c = 0; c < m; ++c) {
        chain_mean[c] = mean(chains[c]);
    }
    // Biased (divide by n) autocovariance at `lag`, averaged over chains.
    auto mean_acov = [&](std::size_t lag) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            const auto& x = chains[c];
            double s = 0.0;
            for (std::size_t i = 0; i + lag < n; ++i) {
                s += (x[i] - chain_mean[c]) * (x[i + lag] - chain_mean[c]);
            }
            acc += s / static_cast<double>(n);
        }
        return acc / static_cast<double>(m);
    };

    const double nd = static_cast<double>(n);
    const double mean_var = mean_acov(0) * nd / (nd - 1.0);
    double var_plus = mean_var * (nd - 1.0) / nd;
    if (m > 1) {
        var_plus += sample_variance(chain_mean);
    }
    if (!(var_plus > 0.0)) {
        return total;
    }

    std::vector<double> rho(n, 0.0);
    double rho_even = 1.0;
    double rho_odd = 1.0 - (mean_var - mean_acov(1)) / var_plus;
    rho[0] = rho_even;
    rho[1] = rho_odd;
    std::size_t t = 1;
    while (t + 4 < n && rho_even + rho_odd > 0.0) {
        rho_even = 1.0 - (mean_var - mean_acov(t + 1)) / var_plus;
        rho_odd = 1.0 - (mean_var - mean_acov(t + 2)) / var_plus;
        if (rho_even + rho_odd >= 0.0) {
            rho[t + 1] = rho_even;
            rho[t + 2] = rho_odd;
        }
        t += 2;
    }
    const std::size_t max_t = t;
    if (rho_even > 0.0 && max_t + 1 < n) {
        rho[max_t + 1] = rho_even;
    }
    // Initial monotone sequence on pair sums.
    for (t = 1; t + 2 <= max_t; t += 2) {
        if (rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t]) {
            rho[t + 1] = 0.5 * (rho[t - 1] + rho[t]);
            rho[t + 2] = rho[t + 1];
        }
    }
    double tau = -1.0;
    for (std::size_t i = 0; i <= max_t && i < n; ++i) {
        tau += 2.0 * rho[i];
    }
    if (max_t + 1 < n) {
        tau += rho[max_t + 1];
    }
    tau = std::max(tau, 1.0 / std::log10(total));
    return total / tau;
}

std::vector<ParameterSummary> summarize(const PosteriorDraws& draws)
{
    std::vector<ParameterSummary> out;
    for (std::size_t k = 0; k < draws.num_params(); ++k) {
        ParameterSummary s;
        s.name = draws.names()[k];
        const auto all = draws.flat(k);
        s.mean = mean(all);
        s.sd = all.size() > 1 ? std::sqrt(sample_variance(all)) : 0.0;
        s.q05 = quantile(all, 0.05);
        s.q50 = quantile(all, 0.5);
        s.q95 = quantile(all, 0.95);
        const auto chains = draws.by_chain(k);
        const bool enough = draws.iterations() >= 4;
        s.rhat = enough && draws.chains() >= 2 ? split_rhat(chains) : std::numeric_limits<double>::quiet_NaN();
        s.ess = enough ? ess(chains) : std::numeric_limits<double>::quiet_NaN();
        out.push_back(std::move(s));
    }
    return out;
}

nlohmann::json summary_json(const PosteriorDraws& draws)
{
    nlohmann::json params = nlohmann::json::array();
    for (const auto& s : summarize(draws)) {
        auto finite_or_null = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
        params.push_back({{"name", s.name},
                          {"mean", s.mean},
                          {"sd", s.sd},
                          {"q05", s.q05},
                          {"q50", s.q50},
                          {"q95", s.q95},
                          {"rhat", finite_or_null(s.rhat)},
                          {"ess", finite_or_null(s.ess)}});
    }
    return {{"chains", draws.chains()},
            {"iterations", draws.iterations()},
            {"divergences", draws.divergence_count()},
            {"parameters", params}};
}

} // namespace popcal::mcmc
