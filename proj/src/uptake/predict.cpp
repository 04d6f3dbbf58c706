#include "popcal/uptake/predict.hpp"

#include "popcal/common/error.hpp"
#include "popcal/common/math.hpp"

#include <array>
#include <random>

namespace popcal::uptake {

namespace {

long long draw_count(std::mt19937_64& rng, long long n, double p, double phi, bool overdispersed)
{
    if (p >= 1.0) {
        return n;
    }
    if (p <= 0.0) {
        return 0;
    }
    double q = p;
    if (overdispersed) {
        const double x = std::gamma_distribution<double>(p * phi, 1.0)(rng);
        const double y = std::gamma_distribution<double>((1.0 - p) * phi, 1.0)(rng);
        q = x + y > 0.0 ? x / (x + y) : p;
    }
    return std::binomial_distribution<long long>(n, q)(rng);
}

} // namespace

Predictions posterior_predict(const UptakeModel& model, const mcmc::PosteriorDraws& draws,
                              std::span<const std::size_t> units, std::uint64_t seed, double hdi_mass)
{
    const auto& data = model.data();
    const std::size_t n_draws = draws.total_draws();
    if (n_draws == 0) {
        throw DataError("no posterior draws");
    }
    for (std::size_t u : units) {
        if (u >= data.units.size()) {
            throw std::out_of_range("unit index out of range");
        }
    }
    const bool overdispersed = model.kind() != ModelKind::Bin;

    // eta[d][u] for every draw, computed once per draw.
    std::vector<std::vector<double>> eta(n_draws, std::vector<double>(units.size()));
    std::vector<std::array<double, kDucCount>> phi(n_draws);
    for (std::size_t d = 0; d < n_draws; ++d) {
        const auto c = model.coefficients(draws.row(d));
        for (std::size_t k = 0; k < units.size(); ++k) {
            eta[d][k] = model.eta(c, units[k]);
        }
        for (std::size_t g = 0; g < kDucCount; ++g) {
            phi[d][g] = overdispersed ? (1.0 - c.rho[g]) / c.rho[g] : 0.0;
        }
    }

    Predictions out;
    out.rates.assign(units.size(), std::vector<double>(n_draws));
    for (std::size_t k = 0; k < units.size(); ++k) {
        const auto& unit = data.units[units[k]];
        std::seed_seq seq{static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(seed),
                          static_cast<std::uint32_t>(units[k])};
        std::mt19937_64 rng(seq);
        const auto g = static_cast<std::size_t>(duc_index(unit.duc));
        const double n = static_cast<double>(unit.population);
        auto& rates = out.rates[k];
        for (std::size_t d = 0; d < n_draws; ++d) {
            const long long c = draw_count(rng, unit.population, inv_logit(eta[d][k]), phi[d][g], overdispersed);
            rates[d] = static_cast<double>(c) / n;
        }
        UnitPrediction s;
        s.unit = units[k];
        s.mean = mean(rates);
        s.median = median(rates);
        const auto hdi = highest_density_interval(rates, hdi_mass);
        s.hdi_lower = hdi.lower;
        s.hdi_upper = hdi.upper;
        out.summary.push_back(s);
    }
    return out;
}

Eigen::MatrixXd pointwise_log_likelihood(const UptakeModel& model, const mcmc::PosteriorDraws& draws)
{
    const auto& train = model.train_indices();
    Eigen::MatrixXd ll(static_cast<Eigen::Index>(draws.total_draws()), static_cast<Eigen::Index>(train.size()));
    for (std::size_t d = 0; d < draws.total_draws(); ++d) {
        const auto c = model.coefficients(draws.row(d));
        for (std::size_t k = 0; k < train.size(); ++k) {
            ll(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k)) = model.unit_log_likelihood(c, train[k]);
        }
    }
    return ll;
}

} // namespace popcal::uptake
