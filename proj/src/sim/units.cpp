#include "popcal/sim/units.hpp"

#include "popcal/common/error.hpp"
#include "popcal/common/math.hpp"
#include "popcal/geo/ingest.hpp"
#include "popcal/uptake/hsgp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace popcal::sim {

using uptake::Duc;
using uptake::kAllDucs;
using uptake::kDucCount;

namespace {

// Per-DUC generative constants for the covariates.
constexpr PerDuc kWorkingAgeLogitMean{0.32, 0.49, 0.66}; // ~0.58, 0.62, 0.66
constexpr double kWorkingAgeLogitSd = 0.25;
constexpr PerDuc kLogDensityMean{4.5, 6.0, 8.0};
constexpr double kLogDensitySd = 0.7;
constexpr PerDuc kLogRadianceBase{-1.0, 0.5, 2.5};
constexpr double kLogRadianceNoise = 0.5;
constexpr double kPopulationLogSd = 0.6;

// Centroid rectangle in degrees, aspect 1:3.
constexpr double kLonMin = 120.0;
constexpr double kLonMax = 122.0;
constexpr double kLatMin = 6.0;
constexpr double kLatMax = 12.0;

} // namespace

int grid_columns(int n_units)
{
    return std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_units) / 3.0))));
}

void SimConfig::validate() const
{
    if (n_units < 3) {
        throw UsageError("n_units must be >= 3");
    }
    double total = 0.0;
    for (double p : duc_proportions) {
        if (p < 0.0) {
            throw UsageError("DUC proportions must be non-negative");
        }
        total += p;
    }
    if (std::fabs(total - 1.0) > 1e-9) {
        throw UsageError("DUC proportions must sum to 1");
    }
    if (censor_threshold < 1) {
        throw UsageError("censor threshold must be >= 1");
    }
    for (double r : truth.rho) {
        if (!(r >= 0.0 && r < 1.0)) {
            throw UsageError("rho must lie in [0, 1)");
        }
    }
    if (truth.sigma < 0.0 || !(truth.delta > 0.0)) {
        throw UsageError("sigma must be >= 0 and delta > 0");
    }
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
        throw UsageError("train fraction must lie in (0, 1]");
    }
}

std::vector<double> matern32_field(std::span<const double> xs, std::span<const double> ys, double sigma,
                                   double delta, std::uint64_t seed)
{
    const auto n = static_cast<Eigen::Index>(xs.size());
    std::vector<double> out(xs.size(), 0.0);
    if (sigma == 0.0 || n == 0) {
        return out;
    }
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double dx = xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(j)];
            const double dy = ys[static_cast<std::size_t>(i)] - ys[static_cast<std::size_t>(j)];
            k(i, j) = k(j, i) = uptake::matern32_kernel(std::hypot(dx, dy), sigma, delta);
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) {
        k.diagonal().array() += 1e-8;
        llt.compute(k);
        if (llt.info() != Eigen::Success) {
            throw NumericalError("spatial covariance is not positive definite");
        }
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Eigen::VectorXd e(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        e[i] = z(rng);
    }
    const Eigen::VectorXd f = llt.matrixL() * e;
    for (Eigen::Index i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = f[i];
    }
    return out;
}

long long beta_binomial_draw(std::mt19937_64& rng, long long n, double p, double rho)
{
    double q = p;
    if (rho > 0.0 && p > 0.0 && p < 1.0) {
        const double phi = (1.0 - rho) / rho;
        const double x = std::gamma_distribution<double>(p * phi, 1.0)(rng);
        const double y = std::gamma_distribution<double>((1.0 - p) * phi, 1.0)(rng);
        q = x + y > 0.0 ? x / (x + y) : p;
    }
    return std::binomial_distribution<long long>(n, q)(rng);
}

SimulatedUnits simulate_units(const SimConfig& cfg)
{
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::discrete_distribution<int> duc_draw(cfg.duc_proportions.begin(), cfg.duc_proportions.end());
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> lon(kLonMin, kLonMax);
    std::uniform_real_distribution<double> lat(kLatMin, kLatMax);

    const auto n = static_cast<std::size_t>(cfg.n_units);
    SimulatedUnits out;
    out.truth.truth = cfg.truth;
    auto& ut = out.truth.units;
    ut.resize(n);
    std::vector<Duc> ducs(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& u = ut[i];
        const int d = duc_draw(rng);
        u.duc = kAllDucs[static_cast<std::size_t>(d)];
        ducs[i] = u.duc;
        u.working_age = inv_logit(kWorkingAgeLogitMean[d] + kWorkingAgeLogitSd * z(rng));
        u.log_density = kLogDensityMean[d] + kLogDensitySd * z(rng);
        u.log_radiance = kLogRadianceBase[d] + 0.5 * (u.log_density - kLogDensityMean[d]) + kLogRadianceNoise * z(rng);
        const double meanlog = std::log(kMeanPopulation[d]) - 0.5 * kPopulationLogSd * kPopulationLogSd;
        u.population = std::max<long long>(100, std::llround(std::exp(meanlog + kPopulationLogSd * z(rng))));
        u.lon = lon(rng);
        u.lat = lat(rng);
        if (cfg.grid_layout) {
            const int cols = grid_columns(cfg.n_units);
            const auto k = static_cast<int>(i);
            u.lon = kGridLon0 + (k % cols + 0.5) * kGridCell;
            u.lat = kGridLat0 + (k / cols + 0.5) * kGridCell;
        }
    }

    const auto split = geo::stratified_split(ducs, cfg.seed, cfg.train_fraction);
    auto fit = [&](auto get) {
        std::vector<double> train;
        for (std::size_t i = 0; i < n; ++i) {
            if (split[i] == uptake::Split::Train) {
                train.push_back(get(ut[i]));
            }
        }
        uptake::ColumnScaling s{mean(train), population_sd(train)};
        if (!(s.sd > 0.0)) {
            s.sd = 1.0;
        }
        return s;
    };
    auto& ds = out.dataset;
    ds.scaling.working_age = fit([](const UnitTruth& u) { return u.working_age; });
    ds.scaling.log_radiance = fit([](const UnitTruth& u) { return u.log_radiance; });
    ds.scaling.lon = fit([](const UnitTruth& u) { return u.lon; });
    ds.scaling.lat = fit([](const UnitTruth& u) { return u.lat; });

    std::vector<double> xs(n);
    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = ds.scaling.lon.apply(ut[i].lon);
        ys[i] = ds.scaling.lat.apply(ut[i].lat);
    }
    const auto field = matern32_field(xs, ys, cfg.truth.sigma, cfg.truth.delta,
                                      cfg.spatial_seed != 0 ? cfg.spatial_seed : cfg.seed ^ 0x5bd1e995ULL);

    const auto& t = cfg.truth;
    for (std::size_t i = 0; i < n; ++i) {
        auto& u = ut[i];
        const auto d = static_cast<std::size_t>(uptake::duc_index(u.duc));
        uptake::UnitRecord r;
        r.unit_id = "unit" + std::to_string(i + 1);
        r.duc = u.duc;
        r.population = u.population;
        r.working_age = ds.scaling.working_age.apply(u.working_age);
        r.log_radiance = ds.scaling.log_radiance.apply(u.log_radiance);
        r.x = xs[i];
        r.y = ys[i];
        r.split = split[i];
        u.spatial = field[i];
        u.eta = t.a[d] + t.b_w[d] * r.working_age + t.b_l[d] * r.log_radiance + u.spatial;
        u.p = inv_logit(u.eta);
        r.users = beta_binomial_draw(rng, u.population, u.p, t.rho[d]);
        ds.units.push_back(std::move(r));
    }
    return out;
}

nlohmann::json truth_to_json(const SimTruth& truth)
{
    const auto& t = truth.truth;
    nlohmann::json units = nlohmann::json::array();
    for (std::size_t i = 0; i < truth.units.size(); ++i) {
        const auto& u = truth.units[i];
        units.push_back({{"unit_id", "unit" + std::to_string(i + 1)},
                         {"duc", static_cast<int>(u.duc)},
                         {"population", u.population},
                         {"working_age", u.working_age},
                         {"log_density", u.log_density},
                         {"log_radiance", u.log_radiance},
                         {"lon", u.lon},
                         {"lat", u.lat},
                         {"spatial", u.spatial},
                         {"p", u.p}});
    }
    return {{"a", t.a},         {"b_w", t.b_w},         {"b_l", t.b_l}, {"rho", t.rho},
            {"sigma", t.sigma}, {"delta", t.delta},     {"units", units}};
}

} // namespace popcal::sim
