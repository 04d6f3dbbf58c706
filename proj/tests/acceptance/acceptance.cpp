// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset; exit status is non-zero if any run fails.

#include "oracles/pmf_oracle.hpp"
#include "popcal/cli/manifest.hpp"
#include "popcal/common/math.hpp"
#include "popcal/eval/metrics.hpp"
#include "popcal/eval/psis.hpp"
#include "popcal/geo/geometry.hpp"
#include "popcal/geo/ingest.hpp"
#include "popcal/geo/raster.hpp"
#include "popcal/impute/impute.hpp"
#include "popcal/impute/model.hpp"
#include "popcal/mcmc/diagnostics.hpp"
#include "popcal/mcmc/nuts.hpp"
#include "popcal/sim/tiles.hpp"
#include "popcal/sim/units.hpp"
#include "popcal/uptake/hsgp.hpp"
#include "popcal/uptake/model.hpp"
#include "popcal/uptake/predict.hpp"
#include "support/targets.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace popcal;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// log(lambda^k e^-lambda / k!) with k! as a running sum of logs.
double brute_log_pmf(long long k, double lambda)
{
    double log_fact = 0.0;
    for (long long j = 2; j <= k; ++j) {
        log_fact += std::log(static_cast<double>(j));
    }
    return static_cast<double>(k) * std::log(lambda) - lambda - log_fact;
}

/// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b)
{
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) {
            ++i;
        }
        while (j < b.size() && b[j] <= x) {
            ++j;
        }
        d = std::max(d, std::fabs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    return d;
}

uptake::UptakeModel make_model(const uptake::UptakeDataset& data, uptake::ModelKind kind,
                               uptake::Parameterization par = uptake::Parameterization::Recentered,
                               int n_basis = 16)
{
    uptake::ModelOptions o;
    o.kind = kind;
    o.parameterization = par;
    o.hsgp.n_basis = n_basis;
    return uptake::UptakeModel(data, o);
}

// ---------------------------------------------------------------------------

void censored_likelihood_oracle(Outcome& out)
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> lam(0.01, 50.0);
    std::uniform_int_distribution<int> thr(1, 15);
    std::uniform_int_distribution<int> n_obs(0, 4);
    std::uniform_int_distribution<int> n_cens(1, 4);
    double worst = 0.0;
    for (int c = 0; c < 50; ++c) {
        const double l = lam(rng);
        const int k = thr(rng);
        impute::TileHistory h{"t", {}};
        double brute = 0.0;
        for (int i = 0, n = n_obs(rng); i < n; ++i) {
            const long long v = k + std::uniform_int_distribution<int>(0, 40)(rng);
            h.counts.emplace_back(v);
            brute += brute_log_pmf(v, l);
        }
        for (int i = 0, n = n_cens(rng); i < n; ++i) {
            h.counts.emplace_back(std::nullopt);
            brute += std::log(oracle::poisson_cdf(k - 1, l));
        }
        worst = std::max(worst, std::fabs(impute::censored_poisson_loglik(h, l, k) - brute));
    }
    const double secs = seconds_since(t0);
    out.detail << "50 cases, max |diff| " << worst << ", " << secs << " s";
    out.require(worst < 1e-10, "|diff| < 1e-10");
    out.require(secs < 1.0, "runtime < 1 s");
}

void imputation_recovery(Outcome& out)
{
    const auto t0 = Clock::now();
    const auto sim = sim::simulate_tiles({.n_tiles = 200, .n_days = 151, .censor_threshold = 10, .seed = 7});
    impute::ImputationModel model(sim.histories, {});
    mcmc::SamplerConfig cfg;
    cfg.seed = 8;
    const auto draws = mcmc::sample(model, cfg);

    int covered = 0;
    for (std::size_t t = 0; t < sim.histories.size(); ++t) {
        const auto col = model.rate_column(sim.histories[t].tile_id);
        auto x = draws.flat(*col);
        const double lo = quantile(x, 0.025);
        const double hi = quantile(x, 0.975);
        covered += sim.lambda[t] >= lo && sim.lambda[t] <= hi;
    }
    const double coverage = static_cast<double>(covered) / static_cast<double>(sim.histories.size());

    std::map<std::string, double> partial; // tile -> censored share
    for (const auto& h : sim.histories) {
        if (h.n_observed() > 0 && h.n_observed() < h.n_entries()) {
            partial[h.tile_id] = 1.0 - static_cast<double>(h.n_observed()) / static_cast<double>(h.n_entries());
        }
    }
    const auto rows = impute::imputation_ppc(draws, model, 9);
    int below = 0;
    int ties = 0;
    int above = 0;
    double max_share_not_below = 0.0;
    for (const auto& r : rows) {
        const auto it = partial.find(r.tile_id);
        if (it == partial.end()) {
            continue;
        }
        below += *r.difference < 0.0;
        ties += *r.difference == 0.0;
        above += *r.difference > 0.0;
        if (*r.difference >= 0.0) {
            max_share_not_below = std::max(max_share_not_below, it->second);
        }
    }
    const double secs = seconds_since(t0);
    out.detail << "coverage " << 100.0 * coverage << "%; partially observed tiles " << partial.size()
               << ": median below " << below << ", tied " << ties << ", above " << above
               << " (largest censored share among those not below " << max_share_not_below << "); " << secs << " s";
    out.require(coverage >= 0.90, "coverage >= 90%");
    out.require(below == static_cast<int>(partial.size()), "predictive median below observed for every tile");
    out.require(secs < 300.0, "runtime < 5 min");
}

void sampler_correctness(Outcome& out)
{
    mcmc::SamplerConfig cfg;
    cfg.seed = 31;
    {
        testing::NormalTarget target({0.0}, {1.0});
        const auto d = mcmc::sample(target, cfg);
        const auto x = d.flat(0);
        const double n_eff = mcmc::ess(d.by_chain(0));
        const double m = mean(x);
        const double sd = std::sqrt(sample_variance(x));
        // SE of the sample SD of a normal is about sd / sqrt(2 n_eff).
        out.detail << "normal mean " << m << " sd " << sd << " (ess " << n_eff << ")";
        out.require(std::fabs(m) < 4.0 / std::sqrt(n_eff), "normal mean");
        out.require(std::fabs(sd - 1.0) < 4.0 / std::sqrt(2.0 * n_eff), "normal sd");
    }
    {
        testing::ExpScaleTarget target(5.0);
        const auto d = mcmc::sample(target, cfg);
        const auto x = d.flat(0);
        const double n_eff = mcmc::ess(d.by_chain(0));
        const double m = mean(x);
        const double sd = std::sqrt(sample_variance(x));
        // Exp(scale 5): mean 5, sd 5, and SE(sd) ~ sqrt(2) 5 / sqrt(n).
        out.detail << "; exp mean " << m << " sd " << sd << " (ess " << n_eff << ")";
        out.require(std::fabs(m - 5.0) < 4.0 * 5.0 / std::sqrt(n_eff), "exp mean");
        out.require(std::fabs(sd - 5.0) < 4.0 * std::sqrt(2.0) * 5.0 / std::sqrt(n_eff), "exp sd");
    }
    {
        testing::CorrelatedTarget target(1.0, 3.0, 0.7);
        const std::vector<double> inv_metric{0.8, 4.0};
        mcmc::PhasePoint z;
        z.q = {0.3, -1.2};
        z.p = {0.9, 0.4};
        z.grad.resize(2);
        z.log_density = target.log_density_gradient(z.q, z.grad);
        const auto start = z;
        for (int i = 0; i < 100; ++i) {
            mcmc::leapfrog(target, inv_metric, 0.1, z);
        }
        for (int i = 0; i < 100; ++i) {
            mcmc::leapfrog(target, inv_metric, -0.1, z);
        }
        double err = 0.0;
        for (std::size_t i = 0; i < 2; ++i) {
            err = std::max({err, std::fabs(z.q[i] - start.q[i]), std::fabs(z.p[i] - start.p[i])});
        }
        out.detail << "; leapfrog round trip " << err;
        out.require(err < 1e-8, "leapfrog reversibility");
    }

    // Every shipped target at random points.
    double worst = 0.0;
    std::string worst_name;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01;
    auto check = [&](const mcmc::TargetDensity& t, const std::vector<double>& q, const std::string& name) {
        const double e = mcmc::check_gradient(t, q).max_relative_error;
        if (e > worst || !std::isfinite(e)) {
            worst = e;
            worst_name = name;
        }
    };
    const auto tiles = sim::simulate_tiles({.n_tiles = 30, .drop_days = true, .seed = 4});
    for (bool hier : {true, false}) {
        impute::ImputationModel m(tiles.histories, {.hierarchical = hier});
        for (int k = 0; k < 20; ++k) {
            std::vector<double> q(m.dim());
            for (auto& v : q) {
                v = 1.0 + n01(rng);
            }
            check(m, q, hier ? "imputation" : "imputation-independent");
        }
    }
    sim::SimConfig sc;
    sc.n_units = 40;
    sc.seed = 3;
    const auto units = sim::simulate_units(sc);
    for (auto kind : {uptake::ModelKind::Bin, uptake::ModelKind::BetaBin, uptake::ModelKind::Full}) {
        for (auto par : {uptake::Parameterization::Centered, uptake::Parameterization::NonCentered,
                         uptake::Parameterization::Recentered}) {
            const auto m = make_model(units.dataset, kind, par, 6);
            for (int k = 0; k < 20; ++k) {
                std::vector<double> q(m.dim());
                for (auto& v : q) {
                    v = 0.5 * n01(rng);
                }
                q[uptake::UptakeModel::kAMu] = -4.0 + 0.3 * n01(rng);
                for (std::size_t u = 0; u < 3; ++u) {
                    if (par != uptake::Parameterization::NonCentered) {
                        q[uptake::UptakeModel::kA + u] = -4.0 + 0.3 * n01(rng);
                    }
                    if (kind != uptake::ModelKind::Bin) {
                        q[uptake::UptakeModel::kRho + u] = -5.0 + n01(rng);
                    }
                }
                check(m, q,
                      std::string(uptake::model_name(kind)) + "/" + std::string(uptake::parameterization_name(par)));
            }
        }
    }
    out.detail << "; worst gradient rel. err " << worst << " (" << worst_name << ")";
    out.require(worst < 1e-4, "gradient checks");
}

void regression_recovery(Outcome& out)
{
    const auto t0 = Clock::now();
    sim::SimConfig sc;
    sc.n_units = 1200;
    sc.seed = 1;
    const auto sim = sim::simulate_units(sc);
    const auto model = make_model(sim.dataset, uptake::ModelKind::Full);
    // The field amplitude and length scale mix slowest (ESS per draw ~0.07),
    // so the run keeps 3000 draws per chain.
    mcmc::SamplerConfig cfg;
    cfg.seed = 1;
    cfg.sampling_iters = 3000;
    const auto draws = mcmc::sample(model, cfg);
    const auto summary = mcmc::summarize(draws);

    const auto& t = sc.truth;
    std::vector<std::pair<std::string, double>> checks;
    for (std::size_t u = 0; u < 3; ++u) {
        const auto i = std::to_string(u + 1);
        checks.emplace_back("a[" + i + "]", t.a[u]);
        checks.emplace_back("b_w[" + i + "]", t.b_w[u]);
        checks.emplace_back("b_l[" + i + "]", t.b_l[u]);
    }
    checks.emplace_back("sigma", t.sigma);
    checks.emplace_back("delta", t.delta);
    double worst_z = 0.0;
    std::string worst_z_name;
    for (const auto& [name, truth] : checks) {
        const auto& s = summary[draws.index(name)];
        const double z = std::fabs(s.mean - truth) / s.sd;
        if (z > worst_z) {
            worst_z = z;
            worst_z_name = name;
        }
    }
    double max_rhat = 0.0;
    double min_ess = std::numeric_limits<double>::infinity();
    std::string rhat_name;
    std::string ess_name;
    for (std::size_t p = 0; p < summary.size(); ++p) {
        if (summary[p].rhat > max_rhat) {
            max_rhat = summary[p].rhat;
            rhat_name = draws.names()[p];
        }
        if (summary[p].ess < min_ess) {
            min_ess = summary[p].ess;
            ess_name = draws.names()[p];
        }
    }
    const double secs = seconds_since(t0);
    out.detail << "max |mean-truth|/sd " << worst_z << " (" << worst_z_name << "); max R-hat " << max_rhat << " ("
               << rhat_name << "); min ESS " << min_ess << " (" << ess_name << "); divergences "
               << draws.divergence_count() << "; " << secs << " s";
    out.require(worst_z <= 2.0, "within 2 posterior SD");
    out.require(max_rhat < 1.01, "R-hat < 1.01");
    out.require(min_ess > 400.0, "ESS > 400");
    out.require(secs < 1800.0, "runtime < 30 min");
}

void overdispersion_ordering(Outcome& out)
{
    int betabin_wins = 0;
    int bin_high_k = 0;
    int betabin_high_k = 0;
    for (std::uint64_t rep = 0; rep < 10; ++rep) {
        sim::SimConfig sc;
        sc.n_units = 300;
        sc.seed = 100 + rep;
        sc.truth.sigma = 0.0; // pure beta-binomial data
        const auto sim = sim::simulate_units(sc);
        mcmc::SamplerConfig cfg;
        cfg.seed = 200 + rep;
        double elpd[2];
        int high[2];
        int slot = 0;
        for (auto kind : {uptake::ModelKind::Bin, uptake::ModelKind::BetaBin}) {
            const auto m = make_model(sim.dataset, kind);
            const auto draws = mcmc::sample(m, cfg);
            const auto loo = eval::psis_loo(uptake::pointwise_log_likelihood(m, draws));
            elpd[slot] = loo.elpd;
            high[slot] = loo.k_brackets()[2];
            ++slot;
        }
        betabin_wins += elpd[1] > elpd[0];
        bin_high_k += high[0];
        betabin_high_k += high[1];
    }
    out.detail << "betabin ELPD higher in " << betabin_wins << "/10; units with k > 0.7: bin " << bin_high_k
               << ", betabin " << betabin_high_k;
    out.require(betabin_wins >= 9, "ELPD ordering in >= 9/10");
    out.require(bin_high_k > betabin_high_k, "more high-k units under bin");
}

void hsgp_fidelity(Outcome& out)
{
    // Covariance: 50 points uniform in a 1 x 3 box, standardized the way the
    // models standardize centroids.
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> ux(0.0, 1.0);
        std::uniform_real_distribution<double> uy(0.0, 3.0);
        std::vector<double> xs(50);
        std::vector<double> ys(50);
        for (std::size_t i = 0; i < 50; ++i) {
            xs[i] = ux(rng);
            ys[i] = uy(rng);
        }
        for (auto* v : {&xs, &ys}) {
            const double m = mean(*v);
            const double sd = std::sqrt(sample_variance(*v));
            for (auto& x : *v) {
                x = (x - m) / sd;
            }
        }
        const auto basis = uptake::hsgp_basis(xs, ys, 16, uptake::hsgp_domain(xs, ys, uptake::HsgpSpec{}));
        for (double delta = 0.5; delta <= 1.5 + 1e-9; delta += 0.125) {
            const auto approx = uptake::hsgp_covariance(basis, 1.0, delta);
            Eigen::MatrixXd exact(50, 50);
            for (Eigen::Index i = 0; i < 50; ++i) {
                for (Eigen::Index j = 0; j < 50; ++j) {
                    const auto ui = static_cast<std::size_t>(i);
                    const auto uj = static_cast<std::size_t>(j);
                    exact(i, j) = uptake::matern32_kernel(std::hypot(xs[ui] - xs[uj], ys[ui] - ys[uj]), 1.0, delta);
                }
            }
            worst = std::max(worst, (approx - exact).norm() / exact.norm());
        }
    }
    out.detail << "worst relative Frobenius error " << 100.0 * worst << "%";
    out.require(worst < 0.10, "Frobenius error < 10%");

    // sigma -> 0: the Full predictive collapses onto the beta-binomial one.
    // Both predictives reuse the same posterior draws and random streams.
    sim::SimConfig sc;
    sc.n_units = 200;
    sc.seed = 12;
    const auto sim = sim::simulate_units(sc);
    const auto bb = make_model(sim.dataset, uptake::ModelKind::BetaBin);
    const auto full = make_model(sim.dataset, uptake::ModelKind::Full);
    mcmc::SamplerConfig cfg;
    cfg.seed = 13;
    const auto bb_draws = mcmc::sample(bb, cfg);
    mcmc::PosteriorDraws full_draws(full.parameter_names(), bb_draws.chains(), bb_draws.iterations());
    std::mt19937_64 rng(14);
    std::normal_distribution<double> n01;
    for (std::size_t c = 0; c < bb_draws.chains(); ++c) {
        for (std::size_t i = 0; i < bb_draws.iterations(); ++i) {
            auto row = full_draws.row(c, i);
            for (std::size_t p = 0; p < full_draws.num_params(); ++p) {
                const auto& name = full_draws.names()[p];
                if (const auto src = bb_draws.find(name)) {
                    row[p] = bb_draws.value(c, i, *src);
                } else if (name == "sigma") {
                    row[p] = 1e-9;
                } else if (name == "delta") {
                    row[p] = 1.0;
                } else {
                    row[p] = n01(rng);
                }
            }
        }
    }
    const auto test = sim.dataset.indices(uptake::Split::Test);
    const auto pb = uptake::posterior_predict(bb, bb_draws, test, 15);
    const auto pf = uptake::posterior_predict(full, full_draws, test, 15);
    double worst_ks = 0.0;
    for (std::size_t k = 0; k < test.size(); ++k) {
        worst_ks = std::max(worst_ks, ks_statistic(pb.rates[k], pf.rates[k]));
    }
    out.detail << "; sigma -> 0 worst per-unit KS " << worst_ks << " over " << test.size() << " test units";
    out.require(worst_ks < 0.02, "KS < 0.02");
}

void metric_fixtures(Outcome& out)
{
    const std::vector<double> two{0.0, 2.0};
    const double crps = eval::crps(two, 1.0);
    out.detail << "CRPS({0,2},1) = " << crps;
    out.require(std::fabs(crps - 0.5) < 1e-12, "CRPS fixture");

    // AEMed: median of {1, 2, 4, 7} is 3; SEMean: mean 3.5 against 1.5.
    const std::vector<double> s{4.0, 1.0, 7.0, 2.0};
    const double ae = eval::aemed(s, 1.5);
    const double se = eval::semean(s, 1.5);
    out.detail << "; AEMed " << ae << " SEMean " << se;
    out.require(std::fabs(ae - 1.5) < 1e-12, "AEMed fixture");
    out.require(std::fabs(se - 4.0) < 1e-12, "SEMean fixture");

    eval::ModelPredictions mp;
    mp.model = "m";
    mp.unit_ids = {"u1", "u2", "u3"};
    mp.ducs = {uptake::Duc::Rural, uptake::Duc::Rural, uptake::Duc::Rural};
    mp.observed = {0.1, 0.2, 0.3};
    mp.samples = {{0.1, 0.3}, {0.2, 0.2}, {0.0, 0.2}};
    // Squared errors of the mean: 0.01, 0, 0.04.
    const double expect = std::sqrt((0.01 + 0.0 + 0.04) / 3.0);
    const auto rep = eval::report(std::span<const eval::ModelPredictions>(&mp, 1));
    double got = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : rep.rows) {
        if (r.duc == uptake::Duc::Rural && r.metric == "SEMean") {
            got = r.value;
        }
    }
    out.detail << "; per-DUC SEMean " << got << " (expected " << expect << ")";
    out.require(std::fabs(got - expect) < 1e-12, "sqrt of mean SEMean");
}

void geo_conservation(Outcome& out)
{
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int fixture = 0; fixture < 20; ++fixture) {
        // Jittered n x n quadrilateral mosaic over [0, n]^2 and a tile grid
        // that overhangs it.
        const int n = 3 + fixture % 3;
        std::vector<std::vector<geo::Point>> g(static_cast<std::size_t>(n + 1),
                                               std::vector<geo::Point>(static_cast<std::size_t>(n + 1)));
        for (int i = 0; i <= n; ++i) {
            for (int j = 0; j <= n; ++j) {
                const bool edge = i == 0 || i == n || j == 0 || j == n;
                g[i][j] = {i + (edge ? 0.0 : 0.4 * (u(rng) - 0.5)), j + (edge ? 0.0 : 0.4 * (u(rng) - 0.5))};
            }
        }
        std::vector<geo::UnitBoundary> units;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                geo::MultiPolygon mp;
                mp.parts.push_back(geo::Polygon{geo::Ring{g[i][j], g[i + 1][j], g[i + 1][j + 1], g[i][j + 1]}, {}});
                units.push_back({"u" + std::to_string(i) + "_" + std::to_string(j), mp});
            }
        }
        const double size = 0.3 + 0.5 * u(rng);
        const double off = -size * u(rng);
        std::vector<geo::GridTile> tiles;
        std::vector<geo::TileCount> counts;
        double total = 0.0;
        for (double x = off; x < n; x += size) {
            for (double y = off; y < n; y += size) {
                const std::string id = "t" + std::to_string(tiles.size());
                tiles.push_back({id, {x, y, x + size, y + size}, 1.0, 1.0});
                counts.push_back({id, 10.0 + 1000.0 * u(rng)});
                total += counts.back().count;
            }
        }
        const auto a = geo::apportion_tile_counts(tiles, counts, units);
        double assigned = a.orphan_total;
        for (const auto& [id, c] : a.unit_counts) {
            assigned += c;
        }
        worst = std::max(worst, std::fabs(assigned - total) / total);
    }
    out.detail << "20 fixtures, worst relative conservation error " << worst;
    out.require(worst < 1e-9, "conservation to 1e-9");

    geo::RasterGrid duc(8, 8, 0.0, 0.0, 1.0, -9999.0);
    geo::RasterGrid pop(8, 8, 0.0, 0.0, 1.0, -9999.0);
    std::uniform_int_distribution<int> cls(1, 3);
    for (int r = 0; r < 8; ++r) {
        for (int c = 0; c < 8; ++c) {
            duc.at(r, c) = cls(rng);
            pop.at(r, c) = 1000.0 * u(rng);
        }
    }
    int changed = 0;
    int checked = 0;
    for (int k = 0; k < 50; ++k) {
        const double x = 6.0 * u(rng);
        const double y = 6.0 * u(rng);
        geo::MultiPolygon unit;
        unit.parts.push_back(
            geo::Polygon{geo::Ring{{x, y}, {x + 1.7, y + 0.2}, {x + 1.1, y + 1.4}, {x - 0.3, y + 0.9}}, {}});
        const auto base = geo::assign_duc(unit, duc, pop);
        for (double factor : {1e-6, 0.37, 3.0, 1e8}) {
            auto scaled = pop;
            for (int r = 0; r < 8; ++r) {
                for (int c = 0; c < 8; ++c) {
                    scaled.at(r, c) *= factor;
                }
            }
            changed += geo::assign_duc(unit, duc, scaled) != base;
            ++checked;
        }
    }
    out.detail << "; DUC changed under population scaling in " << changed << "/" << checked << " cases";
    out.require(changed == 0, "DUC scaling invariance");
}

std::map<std::string, std::string> hash_tree(const fs::path& dir)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) {
            out[fs::relative(e.path(), dir).generic_string()] = cli::sha256_file(e.path());
        }
    }
    return out;
}

void pipeline_determinism(Outcome& out)
{
    const fs::path root = fs::temp_directory_path() / "popcal_acceptance_pipeline";
    fs::remove_all(root);
    const fs::path dir = root / "run";
    const std::string cmd = std::string("\"") + POPCAL_BINARY + "\" pipeline --quiet --config \"" + POPCAL_CONFIG +
                            "\" --out \"" + dir.string() + "\"";
    std::vector<std::map<std::string, std::string>> runs;
    double worst_secs = 0.0;
    for (int run = 0; run < 2; ++run) {
        fs::remove_all(dir);
        const auto t0 = Clock::now();
        const int status = std::system(cmd.c_str());
        worst_secs = std::max(worst_secs, seconds_since(t0));
        if (status != 0) {
            out.detail << "pipeline run " << run + 1 << " exited with status " << status;
            out.require(false, "pipeline exit 0");
            return;
        }
        runs.push_back(hash_tree(dir));
    }
    int differing = 0;
    std::string first_diff;
    for (const auto& [name, hash] : runs[0]) {
        const auto it = runs[1].find(name);
        if (it == runs[1].end() || it->second != hash) {
            if (differing++ == 0) {
                first_diff = name;
            }
        }
    }
    differing += static_cast<int>(runs[1].size() > runs[0].size());
    const bool has_metrics = runs[0].count("evaluate/metrics.csv") > 0;
    out.detail << runs[0].size() << " artifacts, " << differing << " differ between runs"
               << (first_diff.empty() ? "" : " (first: " + first_diff + ")") << "; slowest run " << worst_secs
               << " s";
    out.require(has_metrics, "metrics.csv produced");
    out.require(differing == 0, "byte-identical re-run");
    out.require(worst_secs < 2700.0, "runtime < 45 min");
    fs::remove_all(root);
}

struct Criterion {
    int id;
    const char* name;
    std::function<void(Outcome&)> run;
};

} // namespace

int main(int argc, char** argv)
{
    const std::vector<Criterion> all{
        {1, "censored-likelihood oracle", censored_likelihood_oracle},
        {2, "imputation recovery", imputation_recovery},
        {3, "sampler correctness", sampler_correctness},
        {4, "regression recovery", regression_recovery},
        {5, "overdispersion ordering", overdispersion_ordering},
        {6, "HSGP fidelity", hsgp_fidelity},
        {7, "metric fixtures", metric_fixtures},
        {8, "geo conservation", geo_conservation},
        {9, "end-to-end determinism", pipeline_determinism},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) {
        wanted.insert(std::atoi(argv[i]));
    }
    int failures = 0;
    for (const auto& c : all) {
        if (!wanted.empty() && !wanted.count(c.id)) {
            continue;
        }
        Outcome o;
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail.str()
                  << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
