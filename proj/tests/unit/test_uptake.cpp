#include "popcal/common/error.hpp"
#include "popcal/common/math.hpp"
#include "popcal/mcmc/target.hpp"
#include "popcal/sim/units.hpp"
#include "popcal/uptake/hsgp.hpp"
#include "popcal/uptake/model.hpp"
#include "popcal/uptake/predict.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace popcal;
using uptake::Duc;
using uptake::ModelKind;
using uptake::Parameterization;

namespace {

uptake::UnitRecord unit(const std::string& id, Duc duc, long long n, long long fb, double w = 0.0, double l = 0.0,
                        double x = 0.0, double y = 0.0)
{
    uptake::UnitRecord u;
    u.unit_id = id;
    u.duc = duc;
    u.population = n;
    u.users = fb;
    u.working_age = w;
    u.log_radiance = l;
    u.x = x;
    u.y = y;
    return u;
}

/// One train unit per DUC, the first one with the given (n, fb).
uptake::UptakeDataset tiny(long long n, long long fb)
{
    uptake::UptakeDataset d;
    d.units = {unit("u1", Duc::Rural, n, fb, 0.0, 0.0, 0.5, -0.5), unit("u2", Duc::PeriUrban, 10, 1, 0.0, 0.0, -1, 1),
               unit("u3", Duc::Urban, 10, 1, 0.0, 0.0, 1, 1)};
    return d;
}

uptake::Coefficients coefs(double a, double rho = 0.5)
{
    uptake::Coefficients c;
    for (int u = 0; u < 3; ++u) {
        c.a[u] = a;
        c.rho[u] = rho;
    }
    return c;
}

uptake::UptakeModel make_model(const uptake::UptakeDataset& d, ModelKind k,
                               Parameterization p = Parameterization::Centered, int nb = 4)
{
    uptake::ModelOptions o;
    o.kind = k;
    o.parameterization = p;
    o.hsgp.n_basis = nb;
    return uptake::UptakeModel(d, o);
}

double binomial_pmf(int k, int n, double p)
{
    return std::exp(log_choose(n, k) + k * std::log(p) + (n - k) * std::log1p(-p));
}

} // namespace

TEST(Linpred, Examples)
{
    const auto d = tiny(10, 1);
    const auto m = make_model(d, ModelKind::Bin);
    EXPECT_NEAR(inv_logit(m.eta(coefs(-4.0), 0)), 0.01799, 1e-5);
    EXPECT_NEAR(inv_logit(m.eta(coefs(0.0), 0)), 0.5, 1e-15);
    auto c = coefs(0.0);
    c.a[2] = -3.369;
    EXPECT_NEAR(inv_logit(m.eta(c, 2)), 0.0333, 5e-5);
}

TEST(Linpred, UsesDucSpecificSlopes)
{
    auto d = tiny(10, 1);
    d.units[1].working_age = 2.0;
    d.units[1].log_radiance = -1.0;
    const auto m = make_model(d, ModelKind::Bin);
    auto c = coefs(-4.0);
    c.b_w[1] = 0.5;
    c.b_l[1] = 0.3;
    c.b_w[0] = 100.0;
    EXPECT_NEAR(m.eta(c, 1), -4.0 + 1.0 - 0.3, 1e-14);
}

TEST(BinTarget, SingleTrialLogLikelihood)
{
    const auto d = tiny(1, 1);
    const auto m = make_model(d, ModelKind::Bin);
    EXPECT_NEAR(m.unit_log_likelihood(coefs(0.0), 0), std::log(0.5), 1e-14);
}

TEST(BinTarget, RejectsMoreUsersThanPopulation)
{
    EXPECT_THROW(make_model(tiny(5, 6), ModelKind::Bin), DataError);
}

TEST(BetaBinTarget, UniformCaseIsOneThird)
{
    // p = 0.5 and rho = 1/3 give alpha = beta = 1.
    for (int k = 0; k <= 2; ++k) {
        const auto m = make_model(tiny(2, k), ModelKind::BetaBin);
        EXPECT_NEAR(std::exp(m.unit_log_likelihood(coefs(0.0, 1.0 / 3.0), 0)), 1.0 / 3.0, 1e-12);
    }
}

TEST(BetaBinTarget, HalfHalfGivesHalfHalfShape)
{
    // p = 0.5, rho = 0.5: alpha = beta = 0.5, so P(k=0 | n=1) = 0.5.
    const auto m = make_model(tiny(1, 0), ModelKind::BetaBin);
    EXPECT_NEAR(std::exp(m.unit_log_likelihood(coefs(0.0, 0.5), 0)), 0.5, 1e-12);
}

TEST(BetaBinTarget, SmallRhoApproachesBinomial)
{
    const double a = logit(0.1);
    for (int k = 0; k <= 50; ++k) {
        const auto m = make_model(tiny(50, k), ModelKind::BetaBin);
        EXPECT_NEAR(std::exp(m.unit_log_likelihood(coefs(a, 1e-6), 0)), binomial_pmf(k, 50, 0.1), 1e-3) << k;
    }
}

TEST(BetaBinTarget, VarianceExceedsBinomial)
{
    const int n = 20;
    const double p = 0.3;
    for (double rho : {0.01, 0.1, 0.5}) {
        double m1 = 0.0;
        double m2 = 0.0;
        double total = 0.0;
        for (int k = 0; k <= n; ++k) {
            const auto m = make_model(tiny(n, k), ModelKind::BetaBin);
            const double pk = std::exp(m.unit_log_likelihood(coefs(logit(p), rho), 0));
            total += pk;
            m1 += k * pk;
            m2 += k * k * pk;
        }
        const double var = m2 - m1 * m1;
        EXPECT_NEAR(total, 1.0, 1e-10);
        EXPECT_NEAR(var, n * p * (1 - p) * (1 + (n - 1) * rho), 1e-8);
        EXPECT_GT(var, n * p * (1 - p));
    }
}

TEST(BetaBinTarget, RhoOutsideUnitIntervalIsImpossible)
{
    const auto m = make_model(tiny(10, 2), ModelKind::BetaBin);
    std::vector<double> q(m.dim(), 0.0);
    std::vector<double> g(m.dim());
    q[uptake::UptakeModel::kRho] = 800.0; // rho rounds to 1
    EXPECT_EQ(m.log_density_gradient(q, g), -std::numeric_limits<double>::infinity());
}

TEST(UptakeTargets, GradientsMatchFiniteDifferences)
{
    sim::SimConfig cfg;
    cfg.n_units = 40;
    cfg.seed = 9;
    const auto sim = sim::simulate_units(cfg);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n01;
    for (auto kind : {ModelKind::Bin, ModelKind::BetaBin, ModelKind::Full}) {
        for (auto par : {Parameterization::Centered, Parameterization::NonCentered, Parameterization::Recentered}) {
            const auto m = make_model(sim.dataset, kind, par, 6);
            for (int rep = 0; rep < 20; ++rep) {
                std::vector<double> q(m.dim());
                for (auto& x : q) {
                    x = 0.5 * n01(rng);
                }
                q[uptake::UptakeModel::kAMu] = -4.0 + 0.3 * n01(rng);
                if (par != Parameterization::NonCentered) {
                    for (int u = 0; u < 3; ++u) {
                        q[uptake::UptakeModel::kA + static_cast<std::size_t>(u)] = -4.0 + 0.3 * n01(rng);
                    }
                }
                if (kind != ModelKind::Bin) {
                    for (int u = 0; u < 3; ++u) {
                        q[uptake::UptakeModel::kRho + static_cast<std::size_t>(u)] = -5.0 + n01(rng);
                    }
                }
                const auto chk = mcmc::check_gradient(m, q);
                EXPECT_LT(chk.max_relative_error, 1e-4)
                    << uptake::model_name(kind) << " par " << static_cast<int>(par) << " rep " << rep;
            }
        }
    }
}

TEST(UptakeTargets, ParameterNames)
{
    const auto m = make_model(tiny(10, 1), ModelKind::Full, Parameterization::Centered, 3);
    const auto names = m.parameter_names();
    ASSERT_EQ(names.size(), m.dim());
    EXPECT_EQ(names[0], "a_mu");
    EXPECT_EQ(names[4], "a[1]");
    EXPECT_EQ(names[16], "sigma");
    EXPECT_EQ(names[17], "delta");
    EXPECT_EQ(names.back(), "z[9]");
    EXPECT_EQ(make_model(tiny(10, 1), ModelKind::Bin).dim(), 13u);
    EXPECT_EQ(make_model(tiny(10, 1), ModelKind::BetaBin).dim(), 16u);
}

TEST(UptakeTargets, ModelNames)
{
    EXPECT_EQ(uptake::model_from_name("betabin"), ModelKind::BetaBin);
    EXPECT_EQ(uptake::model_name(ModelKind::Full), "full");
    EXPECT_THROW(uptake::model_from_name("probit"), UsageError);
}

TEST(UptakeTargets, MissingTrainDucRejected)
{
    auto d = tiny(10, 1);
    d.units[2].split = uptake::Split::Test;
    EXPECT_THROW(make_model(d, ModelKind::Bin), DataError);
}

TEST(FullTarget, ZeroFieldIsAdditiveOverBetaBin)
{
    sim::SimConfig cfg;
    cfg.n_units = 30;
    cfg.seed = 2;
    const auto sim = sim::simulate_units(cfg);
    for (auto par : {Parameterization::Centered, Parameterization::NonCentered, Parameterization::Recentered}) {
        const auto bb = make_model(sim.dataset, ModelKind::BetaBin, par);
        const auto full = make_model(sim.dataset, ModelKind::Full, par, 5);
        std::mt19937_64 rng(1);
        std::normal_distribution<double> n01;
        std::vector<double> qf(full.dim(), 0.0);
        qf[full.sigma_index()] = -0.5;
        qf[full.delta_index()] = 0.2;
        double prior_gap = std::numeric_limits<double>::quiet_NaN();
        for (int rep = 0; rep < 5; ++rep) {
            std::vector<double> qb(bb.dim());
            for (auto& x : qb) {
                x = 0.3 * n01(rng);
            }
            qb[uptake::UptakeModel::kAMu] = -4.0;
            for (int u = 0; u < 3; ++u) {
                qb[uptake::UptakeModel::kRho + static_cast<std::size_t>(u)] = -5.0;
            }
            std::copy(qb.begin(), qb.end(), qf.begin());
            EXPECT_NEAR(full.log_likelihood(qf), bb.log_likelihood(qb), 1e-8);
            // The extra prior terms depend only on sigma, delta and z.
            const double gap = full.log_prior(qf) - bb.log_prior(qb);
            if (rep > 0) {
                EXPECT_NEAR(gap, prior_gap, 1e-10);
            }
            prior_gap = gap;
        }
    }
}

TEST(Hsgp, EigenfunctionExamples)
{
    EXPECT_NEAR(uptake::hsgp_eigenfunction(1, 0.0, 1.0), 1.0, 1e-15);
    EXPECT_NEAR(uptake::hsgp_eigenfunction(2, 0.0, 1.0), 0.0, 1e-15);
    EXPECT_NEAR(uptake::hsgp_root(1, 2.0), M_PI / 4.0, 1e-15);
}

TEST(Hsgp, SpectralDensityAtZero)
{
    EXPECT_NEAR(uptake::matern32_spectral_density(0.0, 1.0, 1.0), 2.0 * M_PI, 1e-12);
    // Quadratic in the amplitude.
    EXPECT_NEAR(uptake::matern32_spectral_density(0.7, 2.0, 1.3), 4.0 * uptake::matern32_spectral_density(0.7, 1.0, 1.3),
                1e-12);
}

TEST(Hsgp, DomainAndBoundary)
{
    const std::vector<double> xs{-1.0, 0.4, 2.0};
    const std::vector<double> ys{0.5, -3.0, 1.0};
    const auto dom = uptake::hsgp_domain(xs, ys, uptake::HsgpSpec{});
    EXPECT_DOUBLE_EQ(dom.lx, 5.0);
    EXPECT_DOUBLE_EQ(dom.ly, 7.5);
    const std::vector<double> far_x{6.0};
    const std::vector<double> far_y{0.0};
    try {
        uptake::hsgp_basis(far_x, far_y, 4, dom);
        FAIL() << "expected boundary error";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("boundary violated"), std::string::npos);
    }
}

TEST(Hsgp, ZeroWeightsGiveZeroEffect)
{
    const std::vector<double> xs{-1.0, 0.4, 2.0};
    const std::vector<double> ys{0.5, -3.0, 1.0};
    const auto b = uptake::hsgp_basis(xs, ys, 8, uptake::hsgp_domain(xs, ys, uptake::HsgpSpec{}));
    const std::vector<double> z(b.columns(), 0.0);
    EXPECT_EQ(uptake::hsgp_effect(b, 0.7, 0.9, z).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Hsgp, SignFlipSymmetry)
{
    std::mt19937_64 rng(6);
    std::normal_distribution<double> n01;
    std::vector<double> xs(20);
    std::vector<double> ys(20);
    for (std::size_t i = 0; i < 20; ++i) {
        xs[i] = n01(rng);
        ys[i] = n01(rng);
    }
    const auto b = uptake::hsgp_basis(xs, ys, 6, uptake::hsgp_domain(xs, ys, uptake::HsgpSpec{}));
    std::vector<double> z(b.columns());
    for (auto& v : z) {
        v = n01(rng);
    }
    auto flipped = b;
    auto zf = z;
    for (std::size_t m = 0; m < b.columns(); m += 3) {
        flipped.phi.col(static_cast<Eigen::Index>(m)) *= -1.0;
        zf[m] = -zf[m];
    }
    const auto e1 = uptake::hsgp_effect(b, 0.5, 0.8, z);
    const auto e2 = uptake::hsgp_effect(flipped, 0.5, 0.8, zf);
    EXPECT_LT((e1 - e2).cwiseAbs().maxCoeff(), 1e-13);
}

// 50 uniform points on a 1:3 rectangle, standardized per axis, as the
// covariates are.
TEST(Hsgp, CovarianceApproximatesExactKernel)
{
    for (int seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
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
            const double s = std::sqrt(sample_variance(*v));
            for (auto& x : *v) {
                x = (x - m) / s;
            }
        }
        const auto b = uptake::hsgp_basis(xs, ys, 16, uptake::hsgp_domain(xs, ys, uptake::HsgpSpec{}));
        for (double delta = 0.5; delta <= 1.5 + 1e-9; delta += 0.25) {
            const auto approx = uptake::hsgp_covariance(b, 1.3, delta);
            Eigen::MatrixXd exact(50, 50);
            for (std::size_t i = 0; i < 50; ++i) {
                for (std::size_t j = 0; j < 50; ++j) {
                    exact(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                        uptake::matern32_kernel(std::hypot(xs[i] - xs[j], ys[i] - ys[j]), 1.3, delta);
                }
            }
            EXPECT_LT((approx - exact).norm() / exact.norm(), 0.10) << "seed " << seed << " delta " << delta;
        }
    }
}

TEST(Predict, CertainUptakeGivesRateOne)
{
    const auto d = tiny(1000, 1000);
    const auto m = make_model(d, ModelKind::Bin);
    mcmc::PosteriorDraws draws(m.parameter_names(), 2, 50);
    for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t i = 0; i < 50; ++i) {
            auto row = draws.row(c, i);
            for (int u = 0; u < 3; ++u) {
                row[4 + static_cast<std::size_t>(u)] = 1000.0;
            }
        }
    }
    const std::vector<std::size_t> units{0, 1, 2};
    const auto pred = uptake::posterior_predict(m, draws, units, 1);
    for (const auto& r : pred.rates) {
        for (double x : r) {
            EXPECT_EQ(x, 1.0);
        }
    }
    EXPECT_EQ(pred.summary[0].median, 1.0);
}

TEST(Predict, BinomialConcentration)
{
    const auto d = tiny(1000000, 500000);
    for (auto kind : {ModelKind::Bin, ModelKind::BetaBin}) {
        const auto m = make_model(d, kind);
        mcmc::PosteriorDraws draws(m.parameter_names(), 1, 400);
        for (std::size_t i = 0; i < 400; ++i) {
            auto row = draws.row(0, i);
            if (kind == ModelKind::BetaBin) {
                for (int u = 0; u < 3; ++u) {
                    row[13 + static_cast<std::size_t>(u)] = 1e-7;
                }
            }
        }
        const std::vector<std::size_t> units{0};
        const auto pred = uptake::posterior_predict(m, draws, units, 3);
        EXPECT_NEAR(pred.summary[0].mean, 0.5, 0.002);
        for (double x : pred.rates[0]) {
            EXPECT_GE(x, 0.0);
            EXPECT_LE(x, 1.0);
        }
    }
}

TEST(Predict, HdiContainsMedianAndUnitStreamsIndependent)
{
    sim::SimConfig cfg;
    cfg.n_units = 60;
    cfg.seed = 5;
    const auto sim = sim::simulate_units(cfg);
    const auto m = make_model(sim.dataset, ModelKind::BetaBin);
    mcmc::PosteriorDraws draws(m.parameter_names(), 2, 200);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n01;
    for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t i = 0; i < 200; ++i) {
            auto row = draws.row(c, i);
            for (std::size_t u = 0; u < 3; ++u) {
                row[4 + u] = -4.0 + 0.1 * n01(rng);
                row[13 + u] = 0.005;
            }
        }
    }
    const std::vector<std::size_t> all{0, 1, 2, 3, 4, 5};
    const auto p_all = uptake::posterior_predict(m, draws, all, 7);
    for (const auto& s : p_all.summary) {
        EXPECT_LE(s.hdi_lower, s.median);
        EXPECT_GE(s.hdi_upper, s.median);
    }
    const std::vector<std::size_t> one{4};
    const auto p_one = uptake::posterior_predict(m, draws, one, 7);
    EXPECT_EQ(p_one.rates[0], p_all.rates[4]);
}

TEST(Predict, PointwiseLogLikelihoodShape)
{
    sim::SimConfig cfg;
    cfg.n_units = 50;
    cfg.seed = 5;
    const auto sim = sim::simulate_units(cfg);
    const auto m = make_model(sim.dataset, ModelKind::Bin);
    mcmc::PosteriorDraws draws(m.parameter_names(), 1, 3);
    for (std::size_t i = 0; i < 3; ++i) {
        auto row = draws.row(0, i);
        for (std::size_t u = 0; u < 3; ++u) {
            row[4 + u] = -4.0;
        }
    }
    const auto ll = uptake::pointwise_log_likelihood(m, draws);
    EXPECT_EQ(ll.rows(), 3);
    EXPECT_EQ(static_cast<std::size_t>(ll.cols()), m.train_indices().size());
    const auto c = m.coefficients(draws.row(0, 1));
    EXPECT_NEAR(ll(1, 0), m.unit_log_likelihood(c, m.train_indices()[0]), 1e-12);
}
