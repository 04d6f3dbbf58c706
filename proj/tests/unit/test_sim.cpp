#include "popcal/common/error.hpp"
#include "popcal/common/math.hpp"
#include "popcal/geo/io.hpp"
#include "popcal/mcmc/nuts.hpp"
#include "popcal/sim/units.hpp"
#include "popcal/sim/world.hpp"
#include "popcal/uptake/model.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace popcal;
using uptake::Duc;

namespace {

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path temp_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

mcmc::PosteriorDraws quick_fit(const uptake::UptakeDataset& data, uptake::ModelKind kind, std::uint64_t seed)
{
    uptake::ModelOptions o;
    o.kind = kind;
    const uptake::UptakeModel model(data, o);
    mcmc::SamplerConfig sc;
    sc.chains = 2;
    sc.warmup_iters = 300;
    sc.sampling_iters = 300;
    sc.seed = seed;
    return mcmc::sample(model, sc);
}

} // namespace

TEST(SimUnits, ObservablesSatisfyInvariants)
{
    sim::SimConfig cfg;
    cfg.n_units = 400;
    const auto s = sim::simulate_units(cfg);
    ASSERT_EQ(s.dataset.units.size(), 400u);
    EXPECT_NO_THROW(s.dataset.validate());
    for (const auto& u : s.dataset.units) {
        EXPECT_GE(u.users, 0);
        EXPECT_LE(u.users, u.population);
        EXPECT_GE(u.population, 100);
    }
}

TEST(SimUnits, CollapsedLinkGivesInverseLogitMean)
{
    sim::SimConfig cfg;
    cfg.n_units = 3000;
    cfg.seed = 8;
    cfg.truth.b_w = {0, 0, 0};
    cfg.truth.b_l = {0, 0, 0};
    cfg.truth.sigma = 0.0;
    const auto s = sim::simulate_units(cfg);
    for (auto duc : uptake::kAllDucs) {
        const auto d = static_cast<std::size_t>(uptake::duc_index(duc));
        double sum = 0.0;
        double sum_sq_se = 0.0;
        int count = 0;
        const double p = inv_logit(cfg.truth.a[d]);
        for (std::size_t i = 0; i < s.dataset.units.size(); ++i) {
            const auto& u = s.dataset.units[i];
            if (u.duc != duc) {
                continue;
            }
            EXPECT_NEAR(s.truth.units[i].p, p, 1e-15);
            sum += u.rate();
            const double n = static_cast<double>(u.population);
            sum_sq_se += p * (1 - p) / n * (1 + (n - 1) * cfg.truth.rho[d]);
            ++count;
        }
        const double se = std::sqrt(sum_sq_se) / count;
        EXPECT_NEAR(sum / count, p, 4.0 * se) << uptake::duc_name(duc);
    }
}

TEST(SimUnits, VanishingOverdispersionGivesBinomialVariance)
{
    // Identical units: the spread of FB/N across replicates must match
    // p(1-p)/N when rho = 0 and exceed it clearly when rho > 0.
    for (double rho : {0.0, 0.01}) {
        sim::SimConfig cfg;
        cfg.n_units = 4000;
        cfg.seed = 3;
        cfg.duc_proportions = {1.0, 0.0, 0.0};
        cfg.truth.b_w = {0, 0, 0};
        cfg.truth.b_l = {0, 0, 0};
        cfg.truth.sigma = 0.0;
        cfg.truth.rho = {rho, rho, rho};
        const auto s = sim::simulate_units(cfg);
        const double p = inv_logit(cfg.truth.a[0]);
        // Standardise each unit's rate by its own binomial sd.
        std::vector<double> zs;
        for (const auto& u : s.dataset.units) {
            const double n = static_cast<double>(u.population);
            zs.push_back((u.rate() - p) / std::sqrt(p * (1 - p) / n));
        }
        const double var = sample_variance(zs);
        if (rho == 0.0) {
            EXPECT_NEAR(var, 1.0, 0.1);
        } else {
            EXPECT_GT(var, 10.0);
        }
    }
}

TEST(SimUnits, SeedDeterminesOutputBytes)
{
    sim::SimConfig cfg;
    cfg.n_units = 200;
    cfg.seed = 42;
    const auto dir = temp_dir("popcal_sim_det");
    sim::simulate_units(cfg).dataset.write_csv(dir / "a.csv");
    sim::simulate_units(cfg).dataset.write_csv(dir / "b.csv");
    EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
    cfg.seed = 43;
    sim::simulate_units(cfg).dataset.write_csv(dir / "c.csv");
    EXPECT_NE(slurp(dir / "a.csv"), slurp(dir / "c.csv"));
}

TEST(SimUnits, ConfigValidation)
{
    sim::SimConfig cfg;
    cfg.duc_proportions = {0.5, 0.5, 0.5};
    EXPECT_THROW(cfg.validate(), UsageError);
    cfg = sim::SimConfig{};
    cfg.censor_threshold = 0;
    EXPECT_THROW(cfg.validate(), UsageError);
}

TEST(SimUnits, MaternFieldHasKernelCovariance)
{
    const std::vector<double> xs{0.0, 0.5};
    const std::vector<double> ys{0.0, 0.0};
    double s00 = 0.0;
    double s01 = 0.0;
    const int reps = 20000;
    for (int r = 0; r < reps; ++r) {
        const auto f = sim::matern32_field(xs, ys, 0.8, 0.7, static_cast<std::uint64_t>(r + 1));
        s00 += f[0] * f[0];
        s01 += f[0] * f[1];
    }
    EXPECT_NEAR(s00 / reps, 0.64, 0.03);
    EXPECT_NEAR(s01 / reps, 0.64 * (1 + std::sqrt(3.0) * 0.5 / 0.7) * std::exp(-std::sqrt(3.0) * 0.5 / 0.7), 0.03);
}

TEST(SimWorld, IngestRecoversSimulatedDataset)
{
    sim::WorldConfig cfg;
    cfg.units.n_units = 90;
    cfg.units.seed = 5;
    cfg.units.grid_layout = true;
    const auto world = sim::simulate_world(cfg);
    const auto dir = temp_dir("popcal_world");
    sim::write_world(world, dir);

    const auto boundaries = geo::read_units_geojson(dir / sim::WorldFiles::kUnits);
    const auto attrs = geo::read_unit_attributes_csv(dir / sim::WorldFiles::kAttributes);
    const auto tiles = geo::read_tiles_csv(dir / sim::WorldFiles::kTiles);
    const auto duc = geo::RasterGrid::read_ascii(dir / sim::WorldFiles::kDucRaster);
    const auto pop = geo::RasterGrid::read_ascii(dir / sim::WorldFiles::kPopulationRaster);
    const auto rad = geo::RasterGrid::read_ascii(dir / sim::WorldFiles::kRadianceRaster);
    const auto units = geo::resolve_units(boundaries, attrs, duc, pop, rad);
    std::vector<geo::TileCount> counts;
    for (const auto& [id, c] : world.tile_users) {
        counts.push_back({id, static_cast<double>(c)});
    }
    const auto app = geo::apportion_tile_counts(tiles, counts, boundaries);
    EXPECT_TRUE(app.orphan_tiles.empty());
    const auto built = geo::build_dataset(units, app.unit_counts, cfg.units.seed, cfg.units.train_fraction);

    const auto& expect = world.units.dataset.units;
    ASSERT_EQ(built.dataset.units.size(), expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) {
        const auto& a = built.dataset.units[i];
        const auto& b = expect[i];
        EXPECT_EQ(a.unit_id, b.unit_id);
        EXPECT_EQ(a.duc, b.duc);
        EXPECT_EQ(a.population, b.population);
        EXPECT_EQ(a.users, b.users);
        EXPECT_EQ(a.split, b.split);
        EXPECT_NEAR(a.working_age, b.working_age, 1e-9);
        EXPECT_NEAR(a.log_radiance, b.log_radiance, 1e-9);
        EXPECT_NEAR(a.x, b.x, 1e-9);
        EXPECT_NEAR(a.y, b.y, 1e-9);
    }

    // Observed entries respect the threshold; every day and tile is present.
    EXPECT_EQ(world.observations.size(), world.tiles.size() * static_cast<std::size_t>(cfg.units.n_days));
    for (const auto& o : world.observations) {
        if (o.count) {
            EXPECT_GE(*o.count, cfg.units.censor_threshold);
        }
    }
}

TEST(SimWorld, RejectsReferenceOutsideWindow)
{
    sim::WorldConfig cfg;
    cfg.units.grid_layout = true;
    cfg.reference_date = std::chrono::year_month_day{std::chrono::year{2021}, std::chrono::month{1}, std::chrono::day{1}};
    EXPECT_THROW(cfg.validate(), UsageError);
    cfg = sim::WorldConfig{};
    EXPECT_THROW(cfg.validate(), UsageError); // uniform layout
}

// Severing working age from uptake: the posterior interval of every b_w
// should cover zero in most replications.
TEST(SimRecovery, SeveredAgeEdgeCoversZero)
{
    int covered = 0;
    int total = 0;
    for (int rep = 0; rep < 20; ++rep) {
        sim::SimConfig cfg;
        cfg.n_units = 200;
        cfg.seed = 100 + static_cast<std::uint64_t>(rep);
        cfg.truth.b_w = {0, 0, 0};
        cfg.truth.sigma = 0.0;
        const auto s = sim::simulate_units(cfg);
        const auto draws = quick_fit(s.dataset, uptake::ModelKind::BetaBin, 7);
        for (int u = 1; u <= 3; ++u) {
            auto xs = draws.flat(draws.index("b_w[" + std::to_string(u) + "]"));
            const double lo = quantile(xs, 0.025);
            const double hi = quantile(xs, 0.975);
            covered += (lo <= 0.0 && 0.0 <= hi) ? 1 : 0;
            ++total;
        }
    }
    EXPECT_GE(covered, static_cast<int>(std::ceil(0.9 * total))) << covered << "/" << total;
}

TEST(SimRecovery, DoublingUnitsShrinksPosteriorSd)
{
    auto sd_of_a = [](int n) {
        sim::SimConfig cfg;
        cfg.n_units = n;
        cfg.seed = 31;
        cfg.truth.sigma = 0.0;
        const auto s = sim::simulate_units(cfg);
        const auto draws = quick_fit(s.dataset, uptake::ModelKind::BetaBin, 3);
        std::array<double, 3> out{};
        for (int u = 1; u <= 3; ++u) {
            out[static_cast<std::size_t>(u - 1)] =
                std::sqrt(sample_variance(draws.flat(draws.index("a[" + std::to_string(u) + "]"))));
        }
        return out;
    };
    const auto small = sd_of_a(400);
    const auto large = sd_of_a(800);
    for (std::size_t u = 0; u < 3; ++u) {
        const double ratio = large[u] / small[u];
        EXPECT_NEAR(ratio, 1.0 / std::sqrt(2.0), 0.3 / std::sqrt(2.0)) << "a[" << u + 1 << "]";
    }
}
