#include "popcal/cli/commands.hpp"

#include "popcal/cli/manifest.hpp"
#include "popcal/common/csv.hpp"
#include "popcal/common/error.hpp"
#include "popcal/common/log.hpp"
#include "popcal/eval/metrics.hpp"
#include "popcal/eval/psis.hpp"
#include "popcal/eval/sweep.hpp"
#include "popcal/geo/io.hpp"
#include "popcal/impute/impute.hpp"
#include "popcal/mcmc/diagnostics.hpp"
#include "popcal/sim/world.hpp"
#include "popcal/uptake/predict.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace popcal::cli {

namespace fs = std::filesystem;

namespace {

// Stage seeds are fixed offsets from the configured seed.
constexpr std::uint64_t kImputeSamplerOffset = 1;
constexpr std::uint64_t kImputeDrawOffset = 2;
constexpr std::uint64_t kImputePpcOffset = 3;
constexpr std::uint64_t kImputeCompareOffset = 4;
constexpr std::uint64_t kFitOffset = 10;
constexpr std::uint64_t kPredictOffset = 20;

// Thinned predictive samples per unit in the density overlay file.
constexpr std::size_t kDensitySamplesPerUnit = 100;

const char* const kFitInfo = "fit.json";
const char* const kDraws = "draws.csv";

void require(const fs::path& p, const char* key)
{
    if (p.empty()) {
        throw UsageError(std::string("missing input: set '") + key + "'");
    }
    if (!fs::exists(p)) {
        throw DataError("input '" + p.string() + "' does not exist");
    }
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw UsageError("cannot create output directory '" + dir.string() + "'");
    }
}

std::ofstream open_out(const fs::path& p)
{
    std::ofstream out(p);
    if (!out) {
        throw DataError("cannot write '" + p.string() + "'");
    }
    return out;
}

void write_json(const fs::path& p, const nlohmann::json& j) { open_out(p) << j.dump(2) << '\n'; }

nlohmann::json sampler_json(const mcmc::SamplerConfig& s, const mcmc::SamplerInfo& info)
{
    nlohmann::json chains = nlohmann::json::array();
    for (const auto& c : info.chains) {
        chains.push_back({{"step_size", c.step_size},
                          {"mean_accept_stat", c.mean_accept_stat},
                          {"mean_tree_depth", c.mean_tree_depth},
                          {"max_tree_depth_hits", c.max_tree_depth_hits},
                          {"gradient_evaluations", c.gradient_evaluations}});
    }
    return {{"chains", s.chains},
            {"warmup", s.warmup_iters},
            {"samples", s.sampling_iters},
            {"seed", s.seed},
            {"target_accept", s.target_accept},
            {"max_tree_depth", s.max_tree_depth},
            {"chain_info", chains}};
}

void report_convergence(const std::string& what, const mcmc::PosteriorDraws& draws,
                        std::optional<std::size_t> divergences = std::nullopt)
{
    double max_rhat = 0.0;
    double min_ess = std::numeric_limits<double>::infinity();
    for (const auto& s : mcmc::summarize(draws)) {
        if (std::isfinite(s.rhat)) {
            max_rhat = std::max(max_rhat, s.rhat);
        }
        if (std::isfinite(s.ess)) {
            min_ess = std::min(min_ess, s.ess);
        }
    }
    std::ostringstream msg;
    msg << what << ": max R-hat " << max_rhat << ", min ESS " << min_ess << ", divergences "
        << divergences.value_or(draws.divergence_count());
    log::info(msg.str());
}

std::string fit_dir_name(uptake::ModelKind k) { return "fit_" + std::string(uptake::model_name(k)); }

struct LoadedFit {
    uptake::ModelOptions options;
    mcmc::PosteriorDraws draws;
    fs::path draws_path;
    fs::path info_path;
};

LoadedFit load_fit(const fs::path& dir)
{
    LoadedFit f;
    f.info_path = dir / kFitInfo;
    f.draws_path = dir / kDraws;
    require(f.info_path, "fit_dirs");
    require(f.draws_path, "fit_dirs");
    nlohmann::json info;
    try {
        std::ifstream in(f.info_path);
        in >> info;
        f.options.kind = uptake::model_from_name(info.at("model").get<std::string>());
        f.options.hsgp.n_basis = info.at("basis").get<int>();
        f.options.parameterization = uptake::parameterization_from_name(info.at("parameterization").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(f.info_path.string() + ": " + e.what());
    }
    f.draws = mcmc::PosteriorDraws::read_csv(f.draws_path);
    return f;
}

} // namespace

void run_simulate(const PipelineConfig& cfg)
{
    ensure_dir(cfg.out_dir);
    sim::WorldConfig w;
    w.units.n_units = cfg.n_units;
    w.units.seed = cfg.seed;
    w.units.n_days = cfg.n_days;
    w.units.censor_threshold = cfg.censor_threshold;
    w.units.train_fraction = cfg.train_fraction;
    w.units.grid_layout = true;
    w.reference_date = cfg.reference_date;
    w.start_date = cfg.start_date;
    w.window = cfg.window;
    w.tile_concentration = cfg.tile_concentration;
    log::info("simulate: " + std::to_string(cfg.n_units) + " units");
    const auto world = sim::simulate_world(w);
    sim::write_world(world, cfg.out_dir);

    Manifest m{"simulate", cfg.to_key_values(), {}, {}};
    for (const char* f : {sim::WorldFiles::kUnits, sim::WorldFiles::kAttributes, sim::WorldFiles::kTiles,
                          sim::WorldFiles::kObservations, sim::WorldFiles::kDucRaster,
                          sim::WorldFiles::kPopulationRaster, sim::WorldFiles::kRadianceRaster,
                          sim::WorldFiles::kDataset, sim::WorldFiles::kTruth}) {
        m.outputs.push_back(cfg.out_dir / f);
    }
    m.outputs.push_back(uptake::scaling_path_for(cfg.out_dir / sim::WorldFiles::kDataset));
    m.write(cfg.out_dir);
}

void run_impute(const PipelineConfig& cfg)
{
    require(cfg.observations, "observations");
    require(cfg.tiles, "tiles");
    ensure_dir(cfg.out_dir);
    const auto tiles = geo::read_tiles_csv(cfg.tiles);
    const auto obs = geo::read_observations_csv(cfg.observations, cfg.censor_threshold);
    auto histories = impute::build_histories(obs, cfg.window);

    impute::ImputationModelSpec spec;
    spec.censor_threshold = cfg.censor_threshold;
    spec.hierarchical = cfg.impute_hierarchical;
    const impute::ImputationModel model(histories, spec);
    log::info("impute: fitting " + std::to_string(model.dim()) + " parameters for " +
              std::to_string(histories.size()) + " tiles");
    const auto sampler = cfg.sampler(cfg.seed + kImputeSamplerOffset);
    mcmc::SamplerInfo info;
    const auto draws = mcmc::sample(model, sampler, &info);
    report_convergence("impute", draws);

    impute::ImputeOptions opts;
    opts.reference_date = cfg.reference_date;
    opts.reference_window = cfg.window;
    opts.seed = cfg.seed + kImputeDrawOffset;
    opts.weight = cfg.land_weight;
    const auto imputed = impute::impute(draws, model, tiles, obs, opts);

    Manifest m{"impute", cfg.to_key_values(), {cfg.observations, cfg.tiles}, {}};
    auto out = [&](const std::string& name) {
        m.outputs.push_back(cfg.out_dir / name);
        return cfg.out_dir / name;
    };
    impute::write_imputed_csv(out("imputed_counts.csv"), imputed);
    draws.write_csv(out("imputation_draws.csv"));
    auto summary = mcmc::summary_json(draws);
    summary["sampler"] = sampler_json(sampler, info);
    summary["draw_index"] = imputed.draw_index;
    write_json(out("imputation_summary.json"), summary);
    impute::write_ppc_csv(out("imputation_ppc.csv"), impute::imputation_ppc(draws, model, cfg.seed + kImputePpcOffset));

    if (cfg.impute_compare) {
        auto other_spec = spec;
        other_spec.hierarchical = !spec.hierarchical;
        const impute::ImputationModel other(histories, other_spec);
        log::info(std::string("impute: fitting the ") + (other_spec.hierarchical ? "hierarchical" : "independent") +
                  " variant for comparison");
        const auto other_draws = mcmc::sample(other, cfg.sampler(cfg.seed + kImputeCompareOffset));
        report_convergence("impute comparison", other_draws);
        const auto rows = spec.hierarchical ? impute::compare_rate_means(draws, model, other_draws, other)
                                            : impute::compare_rate_means(other_draws, other, draws, model);
        auto f = open_out(out("rate_comparison.csv"));
        f << "tile_id,hierarchical_mean,independent_mean,relative_difference\n";
        for (const auto& r : rows) {
            f << r.tile_id << ',' << csv::format_real(r.hierarchical_mean) << ','
              << csv::format_real(r.independent_mean) << ',' << csv::format_real(r.relative_difference) << '\n';
        }
    }
    m.write(cfg.out_dir);
}

void run_ingest(const PipelineConfig& cfg)
{
    require(cfg.units_geojson, "units_geojson");
    require(cfg.attributes, "attributes");
    require(cfg.tiles, "tiles");
    require(cfg.counts, "counts");
    require(cfg.duc_raster, "duc_raster");
    require(cfg.population_raster, "population_raster");
    require(cfg.radiance_raster, "radiance_raster");
    ensure_dir(cfg.out_dir);

    const auto boundaries = geo::read_units_geojson(cfg.units_geojson);
    const auto attrs = geo::read_unit_attributes_csv(cfg.attributes);
    const auto tiles = geo::read_tiles_csv(cfg.tiles);
    const auto counts = impute::read_imputed_csv(cfg.counts);
    const auto duc = geo::RasterGrid::read_ascii(cfg.duc_raster);
    const auto pop = geo::RasterGrid::read_ascii(cfg.population_raster);
    const auto rad = geo::RasterGrid::read_ascii(cfg.radiance_raster);

    log::info("ingest: " + std::to_string(boundaries.size()) + " units, " + std::to_string(tiles.size()) + " tiles");
    const auto units = geo::resolve_units(boundaries, attrs, duc, pop, rad);
    const auto app = geo::apportion_tile_counts(tiles, counts, boundaries);
    auto built = geo::build_dataset(units, app.unit_counts, cfg.seed, cfg.train_fraction);
    if (!app.orphan_tiles.empty()) {
        built.warnings.push_back(std::to_string(app.orphan_tiles.size()) + " tiles touch no unit; " +
                                 csv::format_real(app.orphan_total) + " users dropped");
    }
    for (const auto& w : built.warnings) {
        log::warn("ingest: " + w);
    }

    const auto dataset = cfg.out_dir / "dataset.csv";
    built.dataset.write_csv(dataset);
    built.dataset.write_scaling(uptake::scaling_path_for(dataset));
    const auto warn_path = cfg.out_dir / "ingest_warnings.txt";
    {
        auto f = open_out(warn_path);
        for (const auto& w : built.warnings) {
            f << w << '\n';
        }
    }
    Manifest m{"ingest",
               cfg.to_key_values(),
               {cfg.units_geojson, cfg.attributes, cfg.tiles, cfg.counts, cfg.duc_raster, cfg.population_raster,
                cfg.radiance_raster},
               {dataset, uptake::scaling_path_for(dataset), warn_path}};
    m.write(cfg.out_dir);
}

void run_fit(const PipelineConfig& cfg, uptake::ModelKind kind)
{
    require(cfg.dataset, "dataset");
    ensure_dir(cfg.out_dir);
    const auto data = uptake::UptakeDataset::read_csv(cfg.dataset);
    uptake::ModelOptions opts;
    opts.kind = kind;
    opts.hsgp.n_basis = cfg.basis;
    opts.parameterization = cfg.parameterization;
    const uptake::UptakeModel model(data, opts);
    log::info("fit: model " + std::string(uptake::model_name(kind)) + ", " + std::to_string(model.dim()) +
              " parameters, " + std::to_string(model.train_indices().size()) + " train units");
    const auto sampler = cfg.sampler(cfg.seed + kFitOffset + static_cast<std::uint64_t>(kind));
    mcmc::SamplerInfo info;
    const auto draws = mcmc::sample(model, sampler, &info);
    report_convergence("fit " + std::string(uptake::model_name(kind)), draws);

    const auto draws_path = cfg.out_dir / kDraws;
    const auto summary_path = cfg.out_dir / "summary.json";
    const auto info_path = cfg.out_dir / kFitInfo;
    draws.write_csv(draws_path);
    write_json(summary_path, mcmc::summary_json(draws));
    write_json(info_path, {{"model", uptake::model_name(kind)},
                           {"basis", cfg.basis},
                           {"parameterization", uptake::parameterization_name(cfg.parameterization)},
                           {"dataset", cfg.dataset.generic_string()},
                           {"sampler", sampler_json(sampler, info)}});
    Manifest m{"fit", cfg.to_key_values(), {cfg.dataset}, {draws_path, summary_path, info_path}};
    if (fs::exists(uptake::scaling_path_for(cfg.dataset))) {
        m.inputs.push_back(uptake::scaling_path_for(cfg.dataset));
    }
    m.write(cfg.out_dir);
}

void run_evaluate(const PipelineConfig& cfg)
{
    require(cfg.dataset, "dataset");
    if (cfg.fit_dirs.empty() && cfg.basis_sweep.empty()) {
        throw UsageError("evaluate needs at least one fit directory or a basis sweep");
    }
    ensure_dir(cfg.out_dir);
    const auto data = uptake::UptakeDataset::read_csv(cfg.dataset);
    Manifest m{"evaluate", cfg.to_key_values(), {cfg.dataset}, {}};
    auto out = [&](const std::string& name) {
        m.outputs.push_back(cfg.out_dir / name);
        return cfg.out_dir / name;
    };

    std::vector<eval::ModelPredictions> preds;
    std::vector<std::string> names;
    std::vector<eval::LooResult> loos;
    auto pred_file = open_out(out("predictions.csv"));
    pred_file << "model,unit_id,duc,observed_rate,mean,median,hdi_lower,hdi_upper\n";
    auto dens_file = open_out(out("density_samples.csv"));
    dens_file << "model,duc,source,rate\n";

    for (const auto& dir : cfg.fit_dirs) {
        const auto fit = load_fit(dir);
        m.inputs.push_back(fit.info_path);
        m.inputs.push_back(fit.draws_path);
        const uptake::UptakeModel model(data, fit.options);
        const std::string name(uptake::model_name(fit.options.kind));
        if (fit.draws.names() != model.parameter_names()) {
            throw DataError(fit.draws_path.string() + ": parameters do not match model '" + name + "'");
        }
        log::info("evaluate: model " + name);

        const auto test = data.indices(uptake::Split::Test);
        const auto p = uptake::posterior_predict(model, fit.draws, test, cfg.seed + kPredictOffset);
        eval::ModelPredictions mp;
        mp.model = name;
        for (std::size_t k = 0; k < test.size(); ++k) {
            const auto& u = data.units[test[k]];
            const auto& s = p.summary[k];
            mp.unit_ids.push_back(u.unit_id);
            mp.ducs.push_back(u.duc);
            mp.observed.push_back(u.rate());
            pred_file << name << ',' << u.unit_id << ',' << uptake::duc_name(u.duc) << ','
                      << csv::format_real(u.rate()) << ',' << csv::format_real(s.mean) << ','
                      << csv::format_real(s.median) << ',' << csv::format_real(s.hdi_lower) << ','
                      << csv::format_real(s.hdi_upper) << '\n';
            const auto& r = p.rates[k];
            const std::size_t stride = std::max<std::size_t>(1, r.size() / kDensitySamplesPerUnit);
            for (std::size_t d = 0; d < r.size(); d += stride) {
                dens_file << name << ',' << uptake::duc_name(u.duc) << ",predicted," << csv::format_real(r[d]) << '\n';
            }
        }
        mp.samples = p.rates;
        preds.push_back(std::move(mp));

        const auto loo = eval::psis_loo(uptake::pointwise_log_likelihood(model, fit.draws));
        std::vector<std::string> ids;
        for (auto i : model.train_indices()) {
            ids.push_back(data.units[i].unit_id);
        }
        eval::write_loo_csv(out("loo_" + name + ".csv"), ids, loo);
        names.push_back(name);
        loos.push_back(loo);
    }
    for (auto i : data.indices(uptake::Split::Test)) {
        const auto& u = data.units[i];
        dens_file << "observed," << uptake::duc_name(u.duc) << ",observed," << csv::format_real(u.rate()) << '\n';
    }
    pred_file.close();
    dens_file.close();

    if (!preds.empty()) {
        auto rep = eval::report(preds);
        eval::add_loo(rep, names, loos);
        for (const auto& w : rep.warnings) {
            log::warn("evaluate: " + w);
        }
        eval::write_metrics_csv(out("metrics.csv"), rep.rows);
        auto f = open_out(out("loo_summary.csv"));
        f << "model,elpd_loo,se,k_below_0.5,k_0.5_to_0.7,k_above_0.7\n";
        for (const auto& l : rep.loo) {
            f << l.model << ',' << csv::format_real(l.elpd) << ',' << csv::format_real(l.se) << ',' << l.k_brackets[0]
              << ',' << l.k_brackets[1] << ',' << l.k_brackets[2] << '\n';
        }
        auto g = open_out(out("loo_comparison.csv"));
        g << "model_a,model_b,elpd_diff,se_diff\n";
        for (const auto& d : rep.loo_differences) {
            g << d.model_a << ',' << d.model_b << ',' << csv::format_real(d.elpd_diff) << ','
              << csv::format_real(d.se_diff) << '\n';
        }
    }
    if (!cfg.basis_sweep.empty()) {
        const auto rows = eval::basis_sweep(data, cfg.basis_sweep, cfg.sampler(cfg.seed + kFitOffset),
                                            cfg.seed + kPredictOffset);
        eval::write_sweep_csv(out("basis_sweep.csv"), rows);
    }
    m.write(cfg.out_dir);
}

void run_diagnose(const PipelineConfig& cfg)
{
    require(cfg.draws, "draws");
    ensure_dir(cfg.out_dir);
    const auto draws = mcmc::PosteriorDraws::read_csv(cfg.draws);
    auto diag = mcmc::summary_json(draws);
    std::vector<fs::path> inputs{cfg.draws};
    // Divergence flags are not part of draws.csv; a fit directory carries
    // them in its summary.json.
    std::optional<std::size_t> divergences;
    const auto fit_summary = cfg.draws.parent_path() / "summary.json";
    if (fs::exists(fit_summary)) {
        try {
            std::ifstream in(fit_summary);
            const auto j = nlohmann::json::parse(in);
            divergences = j.at("divergences").get<std::size_t>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError(fit_summary.string() + ": " + e.what());
        }
        diag["divergences"] = *divergences;
        inputs.push_back(fit_summary);
    }
    report_convergence("diagnose " + cfg.draws.filename().string(), draws, divergences);
    const auto path = cfg.out_dir / "diagnostics.json";
    write_json(path, diag);
    Manifest m{"diagnose", cfg.to_key_values(), inputs, {path}};
    m.write(cfg.out_dir);
}

void run_pipeline(const PipelineConfig& cfg)
{
    ensure_dir(cfg.out_dir);
    const auto root = cfg.out_dir;

    auto sim_cfg = cfg;
    sim_cfg.out_dir = root / "sim";
    run_simulate(sim_cfg);

    auto imp = cfg;
    imp.out_dir = root / "impute";
    imp.observations = sim_cfg.out_dir / sim::WorldFiles::kObservations;
    imp.tiles = sim_cfg.out_dir / sim::WorldFiles::kTiles;
    run_impute(imp);

    auto ing = cfg;
    ing.out_dir = root / "ingest";
    ing.units_geojson = sim_cfg.out_dir / sim::WorldFiles::kUnits;
    ing.attributes = sim_cfg.out_dir / sim::WorldFiles::kAttributes;
    ing.tiles = imp.tiles;
    ing.counts = imp.out_dir / "imputed_counts.csv";
    ing.duc_raster = sim_cfg.out_dir / sim::WorldFiles::kDucRaster;
    ing.population_raster = sim_cfg.out_dir / sim::WorldFiles::kPopulationRaster;
    ing.radiance_raster = sim_cfg.out_dir / sim::WorldFiles::kRadianceRaster;
    run_ingest(ing);

    const auto dataset = ing.out_dir / "dataset.csv";
    std::vector<fs::path> fit_dirs;
    for (auto kind : cfg.models) {
        auto f = cfg;
        f.out_dir = root / fit_dir_name(kind);
        f.dataset = dataset;
        run_fit(f, kind);
        fit_dirs.push_back(f.out_dir);

        auto d = cfg;
        d.out_dir = root / "diagnose" / uptake::model_name(kind);
        d.draws = f.out_dir / kDraws;
        run_diagnose(d);
    }

    auto ev = cfg;
    ev.out_dir = root / "evaluate";
    ev.dataset = dataset;
    ev.fit_dirs = fit_dirs;
    run_evaluate(ev);

    Manifest m{"pipeline", cfg.to_key_values(), {}, {}};
    for (const auto& sub : {sim_cfg.out_dir, imp.out_dir, ing.out_dir, ev.out_dir}) {
        m.outputs.push_back(sub / "manifest.json");
    }
    for (const auto& f : fit_dirs) {
        m.outputs.push_back(f / "manifest.json");
    }
    m.write(root);
    log::info("pipeline: done; metrics in " + (ev.out_dir / "metrics.csv").string());
}

int main(int argc, char** argv)
{
    CLI::App app{"Facebook uptake calibration: simulate, impute, ingest, fit, evaluate", "popcal"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", POPCAL_VERSION);

    std::string config_path;
    KeyValues overrides;
    bool quiet = false;
    std::string model_name = "full";

    auto kv_option = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& desc) {
        sub->add_option_function<std::string>(
            flag, [&overrides, key](const std::string& v) { overrides[key] = v; }, desc);
    };
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key = value configuration file");
        kv_option(sub, "--seed", "seed", "base random seed");
        kv_option(sub, "--threads", "threads", "worker threads for MCMC chains (0 = all cores)");
        kv_option(sub, "--out", "out_dir", "output directory");
        sub->add_flag("--quiet", quiet, "suppress progress lines");
    };
    auto sampler_opts = [&](CLI::App* sub) {
        kv_option(sub, "--chains", "chains", "number of chains");
        kv_option(sub, "--warmup", "warmup", "warmup iterations per chain");
        kv_option(sub, "--samples", "samples", "sampling iterations per chain");
    };

    auto* simulate = app.add_subcommand("simulate", "write a synthetic world with known truth");
    common(simulate);
    kv_option(simulate, "--units", "n_units", "number of administrative units");

    auto* imp = app.add_subcommand("impute", "fit the censored-count model and impute reference counts");
    common(imp);
    sampler_opts(imp);
    kv_option(imp, "--observations", "observations", "tile observations CSV");
    kv_option(imp, "--tiles", "tiles", "tile grid CSV");
    kv_option(imp, "--reference-date", "reference_date", "reference date (YYYY-MM-DD)");
    kv_option(imp, "--window", "window", "daytime, evening or nighttime");

    auto* ingest = app.add_subcommand("ingest", "build the model-ready unit table");
    common(ingest);
    kv_option(ingest, "--units-geojson", "units_geojson", "unit boundaries GeoJSON");
    kv_option(ingest, "--attributes", "attributes", "unit attributes CSV");
    kv_option(ingest, "--tiles", "tiles", "tile grid CSV");
    kv_option(ingest, "--counts", "counts", "imputed tile counts CSV");
    kv_option(ingest, "--duc-raster", "duc_raster", "degree-of-urbanisation raster");
    kv_option(ingest, "--population-raster", "population_raster", "population raster");
    kv_option(ingest, "--radiance-raster", "radiance_raster", "nighttime radiance raster");
    kv_option(ingest, "--train-fraction", "train_fraction", "share of units in the train split");

    auto* fit = app.add_subcommand("fit", "fit one uptake model");
    common(fit);
    sampler_opts(fit);
    kv_option(fit, "--dataset", "dataset", "dataset CSV from ingest");
    fit->add_option("--model", model_name, "bin, betabin or full")->check(CLI::IsMember({"bin", "betabin", "full"}));
    kv_option(fit, "--basis", "basis", "HSGP basis functions per dimension");

    auto* evaluate = app.add_subcommand("evaluate", "score fitted models on the test split");
    common(evaluate);
    sampler_opts(evaluate);
    kv_option(evaluate, "--dataset", "dataset", "dataset CSV from ingest");
    evaluate->add_option_function<std::vector<std::string>>(
        "--fit",
        [&overrides](const std::vector<std::string>& v) {
            std::string joined;
            for (std::size_t i = 0; i < v.size(); ++i) {
                joined += (i ? "," : "") + v[i];
            }
            overrides["fit_dirs"] = joined;
        },
        "fit output directory (repeatable)");
    kv_option(evaluate, "--basis-sweep", "basis_sweep", "comma-separated basis counts to refit and compare");

    auto* diagnose = app.add_subcommand("diagnose", "convergence summary of a draws file");
    common(diagnose);
    kv_option(diagnose, "--draws", "draws", "draws CSV");

    auto* pipeline = app.add_subcommand("pipeline", "simulate, impute, ingest, fit, evaluate and diagnose");
    common(pipeline);
    sampler_opts(pipeline);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return 2;
    }
    log::set_level(quiet ? log::Level::Warn : log::Level::Info);

    try {
        KeyValues kv;
        if (!config_path.empty()) {
            kv = read_key_values(config_path);
        }
        for (const auto& [k, v] : overrides) {
            kv[k] = v;
        }
        const auto cfg = PipelineConfig::from_key_values(kv);
        const auto* sub = app.get_subcommands().front();
        const auto name = sub->get_name();
        if (name == "simulate") {
            run_simulate(cfg);
        } else if (name == "impute") {
            run_impute(cfg);
        } else if (name == "ingest") {
            run_ingest(cfg);
        } else if (name == "fit") {
            run_fit(cfg, uptake::model_from_name(model_name));
        } else if (name == "evaluate") {
            run_evaluate(cfg);
        } else if (name == "diagnose") {
            run_diagnose(cfg);
        } else {
            run_pipeline(cfg);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace popcal::cli
