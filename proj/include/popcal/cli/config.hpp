#pragma once

#include "popcal/impute/impute.hpp"
#include "popcal/mcmc/nuts.hpp"
#include "popcal/uptake/model.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

namespace popcal::cli {

/// Raw key-value pairs: one `key = value` per line, `#` starts a comment.
using KeyValues = std::map<std::string, std::string>;

/// Throws UsageError "<source>:<line>: ..." on malformed lines, duplicate
/// keys or keys outside known_keys().
KeyValues parse_key_values(std::istream& in, const std::string& source);
KeyValues read_key_values(const std::filesystem::path& path);

/// Every accepted key, in documentation order.
const std::vector<std::string>& known_keys();

struct PipelineConfig {
    std::filesystem::path out_dir = "popcal_out";
    std::uint64_t seed = 1;
    int threads = 1;

    // simulate
    int n_units = 1200;
    int n_days = 151;
    int censor_threshold = 10;
    std::chrono::year_month_day start_date{std::chrono::year{2020}, std::chrono::month{3}, std::chrono::day{1}};
    double tile_concentration = 0.5;

    // impute
    std::chrono::year_month_day reference_date{std::chrono::year{2020}, std::chrono::month{5}, std::chrono::day{4}};
    int window = 2;
    bool impute_hierarchical = true;
    bool impute_compare = true;
    impute::LandWeight land_weight = impute::LandWeight::Inhabited;
    std::filesystem::path observations;
    std::filesystem::path tiles;

    // ingest
    double train_fraction = 0.8;
    std::filesystem::path units_geojson;
    std::filesystem::path attributes;
    std::filesystem::path counts;
    std::filesystem::path duc_raster;
    std::filesystem::path population_raster;
    std::filesystem::path radiance_raster;

    // fit
    std::vector<uptake::ModelKind> models{uptake::ModelKind::Bin, uptake::ModelKind::BetaBin,
                                          uptake::ModelKind::Full};
    int basis = 16;
    uptake::Parameterization parameterization = uptake::Parameterization::Recentered;
    int chains = 4;
    int warmup = 1000;
    int samples = 1000;
    double target_accept = 0.8;
    int max_tree_depth = 10;
    std::filesystem::path dataset;

    // evaluate / diagnose
    std::vector<std::filesystem::path> fit_dirs;
    std::vector<int> basis_sweep;
    std::filesystem::path draws;

    /// Overrides defaults with `kv`; throws UsageError on bad values.
    static PipelineConfig from_key_values(const KeyValues& kv);
    /// Canonical key-value form of every setting, for manifests.
    KeyValues to_key_values() const;

    mcmc::SamplerConfig sampler(std::uint64_t sampler_seed) const;
};

/// Window names: "daytime" (0), "evening" (1), "nighttime" (2); digits are
/// accepted as well.
int parse_window(const std::string& s);
std::string window_name(int window);

} // namespace popcal::cli
