#include "popcal/cli/config.hpp"

#include "popcal/common/error.hpp"
#include "popcal/common/csv.hpp"
#include "popcal/geo/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace popcal::cli {

namespace {

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& what)
{
    throw UsageError("config key '" + key + "': " + what + " (got '" + value + "')");
}

long long to_int(const std::string& key, const std::string& v)
{
    long long out = 0;
    const auto* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, out);
    if (r.ec != std::errc() || r.ptr != end) {
        bad(key, v, "expected an integer");
    }
    return out;
}

double to_real(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos != v.size()) {
            bad(key, v, "expected a number");
        }
        return out;
    } catch (const std::logic_error&) {
        bad(key, v, "expected a number");
    }
}

bool to_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "yes" || v == "1") {
        return true;
    }
    if (v == "false" || v == "no" || v == "0") {
        return false;
    }
    bad(key, v, "expected true or false");
}

int positive_int(const std::string& key, const std::string& v, long long min = 1)
{
    const auto x = to_int(key, v);
    if (x < min || x > 100000000) {
        bad(key, v, "expected an integer >= " + std::to_string(min));
    }
    return static_cast<int>(x);
}

std::chrono::year_month_day to_date(const std::string& key, const std::string& v)
{
    try {
        return geo::parse_date(v);
    } catch (const DataError&) {
        bad(key, v, "expected a YYYY-MM-DD date");
    }
}

std::string join(const std::vector<std::string>& xs)
{
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out += (i ? "," : "") + xs[i];
    }
    return out;
}

} // namespace

const std::vector<std::string>& known_keys()
{
    static const std::vector<std::string> keys{
        "out_dir",        "seed",           "threads",           "n_units",         "n_days",
        "censor_threshold", "start_date",   "tile_concentration", "reference_date", "window",
        "impute_hierarchical", "impute_compare", "land_weight",  "observations",    "tiles",
        "train_fraction", "units_geojson",  "attributes",        "counts",          "duc_raster",
        "population_raster", "radiance_raster", "models",        "basis",           "parameterization",
        "chains",         "warmup",         "samples",           "target_accept",   "max_tree_depth",
        "dataset",        "fit_dirs",       "basis_sweep",       "draws"};
    return keys;
}

KeyValues parse_key_values(std::istream& in, const std::string& source)
{
    KeyValues out;
    std::string line;
    std::size_t lineno = 0;
    const auto& keys = known_keys();
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.resize(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto where = source + ":" + std::to_string(lineno) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError(where + "expected 'key = value'");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw UsageError(where + "unknown key '" + key + "'");
        }
        if (!out.emplace(key, value).second) {
            throw UsageError(where + "duplicate key '" + key + "'");
        }
    }
    return out;
}

KeyValues read_key_values(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw UsageError("cannot open config '" + path.string() + "'");
    }
    return parse_key_values(in, path.string());
}

int parse_window(const std::string& s)
{
    if (s == "daytime" || s == "0") {
        return 0;
    }
    if (s == "evening" || s == "1") {
        return 1;
    }
    if (s == "nighttime" || s == "2") {
        return 2;
    }
    throw UsageError("window must be daytime, evening or nighttime (got '" + s + "')");
}

std::string window_name(int window)
{
    static const char* names[] = {"daytime", "evening", "nighttime"};
    if (window < 0 || window > 2) {
        throw UsageError("window index out of range");
    }
    return names[window];
}

PipelineConfig PipelineConfig::from_key_values(const KeyValues& kv)
{
    PipelineConfig c;
    for (const auto& [key, v] : kv) {
        if (key == "out_dir") {
            c.out_dir = v;
        } else if (key == "seed") {
            const auto s = to_int(key, v);
            if (s < 0) {
                bad(key, v, "expected a non-negative integer");
            }
            c.seed = static_cast<std::uint64_t>(s);
        } else if (key == "threads") {
            c.threads = positive_int(key, v, 0);
        } else if (key == "n_units") {
            c.n_units = positive_int(key, v, 3);
        } else if (key == "n_days") {
            c.n_days = positive_int(key, v);
        } else if (key == "censor_threshold") {
            c.censor_threshold = positive_int(key, v);
        } else if (key == "start_date") {
            c.start_date = to_date(key, v);
        } else if (key == "tile_concentration") {
            c.tile_concentration = to_real(key, v);
            if (!(c.tile_concentration > 0.0)) {
                bad(key, v, "expected a positive number");
            }
        } else if (key == "reference_date") {
            c.reference_date = to_date(key, v);
        } else if (key == "window") {
            c.window = parse_window(v);
        } else if (key == "impute_hierarchical") {
            c.impute_hierarchical = to_bool(key, v);
        } else if (key == "impute_compare") {
            c.impute_compare = to_bool(key, v);
        } else if (key == "land_weight") {
            if (v == "inhabited") {
                c.land_weight = impute::LandWeight::Inhabited;
            } else if (v == "land") {
                c.land_weight = impute::LandWeight::Land;
            } else {
                bad(key, v, "expected inhabited or land");
            }
        } else if (key == "observations") {
            c.observations = v;
        } else if (key == "tiles") {
            c.tiles = v;
        } else if (key == "train_fraction") {
            c.train_fraction = to_real(key, v);
            if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) {
                bad(key, v, "expected a fraction in (0, 1)");
            }
        } else if (key == "units_geojson") {
            c.units_geojson = v;
        } else if (key == "attributes") {
            c.attributes = v;
        } else if (key == "counts") {
            c.counts = v;
        } else if (key == "duc_raster") {
            c.duc_raster = v;
        } else if (key == "population_raster") {
            c.population_raster = v;
        } else if (key == "radiance_raster") {
            c.radiance_raster = v;
        } else if (key == "models") {
            c.models.clear();
            for (const auto& m : split_list(v)) {
                c.models.push_back(uptake::model_from_name(m));
            }
            if (c.models.empty()) {
                bad(key, v, "expected at least one model");
            }
        } else if (key == "basis") {
            c.basis = positive_int(key, v);
        } else if (key == "parameterization") {
            try {
                c.parameterization = uptake::parameterization_from_name(v);
            } catch (const UsageError&) {
                bad(key, v, "expected centered, noncentered or recentered");
            }
        } else if (key == "chains") {
            c.chains = positive_int(key, v);
        } else if (key == "warmup") {
            c.warmup = positive_int(key, v, 0);
        } else if (key == "samples") {
            c.samples = positive_int(key, v);
        } else if (key == "target_accept") {
            c.target_accept = to_real(key, v);
        } else if (key == "max_tree_depth") {
            c.max_tree_depth = positive_int(key, v);
        } else if (key == "dataset") {
            c.dataset = v;
        } else if (key == "fit_dirs") {
            c.fit_dirs.clear();
            for (const auto& p : split_list(v)) {
                c.fit_dirs.emplace_back(p);
            }
        } else if (key == "basis_sweep") {
            c.basis_sweep.clear();
            for (const auto& b : split_list(v)) {
                c.basis_sweep.push_back(positive_int(key, b));
            }
        } else if (key == "draws") {
            c.draws = v;
        } else {
            throw UsageError("unknown config key '" + key + "'");
        }
    }
    c.sampler(0).validate();
    return c;
}

KeyValues PipelineConfig::to_key_values() const
{
    KeyValues kv;
    kv["out_dir"] = out_dir.string();
    kv["seed"] = std::to_string(seed);
    kv["threads"] = std::to_string(threads);
    kv["n_units"] = std::to_string(n_units);
    kv["n_days"] = std::to_string(n_days);
    kv["censor_threshold"] = std::to_string(censor_threshold);
    kv["start_date"] = geo::format_date(start_date);
    kv["tile_concentration"] = csv::format_real(tile_concentration);
    kv["reference_date"] = geo::format_date(reference_date);
    kv["window"] = window_name(window);
    kv["impute_hierarchical"] = impute_hierarchical ? "true" : "false";
    kv["impute_compare"] = impute_compare ? "true" : "false";
    kv["land_weight"] = land_weight == impute::LandWeight::Inhabited ? "inhabited" : "land";
    kv["observations"] = observations.string();
    kv["tiles"] = tiles.string();
    kv["train_fraction"] = csv::format_real(train_fraction);
    kv["units_geojson"] = units_geojson.string();
    kv["attributes"] = attributes.string();
    kv["counts"] = counts.string();
    kv["duc_raster"] = duc_raster.string();
    kv["population_raster"] = population_raster.string();
    kv["radiance_raster"] = radiance_raster.string();
    std::vector<std::string> ms;
    for (auto m : models) {
        ms.emplace_back(uptake::model_name(m));
    }
    kv["models"] = join(ms);
    kv["basis"] = std::to_string(basis);
    kv["parameterization"] = std::string(uptake::parameterization_name(parameterization));
    kv["chains"] = std::to_string(chains);
    kv["warmup"] = std::to_string(warmup);
    kv["samples"] = std::to_string(samples);
    kv["target_accept"] = csv::format_real(target_accept);
    kv["max_tree_depth"] = std::to_string(max_tree_depth);
    kv["dataset"] = dataset.string();
    std::vector<std::string> fd;
    for (const auto& p : fit_dirs) {
        fd.push_back(p.string());
    }
    kv["fit_dirs"] = join(fd);
    std::vector<std::string> bs;
    for (int b : basis_sweep) {
        bs.push_back(std::to_string(b));
    }
    kv["basis_sweep"] = join(bs);
    kv["draws"] = draws.string();
    return kv;
}

mcmc::SamplerConfig PipelineConfig::sampler(std::uint64_t sampler_seed) const
{
    mcmc::SamplerConfig s;
    s.chains = chains;
    s.warmup_iters = warmup;
    s.sampling_iters = samples;
    s.seed = sampler_seed;
    s.target_accept = target_accept;
    s.max_tree_depth = max_tree_depth;
    s.threads = threads;
    return s;
}

} // namespace popcal::cli
