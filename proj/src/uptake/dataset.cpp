#include "popcal/uptake/dataset.hpp"

#include "popcal/common/csv.hpp"
#include "popcal/common/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace popcal::uptake {

std::string_view duc_name(Duc d)
{
    switch (d) {
    case Duc::Rural: return "rural";
    case Duc::PeriUrban: return "periurban";
    case Duc::Urban: return "urban";
    }
    return "unknown";
}

Duc duc_from_code(long long code)
{
    if (code < 1 || code > 3) {
        throw DataError("invalid DUC code " + std::to_string(code) + " (expected 1, 2 or 3)");
    }
    return static_cast<Duc>(code);
}

std::string_view split_name(Split s) { return s == Split::Train ? "train" : "test"; }

Split split_from_name(std::string_view s)
{
    if (s == "train") {
        return Split::Train;
    }
    if (s == "test") {
        return Split::Test;
    }
    throw DataError("invalid split '" + std::string(s) + "' (expected train or test)");
}

namespace {

nlohmann::json scaling_json(const ColumnScaling& c) { return {{"mean", c.mean}, {"sd", c.sd}}; }

ColumnScaling scaling_from(const nlohmann::json& j)
{
    return {j.at("mean").get<double>(), j.at("sd").get<double>()};
}

} // namespace

std::string Standardization::to_json() const
{
    nlohmann::json j;
    j["working_age"] = scaling_json(working_age);
    j["log_radiance"] = scaling_json(log_radiance);
    j["lon"] = scaling_json(lon);
    j["lat"] = scaling_json(lat);
    return j.dump(2);
}

Standardization Standardization::from_json(std::string_view text)
{
    try {
        const auto j = nlohmann::json::parse(text);
        Standardization s;
        s.working_age = scaling_from(j.at("working_age"));
        s.log_radiance = scaling_from(j.at("log_radiance"));
        s.lon = scaling_from(j.at("lon"));
        s.lat = scaling_from(j.at("lat"));
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed standardization sidecar: ") + e.what());
    }
}

std::vector<std::size_t> UptakeDataset::indices(Split s) const
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < units.size(); ++i) {
        if (units[i].split == s) {
            out.push_back(i);
        }
    }
    return out;
}

UptakeDataset UptakeDataset::subset(Split s) const
{
    UptakeDataset out;
    out.scaling = scaling;
    for (const auto& u : units) {
        if (u.split == s) {
            out.units.push_back(u);
        }
    }
    return out;
}

void UptakeDataset::validate() const
{
    for (const auto& u : units) {
        if (u.population < 1) {
            throw DataError("unit '" + u.unit_id + "': population must be >= 1");
        }
        if (u.users < 0 || u.users > u.population) {
            throw DataError("unit '" + u.unit_id + "': FB count " + std::to_string(u.users) +
                            " outside [0, N=" + std::to_string(u.population) + "]");
        }
        if (!std::isfinite(u.working_age) || !std::isfinite(u.log_radiance) || !std::isfinite(u.x) ||
            !std::isfinite(u.y)) {
            throw DataError("unit '" + u.unit_id + "': non-finite covariate");
        }
    }
}

std::filesystem::path scaling_path_for(const std::filesystem::path& dataset_csv)
{
    return std::filesystem::path(dataset_csv.string() + ".scaling.json");
}

void UptakeDataset::write_csv(const std::filesystem::path& path) const
{
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    out << "unit_id,duc,n,fb,w_std,logl_std,lon_std,lat_std,split\n";
    for (const auto& u : units) {
        out << u.unit_id << ',' << static_cast<int>(u.duc) << ',' << u.population << ',' << u.users << ','
            << csv::format_real(u.working_age) << ',' << csv::format_real(u.log_radiance) << ','
            << csv::format_real(u.x) << ',' << csv::format_real(u.y) << ',' << split_name(u.split) << '\n';
    }
}

void UptakeDataset::write_scaling(const std::filesystem::path& path) const
{
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    out << scaling.to_json() << '\n';
}

UptakeDataset UptakeDataset::read_csv(const std::filesystem::path& path)
{
    const auto table = csv::Table::read(path);
    const auto c_id = table.column("unit_id");
    const auto c_duc = table.column("duc");
    const auto c_n = table.column("n");
    const auto c_fb = table.column("fb");
    const auto c_w = table.column("w_std");
    const auto c_l = table.column("logl_std");
    const auto c_x = table.column("lon_std");
    const auto c_y = table.column("lat_std");
    const auto c_split = table.column("split");

    UptakeDataset ds;
    for (const auto& row : table.rows()) {
        UnitRecord u;
        u.unit_id = table.str(row, c_id);
        try {
            u.duc = duc_from_code(table.integer(row, c_duc));
        } catch (const DataError& e) {
            table.fail(row, c_duc, e.what());
        }
        u.population = table.integer(row, c_n);
        u.users = table.integer(row, c_fb);
        if (u.population < 1) {
            table.fail(row, c_n, "population must be >= 1");
        }
        if (u.users < 0 || u.users > u.population) {
            table.fail(row, c_fb, "must lie in [0, n]");
        }
        u.working_age = table.real(row, c_w);
        u.log_radiance = table.real(row, c_l);
        u.x = table.real(row, c_x);
        u.y = table.real(row, c_y);
        try {
            u.split = split_from_name(table.str(row, c_split));
        } catch (const DataError& e) {
            table.fail(row, c_split, e.what());
        }
        ds.units.push_back(std::move(u));
    }
    const auto sidecar = scaling_path_for(path);
    if (std::filesystem::exists(sidecar)) {
        std::ifstream in(sidecar);
        std::stringstream ss;
        ss << in.rdbuf();
        ds.scaling = Standardization::from_json(ss.str());
    }
    return ds;
}

} // namespace popcal::uptake
