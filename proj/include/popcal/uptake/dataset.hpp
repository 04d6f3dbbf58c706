#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace popcal::uptake {

/// Degree of urbanisation; the integer codes are the ones used in every file.
enum class Duc : int { Rural = 1, PeriUrban = 2, Urban = 3 };

inline constexpr int kDucCount = 3;
inline constexpr std::array<Duc, kDucCount> kAllDucs{Duc::Rural, Duc::PeriUrban, Duc::Urban};

inline int duc_index(Duc d) { return static_cast<int>(d) - 1; }
std::string_view duc_name(Duc d);
Duc duc_from_code(long long code);

enum class Split { Train, Test };

std::string_view split_name(Split s);
Split split_from_name(std::string_view s);

/// One administrative unit, covariates already standardized.
struct UnitRecord {
    std::string unit_id;
    Duc duc = Duc::Rural;
    long long population = 0;
    long long users = 0;
    double working_age = 0.0;  ///< standardized working-age proportion
    double log_radiance = 0.0; ///< standardized log nighttime radiance
    double x = 0.0;            ///< standardized centroid longitude
    double y = 0.0;            ///< standardized centroid latitude
    Split split = Split::Train;

    double rate() const { return static_cast<double>(users) / static_cast<double>(population); }
};

struct ColumnScaling {
    double mean = 0.0;
    double sd = 1.0;

    double apply(double v) const { return (v - mean) / sd; }
};

/// Train-set standardization constants, one per covariate column.
struct Standardization {
    ColumnScaling working_age;
    ColumnScaling log_radiance;
    ColumnScaling lon;
    ColumnScaling lat;

    std::string to_json() const;
    static Standardization from_json(std::string_view text);
};

/// Model-ready table. Column order in CSV form:
/// unit_id, duc, n, fb, w_std, logl_std, lon_std, lat_std, split
struct UptakeDataset {
    std::vector<UnitRecord> units;
    Standardization scaling;

    std::vector<std::size_t> indices(Split s) const;
    UptakeDataset subset(Split s) const;

    /// Throws DataError on FB > N, N < 1, or non-finite covariates.
    void validate() const;

    void write_csv(const std::filesystem::path& path) const;
    void write_scaling(const std::filesystem::path& path) const;
    /// Reads the dataset; the scaling sidecar is loaded when present.
    static UptakeDataset read_csv(const std::filesystem::path& path);
};

/// Sidecar path convention: "<dataset>.scaling.json".
std::filesystem::path scaling_path_for(const std::filesystem::path& dataset_csv);

} // namespace popcal::uptake
