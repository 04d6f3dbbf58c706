#pragma once

#include "popcal/cli/config.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace popcal::cli {

/// Lower-case hex SHA-256 of the file contents.
std::string sha256_file(const std::filesystem::path& path);

/// Record of one command run. Holds no timestamps so reruns with the same
/// inputs and seed produce identical manifests.
struct Manifest {
    std::string command;
    KeyValues config;
    std::vector<std::filesystem::path> inputs;
    std::vector<std::filesystem::path> outputs;

    nlohmann::json to_json() const;
    /// Writes <dir>/manifest.json.
    void write(const std::filesystem::path& dir) const;
};

} // namespace popcal::cli
