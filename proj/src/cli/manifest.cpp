#include "popcal/cli/manifest.hpp"

#include "popcal/common/error.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

namespace popcal::cli {

std::string sha256_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 initialisation failed");
    }
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) {
            EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
        }
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}

nlohmann::json Manifest::to_json() const
{
    auto files = [](const std::vector<std::filesystem::path>& paths) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& p : paths) {
            arr.push_back({{"path", p.generic_string()}, {"sha256", sha256_file(p)}});
        }
        return arr;
    };
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [k, v] : config) {
        cfg[k] = v;
    }
    return {{"tool", "popcal"},  {"version", POPCAL_VERSION}, {"command", command},
            {"config", cfg},     {"inputs", files(inputs)},   {"outputs", files(outputs)}};
}

void Manifest::write(const std::filesystem::path& dir) const
{
    const auto path = dir / "manifest.json";
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    out << to_json().dump(2) << '\n';
}

} // namespace popcal::cli
