#include "popcal/mcmc/draws.hpp"

#include "popcal/common/csv.hpp"
#include "popcal/common/error.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace popcal::mcmc {

PosteriorDraws::PosteriorDraws(std::vector<std::string> names, std::size_t chains, std::size_t iterations)
    : names_(std::move(names)), chains_(chains), iterations_(iterations),
      values_(chains * iterations * names_.size(), 0.0), divergent_(chains * iterations, 0)
{
}

std::optional<std::size_t> PosteriorDraws::find(std::string_view name) const
{
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - names_.begin());
}

std::size_t PosteriorDraws::index(std::string_view name) const
{
    if (auto i = find(name)) {
        return *i;
    }
    throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

std::vector<std::vector<double>> PosteriorDraws::by_chain(std::size_t param) const
{
    std::vector<std::vector<double>> out(chains_, std::vector<double>(iterations_));
    for (std::size_t c = 0; c < chains_; ++c) {
        for (std::size_t i = 0; i < iterations_; ++i) {
            out[c][i] = value(c, i, param);
        }
    }
    return out;
}

std::vector<double> PosteriorDraws::flat(std::size_t param) const
{
    std::vector<double> out;
    out.reserve(total_draws());
    for (std::size_t c = 0; c < chains_; ++c) {
        for (std::size_t i = 0; i < iterations_; ++i) {
            out.push_back(value(c, i, param));
        }
    }
    return out;
}

std::size_t PosteriorDraws::divergence_count() const
{
    return static_cast<std::size_t>(std::count(divergent_.begin(), divergent_.end(), 1));
}

void PosteriorDraws::write_csv(const std::filesystem::path& path) const
{
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    out << "chain,iteration";
    for (const auto& n : names_) {
        out << ',' << n;
    }
    out << '\n';
    for (std::size_t c = 0; c < chains_; ++c) {
        for (std::size_t i = 0; i < iterations_; ++i) {
            out << c + 1 << ',' << i + 1;
            for (double v : row(c, i)) {
                out << ',' << csv::format_real(v);
            }
            out << '\n';
        }
    }
}

PosteriorDraws PosteriorDraws::read_csv(const std::filesystem::path& path)
{
    const auto t = csv::Table::read(path);
    const auto c_chain = t.column("chain");
    const auto c_iter = t.column("iteration");
    const auto c_div = t.find_column("divergent");
    std::vector<std::string> names;
    std::vector<std::size_t> cols;
    for (std::size_t i = 0; i < t.header().size(); ++i) {
        if (i != c_chain && i != c_iter && (!c_div || i != *c_div)) {
            names.push_back(t.header()[i]);
            cols.push_back(i);
        }
    }
    long long max_chain = 0;
    long long max_iter = 0;
    for (const auto& row : t.rows()) {
        max_chain = std::max(max_chain, t.integer(row, c_chain));
        max_iter = std::max(max_iter, t.integer(row, c_iter));
    }
    if (max_chain < 1 || max_iter < 1 ||
        static_cast<std::size_t>(max_chain * max_iter) != t.rows().size()) {
        throw DataError(path.string() + ": draws are not a complete chain x iteration grid");
    }
    PosteriorDraws d(std::move(names), static_cast<std::size_t>(max_chain), static_cast<std::size_t>(max_iter));
    for (const auto& row : t.rows()) {
        const auto c = t.integer(row, c_chain);
        const auto i = t.integer(row, c_iter);
        if (c < 1 || i < 1) {
            t.fail(row, c_chain, "chain and iteration are 1-based");
        }
        auto r = d.row(static_cast<std::size_t>(c - 1), static_cast<std::size_t>(i - 1));
        for (std::size_t k = 0; k < cols.size(); ++k) {
            r[k] = t.real(row, cols[k]);
        }
        if (c_div) {
            d.set_divergent(static_cast<std::size_t>(c - 1), static_cast<std::size_t>(i - 1),
                            t.integer(row, *c_div) != 0);
        }
    }
    return d;
}

} // namespace popcal::mcmc
