#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace popcal::mcmc {

/// Post-warmup draws on the constrained scale, stored chain-major:
/// value(chain, iteration, parameter).
class PosteriorDraws {
public:
    PosteriorDraws() = default;
    PosteriorDraws(std::vector<std::string> names, std::size_t chains, std::size_t iterations);

    std::size_t chains() const { return chains_; }
    std::size_t iterations() const { return iterations_; }
    std::size_t num_params() const { return names_.size(); }
    std::size_t total_draws() const { return chains_ * iterations_; }
    const std::vector<std::string>& names() const { return names_; }

    std::optional<std::size_t> find(std::string_view name) const;
    /// Throws std::out_of_range naming the parameter when absent.
    std::size_t index(std::string_view name) const;

    double value(std::size_t chain, std::size_t iter, std::size_t param) const
    {
        return values_[offset(chain, iter) + param];
    }
    std::span<double> row(std::size_t chain, std::size_t iter)
    {
        return {values_.data() + offset(chain, iter), names_.size()};
    }
    std::span<const double> row(std::size_t chain, std::size_t iter) const
    {
        return {values_.data() + offset(chain, iter), names_.size()};
    }
    /// Row by flat draw index d = chain * iterations + iteration.
    std::span<const double> row(std::size_t draw) const { return row(draw / iterations_, draw % iterations_); }

    /// One vector per chain for a single parameter.
    std::vector<std::vector<double>> by_chain(std::size_t param) const;
    /// All draws of one parameter, chains concatenated.
    std::vector<double> flat(std::size_t param) const;

    bool divergent(std::size_t chain, std::size_t iter) const { return divergent_[chain * iterations_ + iter] != 0; }
    void set_divergent(std::size_t chain, std::size_t iter, bool d) { divergent_[chain * iterations_ + iter] = d; }
    std::size_t divergence_count() const;

    /// CSV with columns: chain, iteration (both 1-based), then one per
    /// parameter. Divergence flags are not part of the file; an optional
    /// "divergent" column is honoured on read.
    void write_csv(const std::filesystem::path& path) const;
    static PosteriorDraws read_csv(const std::filesystem::path& path);

private:
    std::size_t offset(std::size_t chain, std::size_t iter) const
    {
        return (chain * iterations_ + iter) * names_.size();
    }

    std::vector<std::string> names_;
    std::size_t chains_ = 0;
    std::size_t iterations_ = 0;
    std::vector<double> values_;
    std::vector<char> divergent_;
};

} // namespace popcal::mcmc
