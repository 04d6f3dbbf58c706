#pragma once

#include "popcal/geo/ingest.hpp"
#include "popcal/mcmc/target.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace popcal::impute {

/// Nighttime weekday record of one tile. An empty entry is censored.
struct TileHistory {
    std::string tile_id;
    std::vector<std::optional<long long>> counts;

    std::size_t n_entries() const { return counts.size(); }
    std::size_t n_observed() const;
    bool all_censored() const { return n_observed() == 0; }
    /// Throws DataError on an empty history or an observed value below
    /// the threshold.
    void validate(int threshold) const;
};

/// log P(U < k) for U ~ Poisson(lambda), summed in log space. k >= 1.
/// Returns 0 at lambda = 0 and -inf for lambda < 0.
double log_poisson_cdf_below(int k, double lambda);

/// Sum of log Poisson pmf over observed entries plus log P(U < threshold) per
/// censored entry. Non-positive lambda gives -inf.
double censored_poisson_loglik(const TileHistory& history, double lambda, int threshold);

/// Keeps entries in `window` (and on weekdays when `weekdays_only`), one
/// history per tile, tiles in first-seen order.
std::vector<TileHistory> build_histories(std::span<const geo::TileObservation> obs, int window,
                                         bool weekdays_only = true);

struct ImputationModelSpec {
    int censor_threshold = 10;
    double hyperprior_scale = 5.0;
    /// false: every lambda gets a fixed Exp(hyperprior_scale) prior and the
    /// tiles are fitted independently.
    bool hierarchical = true;
};

enum class Provenance { Observed, IndividualPosterior, GroupPosterior };
std::string_view provenance_name(Provenance p);

/// Poisson rates per tile with an exponential prior whose scale s has its
/// own exponential prior. Tiles with at least one observed entry get their
/// own rate; all-censored tiles share one rate per distinct history length.
/// Unconstrained coordinates are log s (hierarchical only) followed by the
/// log rates.
class ImputationModel final : public mcmc::TargetDensity {
public:
    ImputationModel(std::vector<TileHistory> histories, ImputationModelSpec spec);

    std::size_t dim() const override { return offset_ + rates_.size(); }
    double log_density_gradient(std::span<const double> q, std::span<double> grad) const override;
    std::vector<std::string> parameter_names() const override;
    void constrain(std::span<const double> q, std::span<double> out) const override;

    const ImputationModelSpec& spec() const { return spec_; }
    const std::vector<TileHistory>& histories() const { return histories_; }
    std::size_t rate_count() const { return rates_.size(); }
    std::size_t group_count() const { return group_count_; }

    /// Column of the tile's rate in the constrained draws, if the tile has a
    /// history.
    std::optional<std::size_t> rate_column(const std::string& tile_id) const;
    Provenance provenance(const std::string& tile_id) const;

private:
    // Sufficient statistics of the likelihood for one rate parameter.
    struct Rate {
        std::string name;
        double n_observed = 0.0;
        double sum_counts = 0.0;
        double sum_lgamma = 0.0;
        double n_censored = 0.0;
    };

    ImputationModelSpec spec_;
    std::vector<TileHistory> histories_;
    std::vector<Rate> rates_;
    std::map<std::string, std::size_t> tile_rate_;
    std::map<std::string, bool> tile_grouped_;
    std::size_t offset_ = 0;
    std::size_t group_count_ = 0;
};

} // namespace popcal::impute
