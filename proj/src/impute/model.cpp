#include "popcal/impute/model.hpp"

#include "popcal/common/error.hpp"
#include "popcal/common/math.hpp"

#include <cmath>
#include <limits>

namespace popcal::impute {

std::size_t TileHistory::n_observed() const
{
    std::size_t n = 0;
    for (const auto& c : counts) {
        n += c.has_value() ? 1 : 0;
    }
    return n;
}

void TileHistory::validate(int threshold) const
{
    if (counts.empty()) {
        throw DataError("tile '" + tile_id + "': empty history");
    }
    for (const auto& c : counts) {
        if (c && *c < threshold) {
            throw DataError("tile '" + tile_id + "': observed count " + std::to_string(*c) +
                            " is below the censoring threshold");
        }
    }
}

double log_poisson_cdf_below(int k, double lambda)
{
    if (k < 1) {
        throw std::invalid_argument("censoring threshold must be >= 1");
    }
    if (lambda < 0.0 || std::isnan(lambda)) {
        return -std::numeric_limits<double>::infinity();
    }
    if (lambda == 0.0) {
        return 0.0;
    }
    const double log_lambda = std::log(lambda);
    if (lambda < 0.5 * k) {
        // Upper tail sum from j = k keeps full relative precision when
        // P(U < k) is within rounding of 1.
        double term = static_cast<double>(k) * log_lambda - lambda - log_gamma(static_cast<double>(k) + 1.0);
        double tail = 0.0;
        double t = std::exp(term);
        for (int j = k; t > tail * 1e-18; ++j) {
            tail += t;
            t *= lambda / static_cast<double>(j + 1);
        }
        return std::log1p(-tail);
    }
    double acc = -lambda; // j = 0
    double term = -lambda;
    for (int j = 1; j < k; ++j) {
        term += log_lambda - std::log(static_cast<double>(j));
        acc = log_sum_exp(acc, term);
    }
    return acc;
}

double censored_poisson_loglik(const TileHistory& history, double lambda, int threshold)
{
    if (!(lambda > 0.0)) {
        return -std::numeric_limits<double>::infinity();
    }
    const double log_lambda = std::log(lambda);
    const double log_cens = log_poisson_cdf_below(threshold, lambda);
    double ll = 0.0;
    for (const auto& c : history.counts) {
        if (c) {
            const double u = static_cast<double>(*c);
            ll += u * log_lambda - lambda - log_gamma(u + 1.0);
        } else {
            ll += log_cens;
        }
    }
    return ll;
}

std::vector<TileHistory> build_histories(std::span<const geo::TileObservation> obs, int window, bool weekdays_only)
{
    std::vector<TileHistory> out;
    std::map<std::string, std::size_t> index;
    for (const auto& o : obs) {
        if (o.window != window || (weekdays_only && !geo::is_weekday(o.date))) {
            continue;
        }
        auto [it, inserted] = index.try_emplace(o.tile_id, out.size());
        if (inserted) {
            out.push_back({o.tile_id, {}});
        }
        out[it->second].counts.push_back(o.count);
    }
    return out;
}

std::string_view provenance_name(Provenance p)
{
    switch (p) {
    case Provenance::Observed:
        return "observed";
    case Provenance::IndividualPosterior:
        return "individual-posterior";
    case Provenance::GroupPosterior:
        return "group-posterior";
    }
    return "unknown";
}

ImputationModel::ImputationModel(std::vector<TileHistory> histories, ImputationModelSpec spec)
    : spec_(spec), histories_(std::move(histories))
{
    if (spec_.censor_threshold < 1) {
        throw UsageError("censor threshold must be >= 1");
    }
    if (!(spec_.hyperprior_scale > 0.0)) {
        throw UsageError("hyperprior scale must be positive");
    }
    if (histories_.empty()) {
        throw DataError("no tile histories to fit");
    }
    offset_ = spec_.hierarchical ? 1 : 0;
    std::map<std::size_t, std::size_t> group_rate; // n_entries -> rate index
    for (const auto& h : histories_) {
        h.validate(spec_.censor_threshold);
        if (tile_rate_.count(h.tile_id)) {
            throw DataError("tile '" + h.tile_id + "' has two histories");
        }
        if (h.all_censored()) {
            auto [it, inserted] = group_rate.try_emplace(h.n_entries(), rates_.size());
            if (inserted) {
                Rate r;
                r.name = "lambda_group[" + std::to_string(h.n_entries()) + "]";
                r.n_censored = static_cast<double>(h.n_entries());
                rates_.push_back(r);
                ++group_count_;
            }
            tile_rate_[h.tile_id] = it->second;
            tile_grouped_[h.tile_id] = true;
            continue;
        }
        Rate r;
        r.name = "lambda[" + h.tile_id + "]";
        for (const auto& c : h.counts) {
            if (c) {
                const double u = static_cast<double>(*c);
                r.n_observed += 1.0;
                r.sum_counts += u;
                r.sum_lgamma += log_gamma(u + 1.0);
            } else {
                r.n_censored += 1.0;
            }
        }
        tile_rate_[h.tile_id] = rates_.size();
        tile_grouped_[h.tile_id] = false;
        rates_.push_back(r);
    }
}

double ImputationModel::log_density_gradient(std::span<const double> q, std::span<double> grad) const
{
    const int k = spec_.censor_threshold;
    const double hyper = spec_.hyperprior_scale;
    double lp = 0.0;
    double s = hyper;
    double log_s = std::log(hyper);
    double grad_log_s = 0.0;
    if (spec_.hierarchical) {
        log_s = q[0];
        s = std::exp(log_s);
        // s ~ Exp(scale hyper), sampled on the log scale.
        lp += -s / hyper - std::log(hyper) + log_s;
        grad_log_s = -s / hyper + 1.0;
    }
    const double log_pmf_top_norm = -log_gamma(static_cast<double>(k)); // -log((k-1)!)
    for (std::size_t r = 0; r < rates_.size(); ++r) {
        const Rate& rate = rates_[r];
        const double u = q[offset_ + r];
        const double lambda = std::exp(u);
        // Prior lambda | s ~ Exp(scale s) plus log Jacobian u.
        lp += -log_s - lambda / s + u;
        double g = -lambda / s + 1.0;
        if (spec_.hierarchical) {
            grad_log_s += -1.0 + lambda / s;
        }
        // Likelihood from sufficient statistics.
        lp += rate.sum_counts * u - rate.n_observed * lambda - rate.sum_lgamma;
        double dll = rate.sum_counts / lambda - rate.n_observed;
        if (rate.n_censored > 0.0) {
            const double log_f = log_poisson_cdf_below(k, lambda);
            lp += rate.n_censored * log_f;
            const double log_pmf_top = static_cast<double>(k - 1) * u - lambda + log_pmf_top_norm;
            dll -= rate.n_censored * std::exp(log_pmf_top - log_f);
        }
        g += dll * lambda;
        grad[offset_ + r] = g;
    }
    if (spec_.hierarchical) {
        grad[0] = grad_log_s;
    }
    return lp;
}

std::vector<std::string> ImputationModel::parameter_names() const
{
    std::vector<std::string> names;
    if (spec_.hierarchical) {
        names.emplace_back("s");
    }
    for (const auto& r : rates_) {
        names.push_back(r.name);
    }
    return names;
}

void ImputationModel::constrain(std::span<const double> q, std::span<double> out) const
{
    for (std::size_t i = 0; i < dim(); ++i) {
        out[i] = std::exp(q[i]);
    }
}

std::optional<std::size_t> ImputationModel::rate_column(const std::string& tile_id) const
{
    const auto it = tile_rate_.find(tile_id);
    if (it == tile_rate_.end()) {
        return std::nullopt;
    }
    return offset_ + it->second;
}

Provenance ImputationModel::provenance(const std::string& tile_id) const
{
    const auto it = tile_grouped_.find(tile_id);
    if (it == tile_grouped_.end()) {
        throw DataError("unmatched tile '" + tile_id + "'");
    }
    return it->second ? Provenance::GroupPosterior : Provenance::IndividualPosterior;
}

} // namespace popcal::impute
