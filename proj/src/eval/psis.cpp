#include "popcal/eval/psis.hpp"

#include "popcal/common/csv.hpp"
#include "popcal/common/error.hpp"
#include "popcal/common/math.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace popcal::eval {

ParetoFit gpd_fit(std::span<const double> x)
{
    const std::size_t n = x.size();
    if (n < 2) {
        throw std::invalid_argument("Pareto fit needs at least two exceedances");
    }
    constexpr double prior = 3.0;
    constexpr std::size_t min_grid = 30;
    const std::size_t m = min_grid + static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
    const double nd = static_cast<double>(n);
    const double xstar = x[static_cast<std::size_t>(std::floor(nd / 4.0 + 0.5)) - 1];

    std::vector<double> theta(m);
    std::vector<double> l_theta(m);
    for (std::size_t j = 0; j < m; ++j) {
        theta[j] = 1.0 / x[n - 1] +
                   (1.0 - std::sqrt(static_cast<double>(m) / (static_cast<double>(j + 1) - 0.5))) / prior / xstar;
        double k = 0.0;
        for (double v : x) {
            k += std::log1p(-theta[j] * v);
        }
        k /= nd;
        l_theta[j] = nd * (std::log(-theta[j] / k) - k - 1.0);
    }
    const double norm = log_sum_exp(l_theta);
    double theta_hat = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        theta_hat += theta[j] * std::exp(l_theta[j] - norm);
    }
    double k = 0.0;
    for (double v : x) {
        k += std::log1p(-theta_hat * v);
    }
    k /= nd;
    ParetoFit fit;
    fit.sigma = -k / theta_hat;
    // Weakly informative shrinkage toward 0.5 worth 10 pseudo-observations.
    fit.k = (k * nd + 0.5 * 10.0) / (nd + 10.0);
    if (std::isnan(fit.k)) {
        fit.k = std::numeric_limits<double>::infinity();
    }
    return fit;
}

double gpd_quantile(double p, double k, double sigma)
{
    if (k == 0.0) {
        return -sigma * std::log1p(-p);
    }
    return sigma * std::expm1(-k * std::log1p(-p)) / k;
}

PsisResult psis_smooth(std::span<const double> log_ratios)
{
    const std::size_t s = log_ratios.size();
    if (s == 0) {
        throw std::invalid_argument("no importance ratios");
    }
    PsisResult out;
    const double max_lr = *std::max_element(log_ratios.begin(), log_ratios.end());
    std::vector<double> lw(s);
    for (std::size_t i = 0; i < s; ++i) {
        lw[i] = log_ratios[i] - max_lr;
    }
    out.pareto_k = -std::numeric_limits<double>::infinity();

    const auto tail_len = static_cast<std::size_t>(std::ceil(0.2 * static_cast<double>(s)));
    if (tail_len >= 5 && tail_len < s) {
        std::vector<std::size_t> order(s);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lw[a] < lw[b]; });
        const std::size_t first_tail = s - tail_len;
        const double tail_min = lw[order[first_tail]];
        const double tail_max = lw[order[s - 1]];
        if (std::fabs(tail_max - tail_min) >= std::numeric_limits<double>::epsilon() / 100.0) {
            const double cutoff = lw[order[first_tail - 1]];
            const double exp_cutoff = std::exp(cutoff);
            std::vector<double> exceed(tail_len);
            for (std::size_t i = 0; i < tail_len; ++i) {
                exceed[i] = std::exp(lw[order[first_tail + i]]) - exp_cutoff;
            }
            const auto fit = gpd_fit(exceed);
            out.pareto_k = fit.k;
            if (std::isfinite(fit.k)) {
                for (std::size_t i = 0; i < tail_len; ++i) {
                    const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(tail_len);
                    lw[order[first_tail + i]] = std::log(gpd_quantile(p, fit.k, fit.sigma) + exp_cutoff);
                }
            }
        }
    }
    // Never exceed the largest raw ratio.
    for (auto& v : lw) {
        v = std::min(v, 0.0);
    }
    const double norm = log_sum_exp(lw);
    for (auto& v : lw) {
        v -= norm;
    }
    out.log_normalizer = norm + max_lr;
    out.log_weights = std::move(lw);
    return out;
}

std::array<int, 3> LooResult::k_brackets() const
{
    std::array<int, 3> counts{0, 0, 0};
    for (double k : pareto_k) {
        if (k < 0.5) {
            ++counts[0];
        } else if (k <= 0.7) {
            ++counts[1];
        } else {
            ++counts[2];
        }
    }
    return counts;
}

LooResult psis_loo(const Eigen::MatrixXd& log_lik)
{
    if (!log_lik.allFinite()) {
        throw std::invalid_argument("log-likelihood matrix has non-finite entries");
    }
    const auto s = static_cast<std::size_t>(log_lik.rows());
    LooResult out;
    std::vector<double> ll(s);
    std::vector<double> neg(s);
    std::vector<double> tmp(s);
    for (Eigen::Index u = 0; u < log_lik.cols(); ++u) {
        for (std::size_t d = 0; d < s; ++d) {
            ll[d] = log_lik(static_cast<Eigen::Index>(d), u);
            neg[d] = -ll[d];
        }
        const auto w = psis_smooth(neg);
        for (std::size_t d = 0; d < s; ++d) {
            tmp[d] = w.log_weights[d] + ll[d];
        }
        out.elpd_i.push_back(log_sum_exp(tmp));
        out.pareto_k.push_back(w.pareto_k);
    }
    const double n = static_cast<double>(out.elpd_i.size());
    out.elpd = std::accumulate(out.elpd_i.begin(), out.elpd_i.end(), 0.0);
    if (out.elpd_i.size() > 1) {
        out.se = std::sqrt(n * sample_variance(out.elpd_i));
    }
    return out;
}

void write_loo_csv(const std::filesystem::path& path, std::span<const std::string> unit_ids, const LooResult& loo)
{
    if (unit_ids.size() != loo.elpd_i.size()) {
        throw std::invalid_argument("unit id count does not match LOO result");
    }
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    out << "unit_id,elpd_i,pareto_k\n";
    for (std::size_t i = 0; i < unit_ids.size(); ++i) {
        out << unit_ids[i] << ',' << csv::format_real(loo.elpd_i[i]) << ',' << csv::format_real(loo.pareto_k[i])
            << '\n';
    }
}

} // namespace popcal::eval
