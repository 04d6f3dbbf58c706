#include "popcal/common/math.hpp"

#include "popcal/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace popcal {

double log_gamma(double x)
{
    int sign = 0;
    return ::lgamma_r(x, &sign);
}

double log_sum_exp(std::span<const double> xs)
{
    if (xs.empty()) {
        return -INFINITY;
    }
    const double m = *std::max_element(xs.begin(), xs.end());
    if (!std::isfinite(m)) {
        return m;
    }
    double s = 0.0;
    for (double x : xs) {
        s += std::exp(x - m);
    }
    return m + std::log(s);
}

double mean(std::span<const double> xs)
{
    if (xs.empty()) {
        throw std::invalid_argument("mean of empty sample");
    }
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double median(std::span<const double> xs)
{
    if (xs.empty()) {
        throw std::invalid_argument("median of empty sample");
    }
    std::vector<double> v(xs.begin(), xs.end());
    const std::size_t n = v.size();
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (n % 2 == 1) {
        return *mid;
    }
    const double upper = *mid;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

double population_sd(std::span<const double> xs)
{
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - m) * (x - m);
    }
    return std::sqrt(ss / static_cast<double>(xs.size()));
}

double sample_variance(std::span<const double> xs)
{
    if (xs.size() < 2) {
        throw std::invalid_argument("variance needs at least two values");
    }
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - m) * (x - m);
    }
    return ss / static_cast<double>(xs.size() - 1);
}

double quantile(std::span<const double> xs, double prob)
{
    if (xs.empty()) {
        throw std::invalid_argument("quantile of empty sample");
    }
    std::vector<double> v(xs.begin(), xs.end());
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Interval highest_density_interval(std::span<const double> xs, double mass)
{
    if (xs.empty()) {
        throw std::invalid_argument("interval of empty sample");
    }
    if (!(mass > 0.0 && mass <= 1.0)) {
        throw std::invalid_argument("interval mass must lie in (0, 1]");
    }
    std::vector<double> v(xs.begin(), xs.end());
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n) - 1e-9)));
    std::size_t best = 0;
    for (std::size_t i = 1; i + w <= n; ++i) {
        if (v[i + w - 1] - v[i] < v[best + w - 1] - v[best]) {
            best = i;
        }
    }
    return {v[best], v[best + w - 1]};
}

} // namespace popcal
