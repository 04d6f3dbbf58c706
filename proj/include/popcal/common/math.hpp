#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace popcal {

inline double inv_logit(double x)
{
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// log(inv_logit(x)), stable in both tails.
inline double log_inv_logit(double x)
{
    return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

/// log(1 - inv_logit(x)).
inline double log1m_inv_logit(double x) { return log_inv_logit(-x); }

inline double log_sum_exp(double a, double b)
{
    if (a == -INFINITY) {
        return b;
    }
    if (b == -INFINITY) {
        return a;
    }
    const double m = a > b ? a : b;
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

double log_sum_exp(std::span<const double> xs);

/// log |Gamma(x)| without touching the global signgam, so it is safe to call
/// from concurrent chains.
double log_gamma(double x);

/// log C(n, k).
inline double log_choose(double n, double k) { return log_gamma(n + 1.0) - log_gamma(k + 1.0) - log_gamma(n - k + 1.0); }

double mean(std::span<const double> xs);

/// Median with the midpoint rule for even counts. Input need not be sorted.
double median(std::span<const double> xs);

/// Population (divide-by-n) standard deviation.
double population_sd(std::span<const double> xs);

/// Unbiased (divide-by-(n-1)) variance.
double sample_variance(std::span<const double> xs);

/// Linear-interpolation quantile (R type 7).
double quantile(std::span<const double> xs, double prob);

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
};

/// Narrowest interval spanning ceil(mass * n) sorted samples; the leftmost
/// one wins ties. Throws std::invalid_argument on an empty sample or a mass
/// outside (0, 1].
Interval highest_density_interval(std::span<const double> xs, double mass);

} // namespace popcal
