#pragma once

#include "popcal/common/math.hpp"

#include <cmath>

namespace popcal::mcmc {

// Each transform maps an unconstrained u to a constrained value and reports
// log |d value / du| together with its derivative in u, so that targets can
// add both to their log density and gradient.

struct Transformed {
    double value = 0.0;
    double log_jacobian = 0.0;
    double dlog_jacobian = 0.0; // d log_jacobian / du
    double dvalue = 0.0;        // d value / du
};

/// value = exp(u) > 0.
inline Transformed positive(double u)
{
    const double v = std::exp(u);
    return {v, u, 1.0, v};
}

/// value = inv_logit(u) in (0, 1).
inline Transformed unit_interval(double u)
{
    const double v = inv_logit(u);
    return {v, log_inv_logit(u) + log1m_inv_logit(u), 1.0 - 2.0 * v, v * (1.0 - v)};
}

} // namespace popcal::mcmc
