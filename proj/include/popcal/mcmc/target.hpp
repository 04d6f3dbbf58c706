#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace popcal::mcmc {

/// A differentiable log density on an unconstrained real vector. Any
/// change-of-variables Jacobian is already folded into the density.
/// Implementations must be safe to call concurrently from several chains.
class TargetDensity {
public:
    virtual ~TargetDensity() = default;

    virtual std::size_t dim() const = 0;

    /// Returns log p(q) up to a constant and writes d log p / dq into `grad`.
    virtual double log_density_gradient(std::span<const double> q, std::span<double> grad) const = 0;

    virtual double log_density(std::span<const double> q) const;

    /// Names of the constrained outputs written by constrain().
    virtual std::vector<std::string> parameter_names() const = 0;

    /// Maps an unconstrained point to the reported parameter values.
    virtual void constrain(std::span<const double> q, std::span<double> out) const = 0;
};

struct GradientCheck {
    double max_relative_error = 0.0;
    std::size_t worst_coordinate = 0;
};

/// Compares the analytic gradient with central differences at `q`. The
/// relative error per coordinate is |g - fd| / max(1, |fd|).
GradientCheck check_gradient(const TargetDensity& target, std::span<const double> q, double step = 1e-4);

} // namespace popcal::mcmc
