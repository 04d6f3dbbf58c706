#include "popcal/mcmc/target.hpp"

#include <algorithm>
#include <cmath>

namespace popcal::mcmc {

double TargetDensity::log_density(std::span<const double> q) const
{
    std::vector<double> g(dim());
    return log_density_gradient(q, g);
}

GradientCheck check_gradient(const TargetDensity& target, std::span<const double> q, double step)
{
    const std::size_t n = target.dim();
    std::vector<double> grad(n);
    target.log_density_gradient(q, grad);
    std::vector<double> x(q.begin(), q.end());
    GradientCheck out;
    for (std::size_t i = 0; i < n; ++i) {
        const double h = step * std::max(1.0, std::fabs(q[i]));
        auto f_at = [&](double offset) {
            x[i] = q[i] + offset;
            return target.log_density(x);
        };
        // Five-point central stencil.
        const double fd = (-f_at(2.0 * h) + 8.0 * f_at(h) - 8.0 * f_at(-h) + f_at(-2.0 * h)) / (12.0 * h);
        x[i] = q[i];
        const double err = std::fabs(grad[i] - fd) / std::max(1.0, std::fabs(fd));
        if (!(err <= out.max_relative_error)) {
            out.max_relative_error = err;
            out.worst_coordinate = i;
        }
    }
    return out;
}

} // namespace popcal::mcmc
