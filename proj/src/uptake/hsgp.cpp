#include "popcal/uptake/hsgp.hpp"

#include "popcal/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace popcal::uptake {

HsgpDomain hsgp_domain(std::span<const double> xs, std::span<const double> ys, const HsgpSpec& spec)
{
    if (spec.n_basis < 1) {
        throw UsageError("basis count must be >= 1");
    }
    if (!(spec.boundary_factor > 1.0)) {
        throw UsageError("boundary factor must exceed 1");
    }
    double mx = 0.0;
    double my = 0.0;
    for (double x : xs) {
        mx = std::max(mx, std::fabs(x));
    }
    for (double y : ys) {
        my = std::max(my, std::fabs(y));
    }
    if (!(mx > 0.0) || !(my > 0.0)) {
        throw DataError("spatial coordinates are all zero");
    }
    return {spec.boundary_factor * mx, spec.boundary_factor * my};
}

double hsgp_eigenfunction(int j, double x, double l)
{
    return std::sin(std::numbers::pi * j * (x + l) / (2.0 * l)) / std::sqrt(l);
}

double hsgp_root(int j, double l) { return std::numbers::pi * j / (2.0 * l); }

double HsgpBasis::omega2(std::size_t m) const
{
    const auto n = static_cast<std::size_t>(n_basis);
    const double wx = root_x[m / n];
    const double wy = root_y[m % n];
    return wx * wx + wy * wy;
}

void hsgp_basis_row(double x, double y, int n_basis, const HsgpDomain& domain, std::span<double> out)
{
    if (std::fabs(x) > domain.lx || std::fabs(y) > domain.ly) {
        throw DataError("boundary violated");
    }
    std::vector<double> fy(static_cast<std::size_t>(n_basis));
    for (int k = 0; k < n_basis; ++k) {
        fy[static_cast<std::size_t>(k)] = hsgp_eigenfunction(k + 1, y, domain.ly);
    }
    std::size_t m = 0;
    for (int j = 0; j < n_basis; ++j) {
        const double fx = hsgp_eigenfunction(j + 1, x, domain.lx);
        for (int k = 0; k < n_basis; ++k) {
            out[m++] = fx * fy[static_cast<std::size_t>(k)];
        }
    }
}

HsgpBasis hsgp_basis(std::span<const double> xs, std::span<const double> ys, int n_basis, const HsgpDomain& domain)
{
    if (xs.size() != ys.size()) {
        throw std::invalid_argument("coordinate arrays differ in length");
    }
    HsgpBasis b;
    b.n_basis = n_basis;
    b.domain = domain;
    for (int j = 1; j <= n_basis; ++j) {
        b.root_x.push_back(hsgp_root(j, domain.lx));
        b.root_y.push_back(hsgp_root(j, domain.ly));
    }
    b.phi.resize(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(b.columns()));
    std::vector<double> row(b.columns());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        hsgp_basis_row(xs[i], ys[i], n_basis, domain, row);
        for (std::size_t m = 0; m < row.size(); ++m) {
            b.phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) = row[m];
        }
    }
    return b;
}

double matern32_spectral_density(double omega2, double sigma, double delta)
{
    constexpr double c = 6.0 * std::numbers::pi * 5.196152422706632; // 6 pi 3^(3/2)
    const double d2 = delta * delta;
    return sigma * sigma * c / (d2 * delta) * std::pow(3.0 / d2 + omega2, -2.5);
}

double matern32_kernel(double r, double sigma, double delta)
{
    const double a = std::sqrt(3.0) * r / delta;
    return sigma * sigma * (1.0 + a) * std::exp(-a);
}

Eigen::VectorXd hsgp_scales(const HsgpBasis& basis, double sigma, double delta)
{
    Eigen::VectorXd s(static_cast<Eigen::Index>(basis.columns()));
    for (std::size_t m = 0; m < basis.columns(); ++m) {
        s[static_cast<Eigen::Index>(m)] = std::sqrt(matern32_spectral_density(basis.omega2(m), sigma, delta));
    }
    return s;
}

Eigen::VectorXd hsgp_effect(const HsgpBasis& basis, double sigma, double delta, std::span<const double> z)
{
    if (z.size() != basis.columns()) {
        throw std::invalid_argument("basis weight count mismatch");
    }
    const Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
    return basis.phi * hsgp_scales(basis, sigma, delta).cwiseProduct(zv);
}

Eigen::MatrixXd hsgp_covariance(const HsgpBasis& basis, double sigma, double delta)
{
    const Eigen::VectorXd s = hsgp_scales(basis, sigma, delta);
    const Eigen::MatrixXd scaled = basis.phi * s.asDiagonal();
    return scaled * scaled.transpose();
}

} // namespace popcal::uptake
