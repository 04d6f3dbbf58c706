#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace popcal::uptake {

struct HsgpSpec {
    int n_basis = 16;             ///< basis functions per dimension
    double boundary_factor = 2.5; ///< L = factor * max |coordinate|
};

/// Box half-widths for the Laplacian eigenbasis.
struct HsgpDomain {
    double lx = 1.0;
    double ly = 1.0;
};

HsgpDomain hsgp_domain(std::span<const double> xs, std::span<const double> ys, const HsgpSpec& spec);

/// phi_j(x) = sin(pi j (x + L) / (2L)) / sqrt(L), j = 1..n.
double hsgp_eigenfunction(int j, double x, double l);
/// sqrt(lambda_j) = pi j / (2L).
double hsgp_root(int j, double l);

/// Tensor-product basis. Column j * n + k (zero-based j, k) is
/// phi_{j+1}(x) phi_{k+1}(y); its frequency is (root_x[j], root_y[k]).
struct HsgpBasis {
    int n_basis = 0;
    HsgpDomain domain;
    Eigen::MatrixXd phi;
    std::vector<double> root_x;
    std::vector<double> root_y;

    std::size_t columns() const { return static_cast<std::size_t>(n_basis) * static_cast<std::size_t>(n_basis); }
    /// Squared norm of the frequency vector of column m.
    double omega2(std::size_t m) const;
};

/// Throws DataError "boundary violated" if a point leaves the box.
HsgpBasis hsgp_basis(std::span<const double> xs, std::span<const double> ys, int n_basis, const HsgpDomain& domain);

/// Basis row for one point, written into `out` (length n_basis^2).
void hsgp_basis_row(double x, double y, int n_basis, const HsgpDomain& domain, std::span<double> out);

/// Two-dimensional Matern-3/2 spectral density at squared frequency omega2.
double matern32_spectral_density(double omega2, double sigma, double delta);

/// k(r) = sigma^2 (1 + sqrt(3) r / delta) exp(-sqrt(3) r / delta).
double matern32_kernel(double r, double sigma, double delta);

/// sqrt of the spectral density per basis column.
Eigen::VectorXd hsgp_scales(const HsgpBasis& basis, double sigma, double delta);

/// Phi (s o z).
Eigen::VectorXd hsgp_effect(const HsgpBasis& basis, double sigma, double delta, std::span<const double> z);

/// Phi diag(S) Phi^T, the covariance implied by the approximation.
Eigen::MatrixXd hsgp_covariance(const HsgpBasis& basis, double sigma, double delta);

} // namespace popcal::uptake
