#pragma once

#include "popcal/mcmc/target.hpp"
#include "popcal/uptake/dataset.hpp"
#include "popcal/uptake/hsgp.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace popcal::uptake {

enum class ModelKind { Bin, BetaBin, Full };
std::string_view model_name(ModelKind k);
/// Accepts "bin", "betabin" and "full"; throws UsageError otherwise.
ModelKind model_from_name(std::string_view name);

/// Sampling coordinates of the per-DUC coefficients. All three describe the
/// same posterior; the reported draws are always a, b_w, b_l.
///   Centered:    (a, b_w, b_l) directly.
///   NonCentered: standardized offsets from the group-level prior.
///   Recentered:  b_w, b_l and the intercept evaluated at the DUC's train
///                means of the covariates and basis functions,
///                a'[u] = a[u] + b_w[u] mean_u(W) + b_l[u] mean_u(log L)
///                        + mean_u(phi) . w,
///                which removes the intercept/slope/field-level ridge.
enum class Parameterization { Centered, NonCentered, Recentered };
std::string_view parameterization_name(Parameterization p);
/// Accepts "centered", "noncentered" and "recentered"; throws UsageError otherwise.
Parameterization parameterization_from_name(std::string_view name);

struct ModelOptions {
    ModelKind kind = ModelKind::Full;
    HsgpSpec hsgp;
    Parameterization parameterization = Parameterization::Recentered;
};

/// Coefficients of one posterior draw, unpacked from a constrained row.
struct Coefficients {
    double a[kDucCount] = {};
    double b_w[kDucCount] = {};
    double b_l[kDucCount] = {};
    double rho[kDucCount] = {};
    double sigma = 0.0;
    double delta = 0.0;
    Eigen::VectorXd spatial_weights; ///< sqrt(S) o z; empty without HSGP
};

/// Hierarchical logistic regression of users on population per DUC:
///   eta = a[u] + b_w[u] W + b_l[u] log L (+ HSGP spatial effect)
/// with binomial or mean/overdispersion beta-binomial likelihood.
///   a[u] ~ N(a_mu, a_sigma), b_w[u] ~ N(0, b_w_sigma), b_l[u] ~ N(0, b_l_sigma)
///   a_mu ~ N(-4, 1), scales ~ Exp(1), rho[u] ~ Beta(1, 3)
///   sigma ~ half-N(0, 1), delta ~ LogNormal(0, 1), z ~ N(0, 1)
/// Only train units enter the likelihood. The HSGP box is sized from every
/// unit so test units can be predicted.
class UptakeModel final : public mcmc::TargetDensity {
public:
    UptakeModel(const UptakeDataset& data, ModelOptions options);

    std::size_t dim() const override { return dim_; }
    double log_density_gradient(std::span<const double> q, std::span<double> grad) const override;
    std::vector<std::string> parameter_names() const override;
    void constrain(std::span<const double> q, std::span<double> out) const override;

    ModelKind kind() const { return options_.kind; }
    const ModelOptions& options() const { return options_; }
    const UptakeDataset& data() const { return data_; }
    const std::vector<std::size_t>& train_indices() const { return train_; }
    std::size_t basis_columns() const;

    Coefficients coefficients(std::span<const double> constrained_row) const;
    /// Linear predictor of dataset unit i.
    double eta(const Coefficients& c, std::size_t unit) const;
    /// log p(FB_i | N_i, draw), normalising constants included.
    double unit_log_likelihood(const Coefficients& c, std::size_t unit) const;

    /// Log-density split into its two parts, for tests.
    double log_prior(std::span<const double> q) const;
    double log_likelihood(std::span<const double> q) const;

    /// Offsets of the blocks in the unconstrained vector.
    static constexpr std::size_t kAMu = 0;
    static constexpr std::size_t kASigma = 1;
    static constexpr std::size_t kBwSigma = 2;
    static constexpr std::size_t kBlSigma = 3;
    static constexpr std::size_t kA = 4;
    static constexpr std::size_t kBw = 7;
    static constexpr std::size_t kBl = 10;
    static constexpr std::size_t kRho = 13;
    std::size_t sigma_index() const { return kRho + 3; }
    std::size_t delta_index() const { return kRho + 4; }
    std::size_t z_index() const { return kRho + 5; }

private:
    double evaluate(std::span<const double> q, std::span<double> grad, bool want_prior, bool want_lik) const;
    void intercepts(std::span<const double> q, const Eigen::VectorXd& weights, double* a) const;

    ModelOptions options_;
    UptakeDataset data_;
    std::vector<std::size_t> train_;
    std::size_t dim_ = 0;
    HsgpBasis basis_all_;        // every unit, dataset order
    Eigen::MatrixXd phi_train_;  // train rows only
    std::vector<double> log_choose_;
    double train_mean_w_[kDucCount] = {};
    double train_mean_l_[kDucCount] = {};
    Eigen::MatrixXd train_mean_phi_; // DUC x basis column, Full only
};

} // namespace popcal::uptake
