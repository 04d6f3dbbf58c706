#pragma once

#include "popcal/mcmc/target.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace popcal::testing {

/// Independent normals with given means and sds.
class NormalTarget final : public mcmc::TargetDensity {
public:
    NormalTarget(std::vector<double> mu, std::vector<double> sd) : mu_(std::move(mu)), sd_(std::move(sd)) {}
    std::size_t dim() const override { return mu_.size(); }
    double log_density_gradient(std::span<const double> q, std::span<double> g) const override
    {
        double lp = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            const double z = (q[i] - mu_[i]) / sd_[i];
            lp -= 0.5 * z * z;
            g[i] = -z / sd_[i];
        }
        return lp;
    }
    std::vector<std::string> parameter_names() const override
    {
        std::vector<std::string> n;
        for (std::size_t i = 0; i < mu_.size(); ++i) {
            n.push_back("x[" + std::to_string(i + 1) + "]");
        }
        return n;
    }
    void constrain(std::span<const double> q, std::span<double> out) const override
    {
        std::copy(q.begin(), q.end(), out.begin());
    }

private:
    std::vector<double> mu_;
    std::vector<double> sd_;
};

/// Exponential with the given scale, sampled as u = log(x).
class ExpScaleTarget final : public mcmc::TargetDensity {
public:
    explicit ExpScaleTarget(double scale) : scale_(scale) {}
    std::size_t dim() const override { return 1; }
    double log_density_gradient(std::span<const double> q, std::span<double> g) const override
    {
        const double x = std::exp(q[0]);
        g[0] = -x / scale_ + 1.0;
        return -x / scale_ + q[0];
    }
    std::vector<std::string> parameter_names() const override { return {"x"}; }
    void constrain(std::span<const double> q, std::span<double> out) const override { out[0] = std::exp(q[0]); }

private:
    double scale_;
};

/// Bivariate normal, zero mean, unit variances, correlation r.
class CorrelatedTarget final : public mcmc::TargetDensity {
public:
    CorrelatedTarget(double sd1, double sd2, double r) : s1_(sd1), s2_(sd2), r_(r) {}
    std::size_t dim() const override { return 2; }
    double log_density_gradient(std::span<const double> q, std::span<double> g) const override
    {
        const double a = q[0] / s1_;
        const double b = q[1] / s2_;
        const double c = 1.0 / (1.0 - r_ * r_);
        g[0] = -c * (a - r_ * b) / s1_;
        g[1] = -c * (b - r_ * a) / s2_;
        return -0.5 * c * (a * a - 2.0 * r_ * a * b + b * b);
    }
    std::vector<std::string> parameter_names() const override { return {"x", "y"}; }
    void constrain(std::span<const double> q, std::span<double> out) const override
    {
        out[0] = q[0];
        out[1] = q[1];
    }
    double cov(int i, int j) const
    {
        const double s[2] = {s1_, s2_};
        return i == j ? s[i] * s[i] : r_ * s1_ * s2_;
    }

private:
    double s1_, s2_, r_;
};

class EmptyTarget final : public mcmc::TargetDensity {
public:
    std::size_t dim() const override { return 0; }
    double log_density_gradient(std::span<const double>, std::span<double>) const override { return 0.0; }
    std::vector<std::string> parameter_names() const override { return {}; }
    void constrain(std::span<const double>, std::span<double>) const override {}
};

/// Finite nowhere: initialization must give up.
class NowhereTarget final : public mcmc::TargetDensity {
public:
    std::size_t dim() const override { return 1; }
    double log_density_gradient(std::span<const double>, std::span<double> g) const override
    {
        g[0] = 0.0;
        return -INFINITY;
    }
    std::vector<std::string> parameter_names() const override { return {"x"}; }
    void constrain(std::span<const double> q, std::span<double> out) const override { out[0] = q[0]; }
};

} // namespace popcal::testing
