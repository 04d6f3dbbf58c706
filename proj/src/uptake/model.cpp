#include "popcal/uptake/model.hpp"

#include "popcal/common/error.hpp"
#include "popcal/common/math.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <cmath>
#include <limits>

namespace popcal::uptake {

namespace {

using NoThrow = boost::math::policies::policy<boost::math::policies::pole_error<boost::math::policies::ignore_error>,
                                              boost::math::policies::overflow_error<boost::math::policies::ignore_error>,
                                              boost::math::policies::evaluation_error<boost::math::policies::ignore_error>,
                                              boost::math::policies::promote_double<false>>;

double digamma(double x) { return boost::math::digamma(x, NoThrow()); }

constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace

std::string_view model_name(ModelKind k)
{
    switch (k) {
    case ModelKind::Bin:
        return "bin";
    case ModelKind::BetaBin:
        return "betabin";
    case ModelKind::Full:
        return "full";
    }
    return "unknown";
}

ModelKind model_from_name(std::string_view name)
{
    if (name == "bin") {
        return ModelKind::Bin;
    }
    if (name == "betabin") {
        return ModelKind::BetaBin;
    }
    if (name == "full") {
        return ModelKind::Full;
    }
    throw UsageError("unknown model kind '" + std::string(name) + "' (expected bin, betabin or full)");
}

std::string_view parameterization_name(Parameterization p)
{
    switch (p) {
    case Parameterization::Centered:
        return "centered";
    case Parameterization::NonCentered:
        return "noncentered";
    case Parameterization::Recentered:
        return "recentered";
    }
    return "unknown";
}

Parameterization parameterization_from_name(std::string_view name)
{
    for (auto p : {Parameterization::Centered, Parameterization::NonCentered, Parameterization::Recentered}) {
        if (name == parameterization_name(p)) {
            return p;
        }
    }
    throw UsageError("unknown parameterization '" + std::string(name) +
                     "' (expected centered, noncentered or recentered)");
}

UptakeModel::UptakeModel(const UptakeDataset& data, ModelOptions options) : options_(options), data_(data)
{
    data_.validate();
    train_ = data_.indices(Split::Train);
    if (train_.empty()) {
        throw DataError("no train units");
    }
    bool present[kDucCount] = {};
    bool trained[kDucCount] = {};
    for (const auto& u : data_.units) {
        present[duc_index(u.duc)] = true;
    }
    for (std::size_t i : train_) {
        trained[duc_index(data_.units[i].duc)] = true;
    }
    for (int d = 0; d < kDucCount; ++d) {
        if (present[d] && !trained[d]) {
            throw DataError("DUC '" + std::string(duc_name(kAllDucs[static_cast<std::size_t>(d)])) +
                            "' has no train units");
        }
    }
    for (const auto& u : data_.units) {
        log_choose_.push_back(log_choose(static_cast<double>(u.population), static_cast<double>(u.users)));
    }

    dim_ = options_.kind == ModelKind::Bin ? kRho : kRho + 3;
    if (options_.kind == ModelKind::Full) {
        std::vector<double> xs;
        std::vector<double> ys;
        for (const auto& u : data_.units) {
            xs.push_back(u.x);
            ys.push_back(u.y);
        }
        basis_all_ = hsgp_basis(xs, ys, options_.hsgp.n_basis, hsgp_domain(xs, ys, options_.hsgp));
        phi_train_.resize(static_cast<Eigen::Index>(train_.size()), basis_all_.phi.cols());
        for (std::size_t r = 0; r < train_.size(); ++r) {
            phi_train_.row(static_cast<Eigen::Index>(r)) = basis_all_.phi.row(static_cast<Eigen::Index>(train_[r]));
        }
        dim_ = z_index() + basis_all_.columns();
        train_mean_phi_ = Eigen::MatrixXd::Zero(kDucCount, phi_train_.cols());
    }
    double count[kDucCount] = {};
    for (std::size_t r = 0; r < train_.size(); ++r) {
        const auto& u = data_.units[train_[r]];
        const auto d = static_cast<std::size_t>(duc_index(u.duc));
        count[d] += 1.0;
        train_mean_w_[d] += u.working_age;
        train_mean_l_[d] += u.log_radiance;
        if (options_.kind == ModelKind::Full) {
            train_mean_phi_.row(static_cast<Eigen::Index>(d)) += phi_train_.row(static_cast<Eigen::Index>(r));
        }
    }
    for (std::size_t d = 0; d < kDucCount; ++d) {
        if (count[d] > 0.0) {
            train_mean_w_[d] /= count[d];
            train_mean_l_[d] /= count[d];
            if (options_.kind == ModelKind::Full) {
                train_mean_phi_.row(static_cast<Eigen::Index>(d)) /= count[d];
            }
        }
    }
}

std::size_t UptakeModel::basis_columns() const
{
    return options_.kind == ModelKind::Full ? basis_all_.columns() : 0;
}

std::vector<std::string> UptakeModel::parameter_names() const
{
    std::vector<std::string> n{"a_mu", "a_sigma", "b_w_sigma", "b_l_sigma"};
    for (const char* block : {"a", "b_w", "b_l"}) {
        for (int d = 1; d <= kDucCount; ++d) {
            n.push_back(std::string(block) + "[" + std::to_string(d) + "]");
        }
    }
    if (options_.kind == ModelKind::Bin) {
        return n;
    }
    for (int d = 1; d <= kDucCount; ++d) {
        n.push_back("rho[" + std::to_string(d) + "]");
    }
    if (options_.kind == ModelKind::Full) {
        n.emplace_back("sigma");
        n.emplace_back("delta");
        for (std::size_t m = 1; m <= basis_all_.columns(); ++m) {
            n.push_back("z[" + std::to_string(m) + "]");
        }
    }
    return n;
}

void UptakeModel::constrain(std::span<const double> q, std::span<double> out) const
{
    out[kAMu] = q[kAMu];
    const double a_sigma = std::exp(q[kASigma]);
    const double bw_sigma = std::exp(q[kBwSigma]);
    const double bl_sigma = std::exp(q[kBlSigma]);
    out[kASigma] = a_sigma;
    out[kBwSigma] = bw_sigma;
    out[kBlSigma] = bl_sigma;
    const bool nc = options_.parameterization == Parameterization::NonCentered;
    Eigen::VectorXd weights;
    if (options_.kind == ModelKind::Full) {
        const Eigen::Map<const Eigen::VectorXd> z(q.data() + z_index(),
                                                  static_cast<Eigen::Index>(basis_all_.columns()));
        weights = hsgp_scales(basis_all_, std::exp(q[sigma_index()]), std::exp(q[delta_index()])).cwiseProduct(z);
    }
    double a[kDucCount];
    intercepts(q, weights, a);
    for (std::size_t d = 0; d < kDucCount; ++d) {
        out[kA + d] = a[d];
        out[kBw + d] = nc ? bw_sigma * q[kBw + d] : q[kBw + d];
        out[kBl + d] = nc ? bl_sigma * q[kBl + d] : q[kBl + d];
    }
    if (options_.kind == ModelKind::Bin) {
        return;
    }
    for (std::size_t d = 0; d < kDucCount; ++d) {
        out[kRho + d] = inv_logit(q[kRho + d]);
    }
    if (options_.kind == ModelKind::Full) {
        out[sigma_index()] = std::exp(q[sigma_index()]);
        out[delta_index()] = std::exp(q[delta_index()]);
        for (std::size_t m = z_index(); m < dim_; ++m) {
            out[m] = q[m];
        }
    }
}

Coefficients UptakeModel::coefficients(std::span<const double> row) const
{
    Coefficients c;
    for (std::size_t d = 0; d < kDucCount; ++d) {
        c.a[d] = row[kA + d];
        c.b_w[d] = row[kBw + d];
        c.b_l[d] = row[kBl + d];
        c.rho[d] = options_.kind == ModelKind::Bin ? 0.0 : row[kRho + d];
    }
    if (options_.kind == ModelKind::Full) {
        c.sigma = row[sigma_index()];
        c.delta = row[delta_index()];
        const Eigen::Map<const Eigen::VectorXd> z(row.data() + z_index(),
                                                  static_cast<Eigen::Index>(basis_all_.columns()));
        c.spatial_weights = hsgp_scales(basis_all_, c.sigma, c.delta).cwiseProduct(z);
    }
    return c;
}

double UptakeModel::eta(const Coefficients& c, std::size_t unit) const
{
    const auto& u = data_.units[unit];
    const auto d = static_cast<std::size_t>(duc_index(u.duc));
    double e = c.a[d] + c.b_w[d] * u.working_age + c.b_l[d] * u.log_radiance;
    if (options_.kind == ModelKind::Full) {
        e += basis_all_.phi.row(static_cast<Eigen::Index>(unit)).dot(c.spatial_weights);
    }
    return e;
}

namespace {

// log BetaBin(k | n, alpha, beta) without the binomial coefficient.
double betabin_kernel(double k, double n, double alpha, double beta)
{
    return log_gamma(k + alpha) + log_gamma(n - k + beta) - log_gamma(n + alpha + beta) + log_gamma(alpha + beta) -
           log_gamma(alpha) - log_gamma(beta);
}

} // namespace

double UptakeModel::unit_log_likelihood(const Coefficients& c, std::size_t unit) const
{
    const auto& u = data_.units[unit];
    const double e = eta(c, unit);
    const double n = static_cast<double>(u.population);
    const double k = static_cast<double>(u.users);
    if (options_.kind == ModelKind::Bin) {
        return log_choose_[unit] + k * log_inv_logit(e) + (n - k) * log1m_inv_logit(e);
    }
    const double rho = c.rho[duc_index(u.duc)];
    const double phi = (1.0 - rho) / rho;
    const double p = inv_logit(e);
    return log_choose_[unit] + betabin_kernel(k, n, p * phi, (1.0 - p) * phi);
}

double UptakeModel::log_density_gradient(std::span<const double> q, std::span<double> grad) const
{
    return evaluate(q, grad, true, true);
}

double UptakeModel::log_prior(std::span<const double> q) const
{
    std::vector<double> g(dim_);
    return evaluate(q, g, true, false);
}

double UptakeModel::log_likelihood(std::span<const double> q) const
{
    std::vector<double> g(dim_);
    return evaluate(q, g, false, true);
}

void UptakeModel::intercepts(std::span<const double> q, const Eigen::VectorXd& weights, double* a) const
{
    const double a_sigma = std::exp(q[kASigma]);
    for (std::size_t d = 0; d < kDucCount; ++d) {
        switch (options_.parameterization) {
        case Parameterization::Centered:
            a[d] = q[kA + d];
            break;
        case Parameterization::NonCentered:
            a[d] = q[kAMu] + a_sigma * q[kA + d];
            break;
        case Parameterization::Recentered:
            a[d] = q[kA + d] - q[kBw + d] * train_mean_w_[d] - q[kBl + d] * train_mean_l_[d];
            if (weights.size() > 0) {
                a[d] -= train_mean_phi_.row(static_cast<Eigen::Index>(d)).dot(weights);
            }
            break;
        }
    }
}

double UptakeModel::evaluate(std::span<const double> q, std::span<double> grad, bool want_prior, bool want_lik) const
{
    std::fill(grad.begin(), grad.end(), 0.0);
    const bool nc = options_.parameterization == Parameterization::NonCentered;
    const bool overdispersed = options_.kind != ModelKind::Bin;
    const bool spatial = options_.kind == ModelKind::Full;

    const double a_mu = q[kAMu];
    const double a_sigma = std::exp(q[kASigma]);
    const double bw_sigma = std::exp(q[kBwSigma]);
    const double bl_sigma = std::exp(q[kBlSigma]);

    Eigen::VectorXd scales;
    Eigen::VectorXd weights;
    if (spatial) {
        scales = hsgp_scales(basis_all_, std::exp(q[sigma_index()]), std::exp(q[delta_index()]));
        const Eigen::Map<const Eigen::VectorXd> z(q.data() + z_index(),
                                                  static_cast<Eigen::Index>(basis_all_.columns()));
        weights = scales.cwiseProduct(z);
    }

    double a[kDucCount];
    double bw[kDucCount];
    double bl[kDucCount];
    intercepts(q, weights, a);
    for (std::size_t d = 0; d < kDucCount; ++d) {
        bw[d] = nc ? bw_sigma * q[kBw + d] : q[kBw + d];
        bl[d] = nc ? bl_sigma * q[kBl + d] : q[kBl + d];
    }

    double lp = 0.0;
    // Gradients with respect to the constrained a, b_w, b_l and the spatial
    // weights.
    double ga[kDucCount] = {};
    double gbw[kDucCount] = {};
    double gbl[kDucCount] = {};
    Eigen::VectorXd g_w;
    if (spatial) {
        g_w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis_all_.columns()));
    }

    if (want_prior) {
        lp += -0.5 * (a_mu + 4.0) * (a_mu + 4.0);
        grad[kAMu] += -(a_mu + 4.0);
        // Exp(1) scales on the log scale: -tau + log tau.
        for (std::size_t idx : {kASigma, kBwSigma, kBlSigma}) {
            const double tau = std::exp(q[idx]);
            lp += -tau + q[idx];
            grad[idx] += -tau + 1.0;
        }
        for (std::size_t d = 0; d < kDucCount; ++d) {
            if (nc) {
                for (std::size_t idx : {kA + d, kBw + d, kBl + d}) {
                    lp += -0.5 * q[idx] * q[idx];
                    grad[idx] += -q[idx];
                }
            } else {
                const double za = (a[d] - a_mu) / a_sigma;
                const double zw = bw[d] / bw_sigma;
                const double zl = bl[d] / bl_sigma;
                lp += -0.5 * (za * za + zw * zw + zl * zl) - q[kASigma] - q[kBwSigma] - q[kBlSigma];
                ga[d] += -za / a_sigma;
                grad[kAMu] += za / a_sigma;
                grad[kASigma] += za * za - 1.0;
                gbw[d] += -zw / bw_sigma;
                grad[kBwSigma] += zw * zw - 1.0;
                gbl[d] += -zl / bl_sigma;
                grad[kBlSigma] += zl * zl - 1.0;
            }
        }
        if (overdispersed) {
            // Beta(1, 3) on rho plus the logit Jacobian: 3 log(1 - rho) + log rho.
            for (std::size_t d = 0; d < kDucCount; ++d) {
                const double r = q[kRho + d];
                lp += 3.0 * log1m_inv_logit(r) + log_inv_logit(r);
                grad[kRho + d] += 1.0 - 4.0 * inv_logit(r);
            }
        }
        if (spatial) {
            const double ls = q[sigma_index()];
            const double sigma = std::exp(ls);
            lp += -0.5 * sigma * sigma + ls;
            grad[sigma_index()] += -sigma * sigma + 1.0;
            const double ld = q[delta_index()];
            lp += -0.5 * ld * ld;
            grad[delta_index()] += -ld;
            for (std::size_t m = z_index(); m < dim_; ++m) {
                lp += -0.5 * q[m] * q[m];
                grad[m] += -q[m];
            }
        }
    }

    if (want_lik) {
        double phi[kDucCount] = {};
        double lgamma_phi[kDucCount] = {};
        double digamma_phi[kDucCount] = {};
        double grho[kDucCount] = {}; // d loglik / d phi[u]
        if (overdispersed) {
            for (std::size_t d = 0; d < kDucCount; ++d) {
                phi[d] = std::exp(log1m_inv_logit(q[kRho + d]) - log_inv_logit(q[kRho + d]));
                lgamma_phi[d] = log_gamma(phi[d]);
                digamma_phi[d] = digamma(phi[d]);
            }
        }

        Eigen::VectorXd effect;
        Eigen::VectorXd g_eta;
        if (spatial) {
            effect = phi_train_ * weights;
            g_eta.resize(static_cast<Eigen::Index>(train_.size()));
        }

        for (std::size_t r = 0; r < train_.size(); ++r) {
            const std::size_t i = train_[r];
            const auto& u = data_.units[i];
            const auto d = static_cast<std::size_t>(duc_index(u.duc));
            const double n = static_cast<double>(u.population);
            const double k = static_cast<double>(u.users);
            double e = a[d] + bw[d] * u.working_age + bl[d] * u.log_radiance;
            if (spatial) {
                e += effect[static_cast<Eigen::Index>(r)];
            }
            const double p = inv_logit(e);
            double de = 0.0;
            if (!overdispersed) {
                lp += log_choose_[i] + k * log_inv_logit(e) + (n - k) * log1m_inv_logit(e);
                de = k - n * p;
            } else {
                const double ph = phi[d];
                const double alpha = p * ph;
                const double beta = (1.0 - p) * ph;
                if (!(alpha > 0.0 && beta > 0.0 && std::isfinite(ph))) {
                    return -kInf;
                }
                lp += log_choose_[i] + log_gamma(k + alpha) + log_gamma(n - k + beta) - log_gamma(n + ph) +
                      lgamma_phi[d] - log_gamma(alpha) - log_gamma(beta);
                const double common = digamma_phi[d] - digamma(n + ph);
                const double dalpha = digamma(k + alpha) - digamma(alpha) + common;
                const double dbeta = digamma(n - k + beta) - digamma(beta) + common;
                de = ph * p * (1.0 - p) * (dalpha - dbeta);
                grho[d] += p * dalpha + (1.0 - p) * dbeta;
            }
            ga[d] += de;
            gbw[d] += de * u.working_age;
            gbl[d] += de * u.log_radiance;
            if (spatial) {
                g_eta[static_cast<Eigen::Index>(r)] = de;
            }
        }

        if (overdispersed) {
            // phi = (1 - rho) / rho and d rho / d logit = rho (1 - rho), so
            // d phi / d logit = -phi.
            for (std::size_t d = 0; d < kDucCount; ++d) {
                grad[kRho + d] += -phi[d] * grho[d];
            }
        }
        if (spatial) {
            g_w += phi_train_.transpose() * g_eta;
        }
    }
    if (!std::isfinite(lp)) {
        return -kInf;
    }

    // Chain rule from constrained coefficients to the sampled coordinates.
    for (std::size_t d = 0; d < kDucCount; ++d) {
        switch (options_.parameterization) {
        case Parameterization::NonCentered:
            grad[kAMu] += ga[d];
            grad[kA + d] += ga[d] * a_sigma;
            grad[kASigma] += ga[d] * a_sigma * q[kA + d];
            grad[kBw + d] += gbw[d] * bw_sigma;
            grad[kBwSigma] += gbw[d] * bw_sigma * q[kBw + d];
            grad[kBl + d] += gbl[d] * bl_sigma;
            grad[kBlSigma] += gbl[d] * bl_sigma * q[kBl + d];
            break;
        case Parameterization::Centered:
            grad[kA + d] += ga[d];
            grad[kBw + d] += gbw[d];
            grad[kBl + d] += gbl[d];
            break;
        case Parameterization::Recentered:
            grad[kA + d] += ga[d];
            grad[kBw + d] += gbw[d] - ga[d] * train_mean_w_[d];
            grad[kBl + d] += gbl[d] - ga[d] * train_mean_l_[d];
            if (spatial) {
                g_w -= ga[d] * train_mean_phi_.row(static_cast<Eigen::Index>(d)).transpose();
            }
            break;
        }
    }
    if (spatial) {
        const double delta = std::exp(q[delta_index()]);
        const double d2 = delta * delta;
        double g_log_sigma = 0.0;
        double g_log_delta = 0.0;
        for (std::size_t m = 0; m < basis_all_.columns(); ++m) {
            const auto mi = static_cast<Eigen::Index>(m);
            const double contrib = g_w[mi] * weights[mi];
            grad[z_index() + m] += g_w[mi] * scales[mi];
            g_log_sigma += contrib;
            g_log_delta += contrib * 0.5 * (-3.0 + 15.0 / (3.0 + d2 * basis_all_.omega2(m)));
        }
        grad[sigma_index()] += g_log_sigma;
        grad[delta_index()] += g_log_delta;
    }
    return lp;
}

} // namespace popcal::uptake
