#include "popcal/mcmc/nuts.hpp"

#include "popcal/common/error.hpp"
#include "popcal/common/math.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <thread>

namespace popcal::mcmc {

void SamplerConfig::validate() const
{
    if (chains < 1) {
        throw UsageError("chains must be >= 1");
    }
    if (warmup_iters < 1 || sampling_iters < 1) {
        throw UsageError("warmup and sampling iterations must be >= 1");
    }
    if (!(target_accept > 0.0 && target_accept < 1.0)) {
        throw UsageError("target_accept must lie in (0, 1)");
    }
    if (max_tree_depth < 1) {
        throw UsageError("max_tree_depth must be >= 1");
    }
    if (threads < 0) {
        throw UsageError("threads must be >= 0");
    }
}

void leapfrog(const TargetDensity& target, std::span<const double> inv_metric, double epsilon, PhasePoint& z)
{
    const std::size_t n = z.q.size();
    const double half = 0.5 * epsilon;
    for (std::size_t i = 0; i < n; ++i) {
        z.p[i] += half * z.grad[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
        z.q[i] += epsilon * inv_metric[i] * z.p[i];
    }
    z.log_density = target.log_density_gradient(z.q, z.grad);
    for (std::size_t i = 0; i < n; ++i) {
        z.p[i] += half * z.grad[i];
    }
}

double hamiltonian(std::span<const double> inv_metric, const PhasePoint& z)
{
    double k = 0.0;
    for (std::size_t i = 0; i < z.p.size(); ++i) {
        k += inv_metric[i] * z.p[i] * z.p[i];
    }
    return 0.5 * k - z.log_density;
}

namespace {

using Vec = std::vector<double>;

constexpr double kMaxDeltaH = 1000.0;

void add_to(Vec& acc, const Vec& v)
{
    for (std::size_t i = 0; i < acc.size(); ++i) {
        acc[i] += v[i];
    }
}

Vec sum_of(const Vec& a, const Vec& b)
{
    Vec out(a);
    add_to(out, b);
    return out;
}

double dot(const Vec& a, const Vec& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

bool no_u_turn(const Vec& p_sharp_minus, const Vec& p_sharp_plus, const Vec& rho)
{
    return dot(p_sharp_plus, rho) > 0.0 && dot(p_sharp_minus, rho) > 0.0;
}

class DualAveraging {
public:
    explicit DualAveraging(double delta) : delta_(delta) {}

    void restart(double epsilon)
    {
        mu_ = std::log(10.0 * epsilon);
        counter_ = 0.0;
        s_bar_ = 0.0;
        x_bar_ = 0.0;
    }

    double learn(double accept_stat)
    {
        counter_ += 1.0;
        accept_stat = std::min(accept_stat, 1.0);
        const double eta = 1.0 / (counter_ + kT0);
        s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta_ - accept_stat);
        const double x = mu_ - s_bar_ * std::sqrt(counter_) / kGamma;
        const double x_eta = std::pow(counter_, -kKappa);
        x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
        return std::exp(x);
    }

    double final_step() const { return std::exp(x_bar_); }

private:
    static constexpr double kGamma = 0.05;
    static constexpr double kKappa = 0.75;
    static constexpr double kT0 = 10.0;

    double delta_;
    double mu_ = 0.0;
    double counter_ = 0.0;
    double s_bar_ = 0.0;
    double x_bar_ = 0.0;
};

/// Expanding-window schedule for the diagonal metric.
class MetricWindows {
public:
    MetricWindows(int num_warmup, std::size_t dim) : num_warmup_(num_warmup), mean_(dim), m2_(dim)
    {
        if (num_warmup < 20) {
            enabled_ = false;
            return;
        }
        if (init_buffer_ + base_window_ + term_buffer_ > num_warmup) {
            init_buffer_ = static_cast<int>(0.15 * num_warmup);
            term_buffer_ = static_cast<int>(0.1 * num_warmup);
            base_window_ = num_warmup - (init_buffer_ + term_buffer_);
        }
        window_size_ = base_window_;
        next_window_ = init_buffer_ + base_window_ - 1;
    }

    /// Feeds the post-transition position of warmup iteration `counter_`.
    /// Returns true and overwrites `inv_metric` when a window closes.
    bool learn(const Vec& q, Vec& inv_metric)
    {
        if (!enabled_) {
            return false;
        }
        if (in_window()) {
            add(q);
        }
        if (end_of_window()) {
            advance();
            const double n = static_cast<double>(count_);
            for (std::size_t i = 0; i < inv_metric.size(); ++i) {
                const double var = m2_[i] / (n - 1.0);
                inv_metric[i] = (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0));
            }
            std::fill(mean_.begin(), mean_.end(), 0.0);
            std::fill(m2_.begin(), m2_.end(), 0.0);
            count_ = 0;
            ++counter_;
            return true;
        }
        ++counter_;
        return false;
    }

private:
    bool in_window() const
    {
        return counter_ >= init_buffer_ && counter_ < num_warmup_ - term_buffer_ && counter_ != num_warmup_;
    }
    bool end_of_window() const { return counter_ == next_window_ && counter_ != num_warmup_; }

    void advance()
    {
        if (next_window_ == num_warmup_ - term_buffer_ - 1) {
            return;
        }
        window_size_ *= 2;
        next_window_ = counter_ + window_size_;
        if (next_window_ != num_warmup_ - term_buffer_ - 1) {
            const int boundary = next_window_ + 2 * window_size_;
            if (boundary >= num_warmup_ - term_buffer_) {
                next_window_ = num_warmup_ - term_buffer_ - 1;
            }
        }
    }

    // Welford update.
    void add(const Vec& q)
    {
        ++count_;
        const double n = static_cast<double>(count_);
        for (std::size_t i = 0; i < q.size(); ++i) {
            const double d = q[i] - mean_[i];
            mean_[i] += d / n;
            m2_[i] += d * (q[i] - mean_[i]);
        }
    }

    int num_warmup_;
    bool enabled_ = true;
    int init_buffer_ = 75;
    int term_buffer_ = 50;
    int base_window_ = 25;
    int window_size_ = 0;
    int next_window_ = 0;
    int counter_ = 0;
    Vec mean_;
    Vec m2_;
    long long count_ = 0;
};

std::mt19937_64 chain_rng(std::uint64_t seed, std::size_t chain)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(chain), 0x9e3779b9u};
    return std::mt19937_64(seq);
}

class Chain {
public:
    Chain(const TargetDensity& target, const SamplerConfig& cfg, std::size_t chain_index)
        : target_(target), cfg_(cfg), dim_(target.dim()), inv_metric_(dim_, 1.0),
          rng_(chain_rng(cfg.seed, chain_index)),
          stepper_(cfg.target_accept)
    {
        z_.q.assign(dim_, 0.0);
        z_.p.assign(dim_, 0.0);
        z_.grad.assign(dim_, 0.0);
    }

    void initialize()
    {
        std::uniform_real_distribution<double> init(-2.0, 2.0);
        for (int attempt = 0; attempt < 100; ++attempt) {
            for (auto& v : z_.q) {
                v = init(rng_);
            }
            z_.log_density = target_.log_density_gradient(z_.q, z_.grad);
            ++gradient_evals_;
            const bool finite = std::isfinite(z_.log_density) &&
                                std::all_of(z_.grad.begin(), z_.grad.end(), [](double g) { return std::isfinite(g); });
            if (finite) {
                return;
            }
        }
        throw NumericalError("initialization failed");
    }

    void run(PosteriorDraws& draws, std::size_t chain_index, ChainInfo& info)
    {
        initialize();
        init_step_size();
        stepper_.restart(epsilon_);
        MetricWindows windows(cfg_.warmup_iters, dim_);

        for (int it = 0; it < cfg_.warmup_iters; ++it) {
            const Transition t = transition();
            epsilon_ = stepper_.learn(t.accept_stat);
            if (windows.learn(z_.q, inv_metric_)) {
                init_step_size();
                stepper_.restart(epsilon_);
            }
        }
        epsilon_ = stepper_.final_step();

        std::vector<double> constrained(draws.num_params());
        double accept_sum = 0.0;
        double depth_sum = 0.0;
        int depth_hits = 0;
        for (int it = 0; it < cfg_.sampling_iters; ++it) {
            const Transition t = transition();
            accept_sum += t.accept_stat;
            depth_sum += t.depth;
            depth_hits += t.depth >= cfg_.max_tree_depth ? 1 : 0;
            auto row = draws.row(chain_index, static_cast<std::size_t>(it));
            target_.constrain(z_.q, row);
            draws.set_divergent(chain_index, static_cast<std::size_t>(it), t.divergent);
        }
        const double n = static_cast<double>(cfg_.sampling_iters);
        info.step_size = epsilon_;
        info.inverse_metric = inv_metric_;
        info.mean_accept_stat = accept_sum / n;
        info.mean_tree_depth = depth_sum / n;
        info.max_tree_depth_hits = depth_hits;
        info.gradient_evaluations = gradient_evals_;
    }

private:
    struct Transition {
        double accept_stat = 0.0;
        int depth = 0;
        bool divergent = false;
    };

    void draw_momentum(PhasePoint& z)
    {
        for (std::size_t i = 0; i < dim_; ++i) {
            z.p[i] = normal_(rng_) / std::sqrt(inv_metric_[i]);
        }
    }

    Vec p_sharp(const PhasePoint& z) const
    {
        Vec out(dim_);
        for (std::size_t i = 0; i < dim_; ++i) {
            out[i] = inv_metric_[i] * z.p[i];
        }
        return out;
    }

    void step(PhasePoint& z, double eps)
    {
        leapfrog(target_, inv_metric_, eps, z);
        ++gradient_evals_;
    }

    double energy(const PhasePoint& z) const
    {
        const double h = hamiltonian(inv_metric_, z);
        return std::isnan(h) ? std::numeric_limits<double>::infinity() : h;
    }

    // Doubles or halves the step until a single leapfrog step crosses an
    // acceptance of 0.8.
    void init_step_size()
    {
        const PhasePoint start = z_;
        const double log_target = std::log(0.8);
        auto trial = [&]() {
            z_ = start;
            draw_momentum(z_);
            const double h0 = energy(z_);
            step(z_, epsilon_);
            return h0 - energy(z_);
        };
        const int direction = trial() > log_target ? 1 : -1;
        while (true) {
            const double delta_h = trial();
            if (direction == 1 && !(delta_h > log_target)) {
                break;
            }
            if (direction == -1 && !(delta_h < log_target)) {
                break;
            }
            epsilon_ = direction == 1 ? 2.0 * epsilon_ : 0.5 * epsilon_;
            if (epsilon_ > 1e7) {
                throw NumericalError("step size search diverged: posterior may be improper");
            }
            if (epsilon_ == 0.0) {
                throw NumericalError("step size search collapsed to zero");
            }
        }
        z_ = start;
    }

    struct TreeState {
        double h0 = 0.0;
        long long n_leapfrog = 0;
        double sum_metro_prob = 0.0;
        bool divergent = false;
    };

    // Builds a subtree of 2^depth leapfrog steps continuing from z_.
    bool build_tree(int depth, PhasePoint& z_propose, Vec& p_sharp_beg, Vec& p_sharp_end, Vec& rho, Vec& p_beg,
                    Vec& p_end, int sign, double& log_sum_weight, TreeState& st)
    {
        if (depth == 0) {
            step(z_, sign * epsilon_);
            ++st.n_leapfrog;
            const double h = energy(z_);
            if (h - st.h0 > kMaxDeltaH) {
                st.divergent = true;
            }
            log_sum_weight = log_sum_exp(log_sum_weight, st.h0 - h);
            st.sum_metro_prob += st.h0 - h > 0.0 ? 1.0 : std::exp(st.h0 - h);
            z_propose = z_;
            p_sharp_beg = p_sharp(z_);
            p_sharp_end = p_sharp_beg;
            add_to(rho, z_.p);
            p_beg = z_.p;
            p_end = p_beg;
            return !st.divergent;
        }

        Vec rho_init(dim_, 0.0);
        Vec p_init_end(dim_);
        Vec p_sharp_init_end(dim_);
        double lsw_init = -std::numeric_limits<double>::infinity();
        if (!build_tree(depth - 1, z_propose, p_sharp_beg, p_sharp_init_end, rho_init, p_beg, p_init_end, sign,
                        lsw_init, st)) {
            return false;
        }

        PhasePoint z_propose_final = z_;
        Vec rho_final(dim_, 0.0);
        Vec p_final_beg(dim_);
        Vec p_sharp_final_beg(dim_);
        double lsw_final = -std::numeric_limits<double>::infinity();
        if (!build_tree(depth - 1, z_propose_final, p_sharp_final_beg, p_sharp_end, rho_final, p_final_beg, p_end,
                        sign, lsw_final, st)) {
            return false;
        }

        const double lsw_subtree = log_sum_exp(lsw_init, lsw_final);
        log_sum_weight = log_sum_exp(log_sum_weight, lsw_subtree);
        if (lsw_final > lsw_subtree) {
            z_propose = std::move(z_propose_final);
        } else if (uniform_(rng_) < std::exp(lsw_final - lsw_subtree)) {
            z_propose = std::move(z_propose_final);
        }

        const Vec rho_subtree = sum_of(rho_init, rho_final);
        add_to(rho, rho_subtree);
        bool persist = no_u_turn(p_sharp_beg, p_sharp_end, rho_subtree);
        persist = persist && no_u_turn(p_sharp_beg, p_sharp_final_beg, sum_of(rho_init, p_final_beg));
        persist = persist && no_u_turn(p_sharp_init_end, p_sharp_end, sum_of(rho_final, p_init_end));
        return persist;
    }

    Transition transition()
    {
        draw_momentum(z_);
        PhasePoint z_fwd = z_;
        PhasePoint z_bck = z_;
        PhasePoint z_sample = z_;
        PhasePoint z_propose = z_;

        Vec p_fwd_fwd = z_.p;
        Vec p_sharp_fwd_fwd = p_sharp(z_);
        Vec p_fwd_bck = z_.p;
        Vec p_sharp_fwd_bck = p_sharp_fwd_fwd;
        Vec p_bck_fwd = z_.p;
        Vec p_sharp_bck_fwd = p_sharp_fwd_fwd;
        Vec p_bck_bck = z_.p;
        Vec p_sharp_bck_bck = p_sharp_fwd_fwd;
        Vec rho = z_.p;

        double log_sum_weight = 0.0;
        TreeState st;
        st.h0 = energy(z_);
        int depth = 0;

        while (depth < cfg_.max_tree_depth) {
            Vec rho_fwd(dim_, 0.0);
            Vec rho_bck(dim_, 0.0);
            bool valid = false;
            double lsw_subtree = -std::numeric_limits<double>::infinity();
            if (uniform_(rng_) > 0.5) {
                z_ = z_fwd;
                rho_bck = rho;
                p_bck_fwd = p_fwd_bck;
                p_sharp_bck_fwd = p_sharp_fwd_bck;
                valid = build_tree(depth, z_propose, p_sharp_fwd_bck, p_sharp_fwd_fwd, rho_fwd, p_fwd_bck, p_fwd_fwd,
                                   1, lsw_subtree, st);
                z_fwd = z_;
            } else {
                z_ = z_bck;
                rho_fwd = rho;
                p_fwd_bck = p_bck_fwd;
                p_sharp_fwd_bck = p_sharp_bck_fwd;
                valid = build_tree(depth, z_propose, p_sharp_bck_fwd, p_sharp_bck_bck, rho_bck, p_bck_fwd, p_bck_bck,
                                   -1, lsw_subtree, st);
                z_bck = z_;
            }
            if (!valid) {
                break;
            }
            ++depth;

            if (lsw_subtree > log_sum_weight) {
                z_sample = z_propose;
            } else if (uniform_(rng_) < std::exp(lsw_subtree - log_sum_weight)) {
                z_sample = z_propose;
            }
            log_sum_weight = log_sum_exp(log_sum_weight, lsw_subtree);

            rho = sum_of(rho_bck, rho_fwd);
            bool persist = no_u_turn(p_sharp_bck_bck, p_sharp_fwd_fwd, rho);
            persist = persist && no_u_turn(p_sharp_bck_bck, p_sharp_fwd_bck, sum_of(rho_bck, p_fwd_bck));
            persist = persist && no_u_turn(p_sharp_bck_fwd, p_sharp_fwd_fwd, sum_of(rho_fwd, p_bck_fwd));
            if (!persist) {
                break;
            }
        }

        z_ = std::move(z_sample);
        Transition t;
        t.accept_stat = st.n_leapfrog > 0 ? st.sum_metro_prob / static_cast<double>(st.n_leapfrog) : 0.0;
        t.depth = depth;
        t.divergent = st.divergent;
        return t;
    }

    const TargetDensity& target_;
    const SamplerConfig& cfg_;
    std::size_t dim_;
    Vec inv_metric_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    DualAveraging stepper_;
    PhasePoint z_;
    double epsilon_ = 1.0;
    long long gradient_evals_ = 0;
};

} // namespace

PosteriorDraws sample(const TargetDensity& target, const SamplerConfig& cfg, SamplerInfo* info)
{
    cfg.validate();
    if (target.dim() == 0) {
        throw UsageError("target density has dimension 0");
    }
    const auto chains = static_cast<std::size_t>(cfg.chains);
    PosteriorDraws draws(target.parameter_names(), chains, static_cast<std::size_t>(cfg.sampling_iters));
    std::vector<ChainInfo> chain_info(chains);
    std::vector<std::exception_ptr> errors(chains);

    auto run_chain = [&](std::size_t c) {
        try {
            Chain chain(target, cfg, c);
            chain.run(draws, c, chain_info[c]);
        } catch (...) {
            errors[c] = std::current_exception();
        }
    };

    std::size_t workers = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                           : static_cast<std::size_t>(cfg.threads);
    workers = std::min(workers, chains);
    if (workers <= 1) {
        for (std::size_t c = 0; c < chains; ++c) {
            run_chain(c);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&]() {
                for (std::size_t c = next++; c < chains; c = next++) {
                    run_chain(c);
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    if (info) {
        info->chains = std::move(chain_info);
    }
    return draws;
}

} // namespace popcal::mcmc
