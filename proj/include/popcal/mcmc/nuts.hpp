#pragma once

#include "popcal/mcmc/draws.hpp"
#include "popcal/mcmc/target.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace popcal::mcmc {

struct SamplerConfig {
    int chains = 4;
    int warmup_iters = 1000;
    int sampling_iters = 1000;
    std::uint64_t seed = 1;
    double target_accept = 0.8;
    int max_tree_depth = 10;
    /// Worker threads for running chains; 0 means one per hardware thread.
    /// Results do not depend on this value.
    int threads = 1;

    /// Throws UsageError when a field is out of range.
    void validate() const;
};

/// Adaptation results and per-chain summaries of the sampling phase.
struct ChainInfo {
    double step_size = 0.0;
    std::vector<double> inverse_metric;
    double mean_accept_stat = 0.0;
    double mean_tree_depth = 0.0;
    int max_tree_depth_hits = 0;
    long long gradient_evaluations = 0;
};

struct SamplerInfo {
    std::vector<ChainInfo> chains;
};

/// Phase-space point for a diagonal Euclidean metric.
struct PhasePoint {
    std::vector<double> q;
    std::vector<double> p;
    std::vector<double> grad; // gradient of log density at q
    double log_density = 0.0;
};

/// One leapfrog step of size `epsilon` (negative for backwards) under the
/// inverse diagonal metric `inv_metric`. Updates q, p, grad and log_density.
void leapfrog(const TargetDensity& target, std::span<const double> inv_metric, double epsilon, PhasePoint& z);

/// Kinetic plus potential energy.
double hamiltonian(std::span<const double> inv_metric, const PhasePoint& z);

/// Multinomial No-U-Turn sampler with dual-averaging step size and windowed
/// diagonal metric adaptation. Chains are seeded from (cfg.seed, chain index)
/// and are reproducible independently of thread count.
PosteriorDraws sample(const TargetDensity& target, const SamplerConfig& cfg, SamplerInfo* info = nullptr);

} // namespace popcal::mcmc
