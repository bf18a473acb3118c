#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "stepdecay/exact_oracle.hpp"
#include "stepdecay/problem.hpp"
#include "stepdecay/rng.hpp"
#include "stepdecay/schedule.hpp"

namespace stepdecay {

struct OneHotDraw {
    std::size_t index = 0;  // active coordinate
    double gaussian = 0.0;  // x_index ~ N(0, coordinate_variances[index])
    double noise = 0.0;     // label noise ~ N(0, noise_std^2)
};

/// Covariates with exactly one nonzero coordinate, chosen uniformly. With
/// coordinate variance d lambda_k this gives E[x x^T] = diag(lambda).
class OneHotSampler {
public:
    OneHotSampler(std::vector<double> coordinate_variances, double noise_std, std::uint64_t seed);

    static OneHotSampler from_instance(const ProblemInstance& instance, std::uint64_t seed);

    /// Draw for step t >= 1. Pure in (seed, t).
    OneHotDraw draw(std::int64_t t) const;

    std::size_t dim() const noexcept { return stddev_.size(); }
    std::uint64_t seed() const noexcept { return rng_.seed(); }
    double noise_std() const noexcept { return noise_std_; }

private:
    std::vector<double> stddev_;
    double noise_std_;
    CounterRng rng_;
};

struct RunOptions {
    std::optional<std::int64_t> suffix_from;  // average iterates t in [s, T]
    std::int64_t trace_stride = 0;             // 0 disables the risk trace
    HorizonPolicy policy = HorizonPolicy::strict;
};

struct RunResult {
    std::vector<double> final_iterate;
    std::optional<std::vector<double>> suffix_average;
    std::optional<std::vector<std::pair<std::int64_t, double>>> risk_trace;
};

/// Streaming SGD w_t = w_{t-1} - eta_t (<w_{t-1}, x_t> - y_t) x_t with
/// y_t = <w*, x_t> + eps_t.
RunResult run_sgd(const ProblemInstance& instance, const Schedule& schedule, std::int64_t horizon,
                  const OneHotSampler& sampler, const RunOptions& options = {});

/// Same recursion driven by explicit draws; draws[t - 1] is used at step t.
RunResult run_sgd_with_draws(const ProblemInstance& instance, const Schedule& schedule,
                             std::span<const OneHotDraw> draws, const RunOptions& options = {});

struct EnsembleStats {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t n_seeds = 0;
};

struct EnsembleResult {
    EnsembleStats final_iterate;
    std::optional<EnsembleStats> suffix_average;
};

/// Runs seeds base_seed .. base_seed + n_seeds - 1 and reduces in seed order.
EnsembleResult ensemble_risk(const ProblemInstance& instance, const Schedule& schedule, std::int64_t horizon,
                             std::int64_t n_seeds, std::uint64_t base_seed,
                             std::optional<std::int64_t> suffix_from = std::nullopt,
                             HorizonPolicy policy = HorizonPolicy::strict);

/// Constant step 1/(2 R^2) (one-hot R^2) with averaging over the second half.
/// bias_risk and variance_risk come from coupled noiseless and start-at-optimum
/// runs on the same draws; total is the mean risk of the actual runs.
RiskReport averaged_baseline(const ProblemInstance& instance, std::int64_t horizon, std::int64_t n_seeds,
                             std::uint64_t base_seed = 0);

}  // namespace stepdecay
