#include "stepdecay/sgd_sim.hpp"

#include <cmath>
#include <numeric>

#include "stepdecay/error.hpp"
#include "stepdecay/parallel.hpp"

namespace stepdecay {

OneHotSampler::OneHotSampler(std::vector<double> coordinate_variances, double noise_std, std::uint64_t seed)
    : noise_std_(noise_std), rng_(seed)
{
    if (coordinate_variances.empty()) {
        throw Error(ErrorCode::InvalidInstance, "coordinate_variances: must be non-empty");
    }
    for (const double v : coordinate_variances) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw Error(ErrorCode::InvalidInstance, "coordinate_variances: entries must be positive");
        }
        stddev_.push_back(std::sqrt(v));
    }
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
        throw Error(ErrorCode::InvalidInstance, "noise_std: must be >= 0");
    }
}

OneHotSampler OneHotSampler::from_instance(const ProblemInstance& instance, std::uint64_t seed)
{
    const double d = static_cast<double>(instance.dim());
    std::vector<double> var;
    for (const double lambda : instance.eigenvalues()) {
        var.push_back(d * lambda);
    }
    return OneHotSampler(std::move(var), std::sqrt(instance.noise_level()), seed);
}

OneHotDraw OneHotSampler::draw(std::int64_t t) const
{
    const auto step = static_cast<std::uint64_t>(t);
    const auto pick = rng_.block(step, 0);
    const auto gauss = rng_.block(step, 1);
    const std::uint64_t bits = (static_cast<std::uint64_t>(pick[1]) << 32) | pick[0];
    const auto k = static_cast<std::size_t>(bounded(bits, stddev_.size()));
    const auto z = box_muller(uniform_open(gauss[0], gauss[1]), uniform_open(gauss[2], gauss[3]));
    return {k, stddev_[k] * z[0], noise_std_ * z[1]};
}

namespace {

template <class DrawFn>
RunResult run_impl(const ProblemInstance& instance, const Schedule& schedule, std::int64_t horizon,
                   DrawFn&& draw_at, const RunOptions& options)
{
    if (horizon < 1) {
        throw Error(ErrorCode::InvalidStep, "T: must be >= 1");
    }
    const std::size_t d = instance.dim();
    const auto opt = instance.optimum();
    const auto rates = schedule.rates(horizon, options.policy);

    std::vector<double> w(instance.initial_point().begin(), instance.initial_point().end());

    // Suffix sums are kept lazily: each coordinate remembers since when it has
    // held its current value, so a step costs O(1) regardless of d.
    const auto s = options.suffix_from.value_or(0);
    if (options.suffix_from && (s < 1 || s > horizon)) {
        throw Error(ErrorCode::InvalidStep, "suffix_from: must lie in [1, T]");
    }
    std::vector<long double> suffix_sum;
    std::vector<std::int64_t> held_since;
    if (options.suffix_from) {
        suffix_sum.assign(d, 0.0L);
        held_since.assign(d, s);
    }

    RunResult result;
    if (options.trace_stride > 0) {
        result.risk_trace.emplace();
    }

    for (std::int64_t t = 1; t <= horizon; ++t) {
        const OneHotDraw x = draw_at(t);
        if (x.index >= d) {
            throw Error(ErrorCode::InvalidInstance, "draw index out of range for instance dimension");
        }
        const std::size_t k = x.index;
        const double eta = rates[static_cast<std::size_t>(t - 1)];
        const double residual = (w[k] - opt[k]) * x.gaussian - x.noise;
        const double updated = w[k] - eta * residual * x.gaussian;
        if (options.suffix_from && t >= held_since[k]) {
            suffix_sum[k] += static_cast<long double>(w[k]) * static_cast<long double>(t - held_since[k]);
            held_since[k] = t;
        }
        w[k] = updated;
        if (options.trace_stride > 0 && (t % options.trace_stride == 0 || t == horizon)) {
            result.risk_trace->emplace_back(t, excess_risk(w, instance));
        }
    }

    if (options.suffix_from) {
        const auto count = static_cast<long double>(horizon - s + 1);
        std::vector<double> avg(d);
        for (std::size_t k = 0; k < d; ++k) {
            const long double total =
                suffix_sum[k] + static_cast<long double>(w[k]) * static_cast<long double>(horizon + 1 - held_since[k]);
            avg[k] = static_cast<double>(total / count);
        }
        result.suffix_average = std::move(avg);
    }
    result.final_iterate = std::move(w);
    return result;
}

EnsembleStats summarize(const std::vector<double>& xs)
{
    const auto n = static_cast<double>(xs.size());
    long double sum = 0.0L;
    for (const double x : xs) {
        sum += x;
    }
    const long double mean = sum / n;
    long double ss = 0.0L;
    for (const double x : xs) {
        ss += (x - mean) * (x - mean);
    }
    const double var = static_cast<double>(ss / (n - 1.0));
    return {static_cast<double>(mean), std::sqrt(var / n), static_cast<std::int64_t>(xs.size())};
}

}  // namespace

RunResult run_sgd(const ProblemInstance& instance, const Schedule& schedule, std::int64_t horizon,
                  const OneHotSampler& sampler, const RunOptions& options)
{
    if (sampler.dim() != instance.dim()) {
        throw Error(ErrorCode::InvalidInstance, "sampler dimension " + std::to_string(sampler.dim()) +
                                                    " does not match instance dimension " +
                                                    std::to_string(instance.dim()));
    }
    return run_impl(instance, schedule, horizon, [&](std::int64_t t) { return sampler.draw(t); }, options);
}

RunResult run_sgd_with_draws(const ProblemInstance& instance, const Schedule& schedule,
                             std::span<const OneHotDraw> draws, const RunOptions& options)
{
    return run_impl(instance, schedule, static_cast<std::int64_t>(draws.size()),
                    [&](std::int64_t t) { return draws[static_cast<std::size_t>(t - 1)]; }, options);
}

EnsembleResult ensemble_risk(const ProblemInstance& instance, const Schedule& schedule, std::int64_t horizon,
                             std::int64_t n_seeds, std::uint64_t base_seed,
                             std::optional<std::int64_t> suffix_from, HorizonPolicy policy)
{
    if (n_seeds < 2) {
        throw Error(ErrorCode::InvalidInput, "n_seeds: must be >= 2");
    }
    const auto n = static_cast<std::size_t>(n_seeds);
    std::vector<double> final_risk(n), suffix_risk(n);
    RunOptions options{suffix_from, 0, policy};
    parallel_for(n, [&](std::size_t i) {
        const auto sampler = OneHotSampler::from_instance(instance, base_seed + i);
        const auto run = run_sgd(instance, schedule, horizon, sampler, options);
        final_risk[i] = excess_risk(run.final_iterate, instance);
        if (run.suffix_average) {
            suffix_risk[i] = excess_risk(*run.suffix_average, instance);
        }
    });
    EnsembleResult out;
    out.final_iterate = summarize(final_risk);
    if (suffix_from) {
        out.suffix_average = summarize(suffix_risk);
    }
    return out;
}

RiskReport averaged_baseline(const ProblemInstance& instance, std::int64_t horizon, std::int64_t n_seeds,
                             std::uint64_t base_seed)
{
    if (horizon < 2 || horizon % 2 != 0) {
        throw Error(ErrorCode::InvalidStep, "T: averaged baseline needs an even horizon");
    }
    const auto constants = derive_constants(instance, OracleKind::one_hot_multiplicative);
    const auto schedule = Schedule::constant(1.0 / (2.0 * constants.r_squared));
    const auto from = horizon / 2;

    const auto noiseless = instance.with_noise_level(0.0);
    const auto at_optimum = instance.with_initial_point({instance.optimum().begin(), instance.optimum().end()});

    // Same seeds across the three runs, so the decomposition is coupled.
    const auto total = ensemble_risk(instance, schedule, horizon, n_seeds, base_seed, from);
    const auto bias = ensemble_risk(noiseless, schedule, horizon, n_seeds, base_seed, from);
    const auto variance = ensemble_risk(at_optimum, schedule, horizon, n_seeds, base_seed, from);

    auto report = RiskReport::make(bias.suffix_average->mean, variance.suffix_average->mean,
                                   instance.noise_level(), instance.dim(), horizon);
    report.total = total.suffix_average->mean;
    if (report.has_normalized()) {
        report.normalized = report.total * static_cast<double>(horizon) /
                            (instance.noise_level() * static_cast<double>(instance.dim()));
    }
    return report;
}

}  // namespace stepdecay
