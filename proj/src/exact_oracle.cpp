#include "stepdecay/exact_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "stepdecay/error.hpp"
#include "stepdecay/format.hpp"
#include "stepdecay/parallel.hpp"

namespace stepdecay {
namespace {

// Coordinates are reduced in fixed-size chunks so the summation order never
// depends on the number of workers.
constexpr std::size_t kChunk = 1024;

}  // namespace

CoordinateState step_coordinate(CoordinateState state, double lambda, double eta, double sigma_sq)
{
    if (state.bias_sq < 0.0 || state.variance < 0.0 || lambda < 0.0 || eta < 0.0 || sigma_sq < 0.0) {
        throw Error(ErrorCode::InvalidInput, "step_coordinate: inputs must be nonnegative");
    }
    const double c = 1.0 - eta * lambda;
    const double c2 = c * c;
    return {c2 * state.bias_sq, c2 * state.variance + lambda * sigma_sq * eta * eta};
}

StationaryPoint stationary_variance(double eta, double lambda, double sigma_sq)
{
    if (eta < 0.0 || lambda < 0.0 || sigma_sq < 0.0) {
        throw Error(ErrorCode::InvalidInput, "stationary_variance: inputs must be nonnegative");
    }
    const double x = eta * lambda;
    if (x == 0.0) {
        throw Error(ErrorCode::ZeroStep, "stationary_variance: eta * lambda is zero");
    }
    if (x >= 2.0) {
        throw Error(ErrorCode::Divergent, "stationary_variance: eta * lambda >= 2");
    }
    // 1 - (1 - x)^2 = x (2 - x), which avoids cancellation for small x.
    return {lambda * sigma_sq * eta * eta / (x * (2.0 - x))};
}

std::vector<TrajectoryPoint> risk_trajectory(const ProblemInstance& instance, const Schedule& schedule,
                                             std::int64_t horizon, std::int64_t record_every,
                                             HorizonPolicy policy)
{
    if (horizon < 1) {
        throw Error(ErrorCode::InvalidStep, "T: must be >= 1");
    }
    if (record_every < 1) {
        throw Error(ErrorCode::InvalidStep, "record_every: must be >= 1");
    }
    const auto rates = schedule.rates(horizon, policy);

    std::vector<std::int64_t> record_at;
    for (std::int64_t t = record_every; t <= horizon; t += record_every) {
        record_at.push_back(t);
    }
    if (record_at.empty() || record_at.back() != horizon) {
        record_at.push_back(horizon);
    }
    const std::size_t n_rec = record_at.size();

    const auto lambdas = instance.eigenvalues();
    const double sigma_sq = instance.noise_level();
    const std::size_t d = instance.dim();
    const std::size_t n_chunks = (d + kChunk - 1) / kChunk;

    // partial[c * n_rec + r] = (bias, variance) sums of chunk c at record r
    std::vector<long double> bias_part(n_chunks * n_rec), var_part(n_chunks * n_rec);

    parallel_for(n_chunks, [&](std::size_t c) {
        const std::size_t lo = c * kChunk;
        const std::size_t n = std::min(kChunk, d - lo);
        std::vector<double> b(n), v(n, 0.0), lam(n), noise(n);
        for (std::size_t i = 0; i < n; ++i) {
            lam[i] = lambdas[lo + i];
            b[i] = instance.initial_error_sq(lo + i);
            noise[i] = lam[i] * sigma_sq;
        }
        std::size_t r = 0;
        for (std::int64_t t = 1; t <= horizon; ++t) {
            const double eta = rates[static_cast<std::size_t>(t - 1)];
            const double eta_sq = eta * eta;
            for (std::size_t i = 0; i < n; ++i) {
                const double f = 1.0 - eta * lam[i];
                const double f2 = f * f;
                b[i] *= f2;
                v[i] = f2 * v[i] + noise[i] * eta_sq;
            }
            if (t == record_at[r]) {
                long double sb = 0.0L, sv = 0.0L;
                for (std::size_t i = 0; i < n; ++i) {
                    sb += static_cast<long double>(lam[i]) * b[i];
                    sv += static_cast<long double>(lam[i]) * v[i];
                }
                bias_part[c * n_rec + r] = sb;
                var_part[c * n_rec + r] = sv;
                ++r;
            }
        }
    });

    std::vector<TrajectoryPoint> out(n_rec);
    for (std::size_t r = 0; r < n_rec; ++r) {
        long double sb = 0.0L, sv = 0.0L;
        for (std::size_t c = 0; c < n_chunks; ++c) {
            sb += bias_part[c * n_rec + r];
            sv += var_part[c * n_rec + r];
        }
        out[r].t = record_at[r];
        out[r].report = RiskReport::make(static_cast<double>(sb / 2), static_cast<double>(sv / 2), sigma_sq, d,
                                         record_at[r]);
    }
    return out;
}

RiskReport final_risk(const ProblemInstance& instance, const Schedule& schedule, std::int64_t horizon,
                      HorizonPolicy policy)
{
    return risk_trajectory(instance, schedule, horizon, horizon, policy).back().report;
}

std::vector<double> normalized_series(const ProblemInstance& instance, const Schedule& schedule,
                                      std::int64_t t_max, HorizonPolicy policy)
{
    if (instance.noise_level() == 0.0) {
        throw Error(ErrorCode::NormalizationUndefined, "noise_level: normalization needs sigma^2 > 0");
    }
    const auto traj = risk_trajectory(instance, schedule, t_max, 1, policy);
    std::vector<double> out(traj.size());
    std::transform(traj.begin(), traj.end(), out.begin(), [](const TrajectoryPoint& p) {
        return p.report.normalized;
    });
    return out;
}

WindowMax window_sup(std::span<const double> series, std::int64_t lo, std::int64_t hi)
{
    const auto n = static_cast<std::int64_t>(series.size());
    if (lo < 1 || hi < lo || hi > n) {
        throw Error(ErrorCode::InvalidStep, "window: need 1 <= lo <= hi <= T_max");
    }
    WindowMax best{series[static_cast<std::size_t>(lo - 1)], lo};
    for (std::int64_t t = lo + 1; t <= hi; ++t) {
        const double x = series[static_cast<std::size_t>(t - 1)];
        if (x > best.value) {
            best = {x, t};
        }
    }
    return best;
}

std::vector<CensusEntry> census(std::span<const double> series, std::span<const double> taus)
{
    std::vector<CensusEntry> out;
    for (const double tau : taus) {
        CensusEntry e;
        e.tau = tau;
        std::int64_t prev_bad = 0;
        for (std::size_t i = 0; i < series.size(); ++i) {
            if (!(series[i] >= tau)) {
                continue;
            }
            const auto t = static_cast<std::int64_t>(i) + 1;
            if (prev_bad > 0) {
                e.max_gap = std::max(e.max_gap, t - prev_bad);
            }
            if (!e.intervals.empty() && e.intervals.back().second == t - 1) {
                e.intervals.back().second = t;
            } else {
                e.intervals.emplace_back(t, t);
            }
            prev_bad = t;
            ++e.bad_count;
        }
        for (const auto& [a, b] : e.intervals) {
            const auto len = b - a + 1;
            e.min_run = e.min_run == 0 ? len : std::min(e.min_run, len);
        }
        out.push_back(std::move(e));
    }
    return out;
}

LimsupResult limsup_probe(const ProblemInstance& instance, const Schedule& schedule, std::int64_t t_max,
                          std::span<const double> taus, HorizonPolicy policy)
{
    if (t_max < 2) {
        throw Error(ErrorCode::InvalidStep, "T_max: must be >= 2");
    }
    LimsupResult res;
    res.series = normalized_series(instance, schedule, t_max, policy);
    const auto tail = window_sup(res.series, t_max / 2, t_max);
    res.sup_normalized = tail.value;
    res.argmax_t = tail.argmax;
    res.census = census(res.series, taus);
    return res;
}

void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryPoint> trajectory)
{
    out << "t,bias_risk,variance_risk,total,normalized\n";
    for (const auto& p : trajectory) {
        out << p.t << ',' << format_double(p.report.bias_risk) << ',' << format_double(p.report.variance_risk)
            << ',' << format_double(p.report.total) << ',' << format_double(p.report.normalized) << '\n';
    }
}

}  // namespace stepdecay
