#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "stepdecay/problem.hpp"
#include "stepdecay/schedule.hpp"

namespace stepdecay {

/// Per-eigendirection state of the additive-noise recursion.
struct CoordinateState {
    double bias_sq = 0.0;
    double variance = 0.0;
};

struct StationaryPoint {
    double value = 0.0;
};

/// b' = (1 - eta lambda)^2 b,  v' = (1 - eta lambda)^2 v + lambda sigma^2 eta^2.
/// Computed even when eta lambda >= 2.
CoordinateState step_coordinate(CoordinateState state, double lambda, double eta, double sigma_sq);

/// Fixed point lambda sigma^2 eta^2 / (1 - (1 - eta lambda)^2) of the variance map.
StationaryPoint stationary_variance(double eta, double lambda, double sigma_sq);

struct TrajectoryPoint {
    std::int64_t t = 0;
    RiskReport report;
};

/// Exact expected risk of SGD under the additive-noise oracle, recorded at
/// every multiple of `record_every` and at T. Bitwise reproducible for any
/// thread count.
std::vector<TrajectoryPoint> risk_trajectory(const ProblemInstance& instance, const Schedule& schedule,
                                             std::int64_t horizon, std::int64_t record_every,
                                             HorizonPolicy policy = HorizonPolicy::strict);

RiskReport final_risk(const ProblemInstance& instance, const Schedule& schedule, std::int64_t horizon,
                      HorizonPolicy policy = HorizonPolicy::strict);

/// risk(T) T / (sigma^2 d) for T = 1..T_max; element i holds T = i + 1.
std::vector<double> normalized_series(const ProblemInstance& instance, const Schedule& schedule,
                                      std::int64_t t_max, HorizonPolicy policy = HorizonPolicy::strict);

struct WindowMax {
    double value = 0.0;
    std::int64_t argmax = 0;  // earliest T attaining the max
};

/// Max of a normalized series over T in [lo, hi].
WindowMax window_sup(std::span<const double> series, std::int64_t lo, std::int64_t hi);

struct CensusEntry {
    double tau = 0.0;
    /// Maximal runs [first, last] of T with normalized risk >= tau.
    std::vector<std::pair<std::int64_t, std::int64_t>> intervals;
    std::int64_t bad_count = 0;
    /// Largest distance between consecutive bad T; 0 with fewer than two.
    std::int64_t max_gap = 0;
    /// Shortest run length; 0 when nothing is bad.
    std::int64_t min_run = 0;
};

std::vector<CensusEntry> census(std::span<const double> series, std::span<const double> taus);

struct LimsupResult {
    double sup_normalized = 0.0;  // over the tail window [T_max/2, T_max]
    std::int64_t argmax_t = 0;
    std::vector<CensusEntry> census;
    std::vector<double> series;
};

LimsupResult limsup_probe(const ProblemInstance& instance, const Schedule& schedule, std::int64_t t_max,
                          std::span<const double> taus, HorizonPolicy policy = HorizonPolicy::strict);

/// Columns t,bias_risk,variance_risk,total,normalized.
void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryPoint> trajectory);

}  // namespace stepdecay
