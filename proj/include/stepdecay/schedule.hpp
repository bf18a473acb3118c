#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "stepdecay/problem.hpp"

namespace stepdecay {

namespace family {

struct Constant {
    double eta0;
};

/// eta_t = a / (b + t^alpha)
struct PolyDecay {
    double a;
    double b;
    double alpha;
};

/// log2(T) phases of equal length; phase l runs at eta0 / 2^l, starting at l = 1.
struct StepDecay {
    double eta0;
    std::int64_t horizon;
};

/// eta_t = eta0 * exp(-decay * t)
struct ExpDecay {
    double eta0;
    double decay;
};

/// Constant 1/R^2 for the first third, eta = 1/(mu (kappa + s/2)) for the
/// second third, then ceil(log2 kappa) halving phases starting at
/// 5 log2(kappa) / (2 mu T).
struct ThreePhase {
    double r_squared;
    double mu;
    double kappa;
    std::int64_t horizon;
};

}  // namespace family

/// How a finite-horizon schedule answers for t beyond its horizon.
enum class HorizonPolicy {
    strict,  // OutOfHorizon
    freeze,  // rate(t) = rate(horizon)
};

/// Learning-rate schedule. Immutable value type; construction validates the
/// parameters and precomputes the phase layout of the piecewise families.
class Schedule {
public:
    using Params = std::variant<family::Constant, family::PolyDecay, family::StepDecay,
                                family::ExpDecay, family::ThreePhase>;

    static Schedule constant(double eta0);
    static Schedule poly_decay(double a, double b, double alpha);
    static Schedule step_decay(double eta0, std::int64_t horizon);
    static Schedule exp_decay(double eta0, double decay);
    static Schedule three_phase(double r_squared, double mu, double kappa, std::int64_t horizon);

    explicit Schedule(Params params);

    const Params& params() const noexcept { return params_; }
    std::string_view family_name() const noexcept;
    std::optional<std::int64_t> horizon() const noexcept;

    /// eta_t for t >= 1. Throws InvalidStep for t < 1 and OutOfHorizon past
    /// the horizon of StepDecay / ThreePhase.
    double rate(std::int64_t t) const;
    double rate(std::int64_t t, HorizonPolicy policy) const;

    /// Rates for t = 1..T in one vector.
    std::vector<double> rates(std::int64_t horizon, HorizonPolicy policy = HorizonPolicy::strict) const;

    struct Layout {
        std::int64_t phases = 0;        // StepDecay: P; ThreePhase: phases in the last third
        std::int64_t phase_length = 0;  // StepDecay: m; ThreePhase: last-third phase length
        std::int64_t first_cut = 0;     // ThreePhase: A
        std::int64_t second_cut = 0;    // ThreePhase: B
    };
    const Layout& layout() const noexcept { return layout_; }

    bool operator==(const Schedule& other) const;

private:
    double rate_unchecked(std::int64_t t) const;

    Params params_;
    Layout layout_;
};

struct ScheduleSums {
    double sum_eta = 0.0;
    double sum_eta_sq = 0.0;
};

/// sum of eta_t and eta_t^2 over [t_from, t_to], using closed forms where the
/// family has one.
ScheduleSums schedule_sum(const Schedule& schedule, std::int64_t t_from, std::int64_t t_to);

/// Smallest delta >= 1 with sum_{t=start+1}^{start+delta} eta_t >= lo, or
/// nullopt if the running sum has not reached lo by t_limit. The returned
/// window's sum never exceeds lo + max eta, so with eta_t <= 2/lambda the
/// target [1/lambda, 3/lambda] is always hit.
std::optional<std::int64_t> accumulation_window(const Schedule& schedule, std::int64_t start,
                                                double lo, std::int64_t t_limit,
                                                HorizonPolicy policy = HorizonPolicy::strict);

enum class RateWarningKind {
    Divergent,                   // eta_t > 2/R^2
    ExceedsTheoremPrecondition,  // eta_t > 1/(2 R^2)
};

struct RateWarning {
    RateWarningKind kind;
    std::int64_t first_step;
    double rate;
};

std::string_view to_string(RateWarningKind kind) noexcept;

/// Scans t in [1, probe] (probe = horizon for finite schedules) and reports
/// the first step violating each threshold. Empty result means ok.
std::vector<RateWarning> validate(const Schedule& schedule, const DerivedConstants& constants,
                                  std::int64_t probe_horizon = 100000);

nlohmann::json to_json(const Schedule& schedule);
/// Parses {"family": ..., <params>}. Errors name the offending field.
Schedule schedule_from_json(const nlohmann::json& j);

}  // namespace stepdecay
