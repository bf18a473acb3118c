#include "stepdecay/schedule.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "stepdecay/error.hpp"

namespace stepdecay {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool positive(double x) { return x > 0.0 && std::isfinite(x); }

void require(bool ok, const std::string& what)
{
    if (!ok) {
        throw Error(ErrorCode::InvalidSchedule, what);
    }
}

// Neumaier summation in extended precision.
class CompensatedSum {
public:
    void add(long double x)
    {
        const long double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    long double value() const { return sum_ + comp_; }

private:
    long double sum_ = 0.0L;
    long double comp_ = 0.0L;
};

// Number of integers in [lo, hi] intersected with [a, b].
std::int64_t overlap(std::int64_t lo, std::int64_t hi, std::int64_t a, std::int64_t b)
{
    return std::max<std::int64_t>(0, std::min(hi, b) - std::max(lo, a) + 1);
}

}  // namespace

Schedule Schedule::constant(double eta0) { return Schedule(family::Constant{eta0}); }

Schedule Schedule::poly_decay(double a, double b, double alpha)
{
    return Schedule(family::PolyDecay{a, b, alpha});
}

Schedule Schedule::step_decay(double eta0, std::int64_t horizon)
{
    return Schedule(family::StepDecay{eta0, horizon});
}

Schedule Schedule::exp_decay(double eta0, double decay)
{
    return Schedule(family::ExpDecay{eta0, decay});
}

Schedule Schedule::three_phase(double r_squared, double mu, double kappa, std::int64_t horizon)
{
    return Schedule(family::ThreePhase{r_squared, mu, kappa, horizon});
}

Schedule::Schedule(Params params) : params_(params)
{
    std::visit(
        overloaded{
            [](const family::Constant& p) { require(positive(p.eta0), "eta0: must be > 0"); },
            [](const family::PolyDecay& p) {
                require(positive(p.a), "a: must be > 0");
                require(p.b >= 0.0 && std::isfinite(p.b), "b: must be >= 0");
                require(p.alpha >= 0.5 && p.alpha <= 1.0, "alpha: must lie in [0.5, 1]");
            },
            [this](const family::StepDecay& p) {
                require(positive(p.eta0), "eta0: must be > 0");
                require(p.horizon >= 2, "horizon: step_decay needs horizon >= 2");
                // ceil(log2 T) phases of floor(T / P) steps; the last absorbs the rest.
                layout_.phases = std::bit_width(static_cast<std::uint64_t>(p.horizon - 1));
                layout_.phase_length = p.horizon / layout_.phases;
            },
            [](const family::ExpDecay& p) {
                require(positive(p.eta0), "eta0: must be > 0");
                require(p.decay >= 0.0 && std::isfinite(p.decay), "decay: must be >= 0");
            },
            [this](const family::ThreePhase& p) {
                require(positive(p.r_squared), "r_squared: must be > 0");
                require(positive(p.mu), "mu: must be > 0");
                require(std::isfinite(p.kappa) && p.kappa >= 2.0, "kappa: three_phase needs kappa >= 2");
                require(p.horizon >= 3, "horizon: three_phase needs horizon >= 3");
                layout_.first_cut = p.horizon / 3;
                layout_.second_cut = 2 * layout_.first_cut;
                layout_.phases = static_cast<std::int64_t>(std::ceil(std::log2(p.kappa)));
                layout_.phase_length = (p.horizon - layout_.second_cut) / layout_.phases;
            },
        },
        params_);
}

std::string_view Schedule::family_name() const noexcept
{
    return std::visit(overloaded{
                          [](const family::Constant&) { return std::string_view("constant"); },
                          [](const family::PolyDecay&) { return std::string_view("poly_decay"); },
                          [](const family::StepDecay&) { return std::string_view("step_decay"); },
                          [](const family::ExpDecay&) { return std::string_view("exp_decay"); },
                          [](const family::ThreePhase&) { return std::string_view("three_phase"); },
                      },
                      params_);
}

std::optional<std::int64_t> Schedule::horizon() const noexcept
{
    if (auto* s = std::get_if<family::StepDecay>(&params_)) {
        return s->horizon;
    }
    if (auto* s = std::get_if<family::ThreePhase>(&params_)) {
        return s->horizon;
    }
    return std::nullopt;
}

double Schedule::rate_unchecked(std::int64_t t) const
{
    return std::visit(
        overloaded{
            [](const family::Constant& p) { return p.eta0; },
            [t](const family::PolyDecay& p) {
                const double td = static_cast<double>(t);
                const double power = p.alpha == 1.0   ? td
                                     : p.alpha == 0.5 ? std::sqrt(td)
                                                      : std::pow(td, p.alpha);
                return p.a / (p.b + power);
            },
            [this, t](const family::StepDecay& p) {
                const auto phase = std::min((t - 1) / layout_.phase_length + 1, layout_.phases);
                return std::ldexp(p.eta0, -static_cast<int>(phase));
            },
            [t](const family::ExpDecay& p) { return p.eta0 * std::exp(-p.decay * static_cast<double>(t)); },
            [this, t](const family::ThreePhase& p) {
                const auto a = layout_.first_cut;
                const auto b = layout_.second_cut;
                if (t <= a) {
                    return 1.0 / p.r_squared;
                }
                if (t <= b) {
                    return 1.0 / (p.mu * (p.kappa + static_cast<double>(t - a) / 2.0));
                }
                const auto phase = layout_.phase_length > 0
                                       ? std::min((t - b - 1) / layout_.phase_length + 1, layout_.phases)
                                       : std::min(t - b, layout_.phases);
                return 5.0 * std::log2(p.kappa) /
                       (std::ldexp(1.0, static_cast<int>(phase)) * p.mu * static_cast<double>(p.horizon));
            },
        },
        params_);
}

double Schedule::rate(std::int64_t t) const { return rate(t, HorizonPolicy::strict); }

double Schedule::rate(std::int64_t t, HorizonPolicy policy) const
{
    if (t < 1) {
        throw Error(ErrorCode::InvalidStep, "t: steps are 1-indexed, got " + std::to_string(t));
    }
    if (const auto h = horizon(); h && t > *h) {
        if (policy == HorizonPolicy::strict) {
            throw Error(ErrorCode::OutOfHorizon, "t=" + std::to_string(t) + " exceeds horizon " +
                                                     std::to_string(*h));
        }
        t = *h;
    }
    return rate_unchecked(t);
}

std::vector<double> Schedule::rates(std::int64_t horizon_len, HorizonPolicy policy) const
{
    if (horizon_len < 1) {
        throw Error(ErrorCode::InvalidStep, "T: must be >= 1");
    }
    const auto h = horizon();
    if (h && horizon_len > *h && policy == HorizonPolicy::strict) {
        throw Error(ErrorCode::OutOfHorizon, "T=" + std::to_string(horizon_len) +
                                                 " exceeds schedule horizon " + std::to_string(*h));
    }
    std::vector<double> out(static_cast<std::size_t>(horizon_len));
    for (std::int64_t t = 1; t <= horizon_len; ++t) {
        out[static_cast<std::size_t>(t - 1)] = rate_unchecked(h ? std::min(t, *h) : t);
    }
    return out;
}

bool Schedule::operator==(const Schedule& other) const
{
    return to_json(*this) == to_json(other);
}

ScheduleSums schedule_sum(const Schedule& schedule, std::int64_t t_from, std::int64_t t_to)
{
    if (t_from < 1 || t_to < t_from) {
        throw Error(ErrorCode::InvalidStep, "range: need 1 <= t_from <= t_to");
    }
    if (const auto h = schedule.horizon(); h && t_to > *h) {
        throw Error(ErrorCode::OutOfHorizon, "t_to exceeds schedule horizon");
    }
    const auto n = t_to - t_from + 1;
    const auto& layout = schedule.layout();

    CompensatedSum s1, s2;
    auto add_block = [&](std::int64_t count, double eta) {
        s1.add(static_cast<long double>(count) * eta);
        s2.add(static_cast<long double>(count) * eta * eta);
    };
    auto add_direct = [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t t = lo; t <= hi; ++t) {
            const double eta = schedule.rate(t);
            s1.add(eta);
            s2.add(static_cast<long double>(eta) * eta);
        }
    };

    std::visit(
        overloaded{
            [&](const family::Constant& p) { add_block(n, p.eta0); },
            [&](const family::PolyDecay&) { add_direct(t_from, t_to); },
            [&](const family::StepDecay& p) {
                for (std::int64_t phase = 1; phase <= layout.phases; ++phase) {
                    const auto lo = (phase - 1) * layout.phase_length + 1;
                    const auto hi = phase == layout.phases ? p.horizon : phase * layout.phase_length;
                    add_block(overlap(lo, hi, t_from, t_to), std::ldexp(p.eta0, -static_cast<int>(phase)));
                }
            },
            [&](const family::ExpDecay& p) {
                if (p.decay == 0.0) {
                    add_block(n, p.eta0);
                    return;
                }
                // eta0 e^{-d t_from} (1 - e^{-d n}) / (1 - e^{-d})
                auto geometric = [&](double scale, double d) {
                    const long double first = scale * std::exp(-d * static_cast<double>(t_from));
                    return first * std::expm1(-d * static_cast<double>(n)) / std::expm1(-d);
                };
                s1.add(geometric(p.eta0, p.decay));
                s2.add(geometric(p.eta0 * p.eta0, 2.0 * p.decay));
            },
            [&](const family::ThreePhase& p) {
                const auto a = layout.first_cut;
                const auto b = layout.second_cut;
                add_block(overlap(1, a, t_from, t_to), 1.0 / p.r_squared);
                const auto lo2 = std::max(t_from, a + 1);
                const auto hi2 = std::min(t_to, b);
                if (lo2 <= hi2) {
                    add_direct(lo2, hi2);
                }
                const double base = 5.0 * std::log2(p.kappa) / (p.mu * static_cast<double>(p.horizon));
                const auto m = layout.phase_length;
                for (std::int64_t phase = 1; phase <= layout.phases; ++phase) {
                    const auto lo = m > 0 ? b + (phase - 1) * m + 1 : b + phase;
                    const auto hi = phase == layout.phases ? p.horizon : (m > 0 ? b + phase * m : b + phase);
                    add_block(overlap(lo, hi, t_from, t_to), base / std::ldexp(1.0, static_cast<int>(phase)));
                }
            },
        },
        schedule.params());

    return {static_cast<double>(s1.value()), static_cast<double>(s2.value())};
}

std::optional<std::int64_t> accumulation_window(const Schedule& schedule, std::int64_t start,
                                                double lo, std::int64_t t_limit, HorizonPolicy policy)
{
    if (start < 0) {
        throw Error(ErrorCode::InvalidStep, "start: must be >= 0");
    }
    long double acc = 0.0L;
    for (std::int64_t t = start + 1; t <= t_limit; ++t) {
        acc += schedule.rate(t, policy);
        if (acc >= lo) {
            return t - start;
        }
    }
    return std::nullopt;
}

std::string_view to_string(RateWarningKind kind) noexcept
{
    return kind == RateWarningKind::Divergent ? "Divergent" : "ExceedsTheoremPrecondition";
}

std::vector<RateWarning> validate(const Schedule& schedule, const DerivedConstants& constants,
                                  std::int64_t probe_horizon)
{
    const auto probe = schedule.horizon().value_or(probe_horizon);
    const double divergent = 2.0 / constants.r_squared;
    const double precondition = 1.0 / (2.0 * constants.r_squared);
    std::optional<RateWarning> div, pre;
    for (std::int64_t t = 1; t <= probe && !(div && pre); ++t) {
        const double eta = schedule.rate(t);
        if (!div && eta > divergent) {
            div = RateWarning{RateWarningKind::Divergent, t, eta};
        }
        if (!pre && eta > precondition) {
            pre = RateWarning{RateWarningKind::ExceedsTheoremPrecondition, t, eta};
        }
    }
    std::vector<RateWarning> out;
    if (div) {
        out.push_back(*div);
    }
    if (pre) {
        out.push_back(*pre);
    }
    return out;
}

nlohmann::json to_json(const Schedule& schedule)
{
    nlohmann::json j;
    j["family"] = std::string(schedule.family_name());
    std::visit(overloaded{
                   [&](const family::Constant& p) { j["eta0"] = p.eta0; },
                   [&](const family::PolyDecay& p) {
                       j["a"] = p.a;
                       j["b"] = p.b;
                       j["alpha"] = p.alpha;
                   },
                   [&](const family::StepDecay& p) {
                       j["eta0"] = p.eta0;
                       j["horizon"] = p.horizon;
                   },
                   [&](const family::ExpDecay& p) {
                       j["eta0"] = p.eta0;
                       j["decay"] = p.decay;
                   },
                   [&](const family::ThreePhase& p) {
                       j["r_squared"] = p.r_squared;
                       j["mu"] = p.mu;
                       j["kappa"] = p.kappa;
                       j["horizon"] = p.horizon;
                   },
               },
               schedule.params());
    return j;
}

Schedule schedule_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) {
        throw Error(ErrorCode::Config, "schedule: expected a JSON object with a \"family\" field");
    }
    if (!j.contains("family") || !j["family"].is_string()) {
        throw Error(ErrorCode::Config, "schedule.family: missing or not a string");
    }
    const auto fam = j["family"].get<std::string>();
    auto num = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_number()) {
            throw Error(ErrorCode::Config, "schedule." + std::string(key) + ": missing or not a number (family " +
                                               fam + ")");
        }
        return j[key].get<double>();
    };
    auto integer = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_number_integer()) {
            throw Error(ErrorCode::Config, "schedule." + std::string(key) +
                                               ": missing or not an integer (family " + fam + ")");
        }
        return j[key].get<std::int64_t>();
    };
    try {
        if (fam == "constant") {
            return Schedule::constant(num("eta0"));
        }
        if (fam == "poly_decay" || fam == "poly") {
            return Schedule::poly_decay(num("a"), num("b"), num("alpha"));
        }
        if (fam == "step_decay") {
            return Schedule::step_decay(num("eta0"), integer("horizon"));
        }
        if (fam == "exp_decay") {
            return Schedule::exp_decay(num("eta0"), num("decay"));
        }
        if (fam == "three_phase") {
            return Schedule::three_phase(num("r_squared"), num("mu"), num("kappa"), integer("horizon"));
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidSchedule) {
            throw Error(ErrorCode::Config, std::string("schedule (family ") + fam + "): " + e.what());
        }
        throw;
    }
    throw Error(ErrorCode::Config, "schedule.family: unknown family '" + fam + "'");
}

}  // namespace stepdecay
