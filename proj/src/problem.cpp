#include "stepdecay/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stepdecay/error.hpp"

namespace stepdecay {

ProblemInstance::ProblemInstance(std::vector<double> eigenvalues,
                                 double noise_level,
                                 std::vector<double> optimum,
                                 std::vector<double> initial_point,
                                 bool smooth)
    : eigenvalues_(std::move(eigenvalues)),
      noise_level_(noise_level),
      optimum_(std::move(optimum)),
      initial_point_(std::move(initial_point)),
      smooth_(smooth)
{
    if (eigenvalues_.empty()) {
        throw Error(ErrorCode::InvalidInstance, "eigenvalues: empty spectrum");
    }
    for (double lambda : eigenvalues_) {
        if (!(lambda > 0.0) || !std::isfinite(lambda)) {
            throw Error(ErrorCode::InvalidInstance, "eigenvalues: entries must be finite and > 0");
        }
    }
    if (!(noise_level_ >= 0.0) || !std::isfinite(noise_level_)) {
        throw Error(ErrorCode::InvalidInstance, "noise_level: must be finite and >= 0");
    }
    if (optimum_.size() != eigenvalues_.size()) {
        throw Error(ErrorCode::InvalidInstance, "optimum: length differs from eigenvalues");
    }
    if (initial_point_.size() != eigenvalues_.size()) {
        throw Error(ErrorCode::InvalidInstance, "initial_point: length differs from eigenvalues");
    }
}

double ProblemInstance::initial_error_sq(std::size_t k) const
{
    const double e = initial_point_.at(k) - optimum_.at(k);
    return e * e;
}

ProblemInstance ProblemInstance::with_noise_level(double noise_level) const
{
    return ProblemInstance(eigenvalues_, noise_level, optimum_, initial_point_, smooth_);
}

ProblemInstance ProblemInstance::with_initial_point(std::vector<double> initial_point) const
{
    return ProblemInstance(eigenvalues_, noise_level_, optimum_, std::move(initial_point), smooth_);
}

DerivedConstants derive_constants(const ProblemInstance& instance, OracleKind oracle)
{
    const auto spectrum = instance.eigenvalues();
    if (spectrum.empty()) {
        throw Error(ErrorCode::InvalidInstance, "eigenvalues: empty spectrum");
    }
    const auto [lo, hi] = std::minmax_element(spectrum.begin(), spectrum.end());
    DerivedConstants c;
    c.mu = *lo;
    c.smoothness = *hi;
    c.r_squared = oracle == OracleKind::additive
                      ? c.smoothness
                      : 3.0 * static_cast<double>(instance.dim()) * c.smoothness;
    c.kappa = c.r_squared / c.mu;
    return c;
}

RiskReport RiskReport::make(double bias_risk, double variance_risk, double sigma_sq,
                            std::size_t dim, std::int64_t t)
{
    RiskReport r;
    r.bias_risk = bias_risk;
    r.variance_risk = variance_risk;
    r.total = bias_risk + variance_risk;
    r.normalized = sigma_sq > 0.0
                       ? r.total * static_cast<double>(t) / (sigma_sq * static_cast<double>(dim))
                       : std::numeric_limits<double>::quiet_NaN();
    return r;
}

bool RiskReport::has_normalized() const noexcept { return !std::isnan(normalized); }

double excess_risk(std::span<const double> w, const ProblemInstance& instance)
{
    if (w.size() != instance.dim()) {
        throw Error(ErrorCode::InvalidInstance, "w: dimension mismatch");
    }
    const auto lambda = instance.eigenvalues();
    const auto opt = instance.optimum();
    long double acc = 0.0L;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const long double e = static_cast<long double>(w[k]) - opt[k];
        acc += lambda[k] * e * e;
    }
    return static_cast<double>(0.5L * acc);
}

double minimax_rate(const ProblemInstance& instance, std::int64_t horizon)
{
    if (horizon < 1) {
        throw Error(ErrorCode::InvalidStep, "T: must be >= 1");
    }
    return instance.noise_level() * static_cast<double>(instance.dim()) /
           static_cast<double>(horizon);
}

namespace presets {

ProblemInstance lb_strongly_convex(double kappa, std::size_t dim, double sigma_sq)
{
    if (dim < 2 || dim % 2 != 0) {
        throw Error(ErrorCode::InvalidInstance, "dim: lb_strongly_convex needs an even dimension");
    }
    if (!(kappa > 0.0)) {
        throw Error(ErrorCode::InvalidInstance, "kappa: must be > 0");
    }
    std::vector<double> eig(dim), w0(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        const bool stiff = k < dim / 2;
        eig[k] = stiff ? kappa / 3.0 : 1.0;
        w0[k] = std::sqrt(stiff ? 3.0 * sigma_sq / kappa : sigma_sq);
    }
    return ProblemInstance(std::move(eig), sigma_sq, std::vector<double>(dim, 0.0), std::move(w0));
}

ProblemInstance fig1_2d(double kappa, double sigma_sq)
{
    if (!(kappa >= 1.0)) {
        throw Error(ErrorCode::InvalidInstance, "kappa: must be >= 1");
    }
    std::vector<double> eig{1.0, 1.0 / kappa};
    std::vector<double> w0(2);
    for (std::size_t k = 0; k < 2; ++k) {
        w0[k] = std::sqrt(2.0 * sigma_sq / eig[k]);
    }
    return ProblemInstance(std::move(eig), sigma_sq, {0.0, 0.0}, std::move(w0));
}

ProblemInstance smooth_lb(std::int64_t horizon, std::size_t dim, double sigma_sq)
{
    if (dim < 2 || dim % 2 != 0) {
        throw Error(ErrorCode::InvalidInstance, "dim: smooth_lb needs an even dimension");
    }
    if (horizon < 2) {
        throw Error(ErrorCode::InvalidInstance, "T: smooth_lb needs T >= 2");
    }
    const double small = 1.0 / std::sqrt(static_cast<double>(horizon));
    const double kappa = static_cast<double>(dim) / small;
    std::vector<double> eig(dim), w0(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        const bool flat = k >= dim / 2;
        eig[k] = flat ? small : 1.0;
        w0[k] = std::sqrt(flat ? sigma_sq : sigma_sq / kappa);
    }
    return ProblemInstance(std::move(eig), sigma_sq, std::vector<double>(dim, 0.0), std::move(w0),
                           true);
}

ProblemInstance by_name(const std::string& name, const nlohmann::json& params)
{
    auto number = [&](const char* key, double fallback) {
        if (!params.contains(key)) {
            return fallback;
        }
        if (!params[key].is_number()) {
            throw Error(ErrorCode::Config, std::string("instance.") + key + ": expected a number");
        }
        return params[key].get<double>();
    };
    const double sigma_sq = number("noise_level", 1.0);
    if (name == "fig1_2d") {
        return fig1_2d(number("kappa", 100.0), sigma_sq);
    }
    if (name == "lb_strongly_convex") {
        return lb_strongly_convex(number("kappa", 64.0),
                                  static_cast<std::size_t>(number("dim", 2.0)), sigma_sq);
    }
    if (name == "smooth_lb") {
        return smooth_lb(static_cast<std::int64_t>(number("T", 10000.0)),
                         static_cast<std::size_t>(number("dim", 2.0)), sigma_sq);
    }
    throw Error(ErrorCode::Config, "instance.preset: unknown preset '" + name + "'");
}

}  // namespace presets

nlohmann::json to_json(const ProblemInstance& instance)
{
    nlohmann::json j;
    j["eigenvalues"] = std::vector<double>(instance.eigenvalues().begin(), instance.eigenvalues().end());
    j["noise_level"] = instance.noise_level();
    j["optimum"] = std::vector<double>(instance.optimum().begin(), instance.optimum().end());
    j["initial_point"] =
        std::vector<double>(instance.initial_point().begin(), instance.initial_point().end());
    if (instance.smooth()) {
        j["smooth"] = true;
    }
    return j;
}

ProblemInstance instance_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) {
        throw Error(ErrorCode::Config, "instance: expected a JSON object");
    }
    auto vec = [&](const char* key) {
        if (!j.contains(key)) {
            throw Error(ErrorCode::Config, std::string("instance.") + key + ": missing");
        }
        try {
            return j.at(key).get<std::vector<double>>();
        } catch (const nlohmann::json::exception&) {
            throw Error(ErrorCode::Config, std::string("instance.") + key + ": expected an array of numbers");
        }
    };
    auto eig = vec("eigenvalues");
    if (!j.contains("noise_level") || !j["noise_level"].is_number()) {
        throw Error(ErrorCode::Config, "instance.noise_level: missing or not a number");
    }
    const double sigma_sq = j["noise_level"].get<double>();
    auto opt = j.contains("optimum") ? vec("optimum") : std::vector<double>(eig.size(), 0.0);
    auto w0 = vec("initial_point");
    const bool smooth = j.value("smooth", false);
    return ProblemInstance(std::move(eig), sigma_sq, std::move(opt), std::move(w0), smooth);
}

}  // namespace stepdecay
