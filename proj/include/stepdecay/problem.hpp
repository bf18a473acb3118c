#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace stepdecay {

/// Diagonal streaming least-squares problem
///
///     f(w) = 1/2 E[(y - <w, x>)^2],   E[x x^T] = diag(eigenvalues)
///
/// with label noise of variance `noise_level` and minimizer `optimum`. The
/// object is immutable; the constructor rejects inconsistent data.
class ProblemInstance {
public:
    ProblemInstance(std::vector<double> eigenvalues,
                    double noise_level,
                    std::vector<double> optimum,
                    std::vector<double> initial_point,
                    bool smooth = false);

    std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }
    double noise_level() const noexcept { return noise_level_; }
    std::span<const double> optimum() const noexcept { return optimum_; }
    std::span<const double> initial_point() const noexcept { return initial_point_; }
    std::size_t dim() const noexcept { return eigenvalues_.size(); }

    /// Marks instances built for the non-strongly-convex analysis, where the
    /// smallest eigenvalue shrinks with the horizon.
    bool smooth() const noexcept { return smooth_; }

    /// (w0_k - w*_k)^2
    double initial_error_sq(std::size_t k) const;

    ProblemInstance with_noise_level(double noise_level) const;
    ProblemInstance with_initial_point(std::vector<double> initial_point) const;

private:
    std::vector<double> eigenvalues_;
    double noise_level_;
    std::vector<double> optimum_;
    std::vector<double> initial_point_;
    bool smooth_;
};

enum class OracleKind { additive, one_hot_multiplicative };

struct DerivedConstants {
    double mu = 0.0;          // smallest eigenvalue
    double smoothness = 0.0;  // L, largest eigenvalue
    double r_squared = 0.0;   // fourth-moment constant R^2
    double kappa = 0.0;       // R^2 / mu
};

/// R^2 is L for the additive oracle and 3 d L for one-hot Gaussian covariates
/// (E[g^4] = 3 Var(g)^2 with Var(g) = d lambda).
DerivedConstants derive_constants(const ProblemInstance& instance, OracleKind oracle);

struct RiskReport {
    double bias_risk = 0.0;
    double variance_risk = 0.0;
    double total = 0.0;
    /// total * T / (sigma^2 d); NaN when sigma^2 == 0.
    double normalized = 0.0;

    static RiskReport make(double bias_risk, double variance_risk, double sigma_sq,
                           std::size_t dim, std::int64_t t);
    bool has_normalized() const noexcept;
};

/// 1/2 sum_k lambda_k (w_k - w*_k)^2
double excess_risk(std::span<const double> w, const ProblemInstance& instance);

/// sigma^2 d / T
double minimax_rate(const ProblemInstance& instance, std::int64_t horizon);

namespace presets {

/// Two-block lower-bound instance: the first d/2 coordinates have eigenvalue
/// kappa/3 and start at squared distance 3 sigma^2/kappa, the rest have
/// eigenvalue 1 and start at squared distance sigma^2. d must be even.
ProblemInstance lb_strongly_convex(double kappa, std::size_t dim, double sigma_sq);

/// Two-dimensional synthetic problem with eigenvalues {1, 1/kappa}. Each
/// coordinate starts with excess risk sigma^2, so the initial risk is d sigma^2.
ProblemInstance fig1_2d(double kappa, double sigma_sq);

/// Smooth-case construction for horizon T: d/2 unit eigenvalues and d/2
/// eigenvalues 1/sqrt(T); starting squared distances sigma^2/kappa and sigma^2
/// with kappa = d sqrt(T).
ProblemInstance smooth_lb(std::int64_t horizon, std::size_t dim, double sigma_sq);

/// Looks up a preset by name. Parameters come from `params`
/// ("kappa", "noise_level", "dim", "T").
ProblemInstance by_name(const std::string& name, const nlohmann::json& params);

}  // namespace presets

nlohmann::json to_json(const ProblemInstance& instance);
ProblemInstance instance_from_json(const nlohmann::json& j);

}  // namespace stepdecay
