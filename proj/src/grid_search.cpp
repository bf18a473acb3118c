#include "stepdecay/grid_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stepdecay/error.hpp"
#include "stepdecay/exact_oracle.hpp"
#include "stepdecay/parallel.hpp"
#include "stepdecay/sgd_sim.hpp"

namespace stepdecay {
namespace {

constexpr int kMaxExtensions = 3;

bool uses_decay(const std::string& family) { return family == "poly" || family == "exp_decay"; }

void check_axis(const std::vector<double>& grid, const char* name)
{
    if (grid.empty()) {
        throw Error(ErrorCode::Config, std::string(name) + ": grid must be non-empty");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i]) || grid[i] < 0.0) {
            throw Error(ErrorCode::Config, std::string(name) + ": grid values must be finite and >= 0");
        }
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw Error(ErrorCode::Config, std::string(name) + ": grid must be strictly increasing");
        }
    }
}

// Adds one decade beyond the low or high edge, keeping the grid's log spacing.
void extend(std::vector<double>& grid, bool low)
{
    const double ratio = grid.size() > 1 ? grid[1] / grid[0] : 10.0;
    const auto steps = std::max(1, static_cast<int>(std::ceil(std::log(10.0) / std::log(ratio) - 1e-9)));
    if (low) {
        const double edge = grid.front();
        std::vector<double> more;
        for (int i = steps; i >= 1; --i) {
            more.push_back(edge / std::pow(ratio, i));
        }
        grid.insert(grid.begin(), more.begin(), more.end());
    } else {
        const double edge = grid.back();
        for (int i = 1; i <= steps; ++i) {
            grid.push_back(edge * std::pow(ratio, i));
        }
    }
}

double sanitize(double risk) { return std::isnan(risk) ? std::numeric_limits<double>::infinity() : risk; }

}  // namespace

Schedule cell_schedule(const GridSpec& spec, double eta0, double decay, std::int64_t horizon)
{
    if (spec.family == "poly") {
        if (!spec.alpha) {
            throw Error(ErrorCode::Config, "alpha: required for the poly family");
        }
        if (decay <= 0.0) {
            throw Error(ErrorCode::Config, "decay_grid: poly needs decay > 0");
        }
        // eta0 / (1 + b t^alpha) written as a / (b' + t^alpha)
        return Schedule::poly_decay(eta0 / decay, 1.0 / decay, *spec.alpha);
    }
    if (spec.family == "step_decay") {
        return Schedule::step_decay(eta0, horizon);
    }
    if (spec.family == "exp_decay") {
        return Schedule::exp_decay(eta0, decay);
    }
    if (spec.family == "constant") {
        return Schedule::constant(eta0);
    }
    throw Error(ErrorCode::Config, "family: unknown grid family '" + spec.family + "'");
}

SweepResult grid_search(const ProblemInstance& instance, const GridSpec& spec, std::int64_t horizon)
{
    if (horizon < 1) {
        throw Error(ErrorCode::InvalidStep, "T: must be >= 1");
    }
    if (spec.objective == Objective::mc_final_risk && !spec.mc) {
        throw Error(ErrorCode::MissingConfig, "mc: objective mc_final_risk needs a seed configuration");
    }
    check_axis(spec.eta0_grid, "eta0_grid");
    const bool decay_axis = uses_decay(spec.family);
    std::vector<double> eta_grid = spec.eta0_grid;
    std::vector<double> decay_grid = decay_axis ? spec.decay_grid : std::vector<double>{0.0};
    if (decay_axis) {
        check_axis(decay_grid, "decay_grid");
    }
    // Reject bad families before doing any work.
    (void)cell_schedule(spec, eta_grid.front(), decay_grid.front(), horizon);

    auto evaluate = [&](double eta0, double decay) {
        const auto schedule = cell_schedule(spec, eta0, decay, horizon);
        if (spec.objective == Objective::exact_final_risk) {
            return final_risk(instance, schedule, horizon).total;
        }
        return ensemble_risk(instance, schedule, horizon, spec.mc->n_seeds, spec.mc->base_seed)
            .final_iterate.mean;
    };

    SweepResult result;
    while (true) {
        std::vector<std::pair<double, double>> todo;
        for (const double e : eta_grid) {
            for (const double b : decay_grid) {
                if (!result.cells.contains({e, b})) {
                    todo.emplace_back(e, b);
                }
            }
        }
        std::vector<double> risks(todo.size());
        parallel_for(todo.size(), [&](std::size_t i) { risks[i] = sanitize(evaluate(todo[i].first, todo[i].second)); });
        for (std::size_t i = 0; i < todo.size(); ++i) {
            result.cells[todo[i]] = risks[i];
        }

        // Map order is (eta0, decay) ascending, so a strict < keeps the
        // lexicographically smallest cell among ties.
        bool first = true;
        for (const auto& [key, risk] : result.cells) {
            if (first || risk < result.best.risk) {
                result.best = {key.first, key.second, risk};
                first = false;
            }
        }

        const bool eta_low = result.best.eta0 == eta_grid.front();
        const bool eta_high = result.best.eta0 == eta_grid.back();
        const bool dec_low = decay_axis && result.best.decay == decay_grid.front();
        const bool dec_high = decay_axis && result.best.decay == decay_grid.back();
        const bool eta_edge = eta_low || eta_high;
        const bool dec_edge = dec_low || dec_high;

        bool grew = false;
        if (spec.auto_extend && eta_edge && result.eta0_extensions < kMaxExtensions) {
            extend(eta_grid, eta_low);
            ++result.eta0_extensions;
            grew = true;
        }
        if (spec.auto_extend && dec_edge && result.decay_extensions < kMaxExtensions) {
            extend(decay_grid, dec_low);
            ++result.decay_extensions;
            grew = true;
        }
        if (!grew) {
            result.boundary_flag = eta_edge || dec_edge;
            return result;
        }
    }
}

std::vector<double> log_grid(double lo, double hi, std::size_t n)
{
    if (n == 0 || !(lo > 0.0) || !(hi >= lo)) {
        throw Error(ErrorCode::Config, "log_grid: need n >= 1 and 0 < lo <= hi");
    }
    if (n == 1) {
        return {lo};
    }
    std::vector<double> out(n);
    const double step = std::log(hi / lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = lo * std::exp(step * static_cast<double>(i));
    }
    out.back() = hi;
    return out;
}

GridSpec grid_preset(const std::string& name, double kappa, std::int64_t horizon)
{
    GridSpec spec;
    if (name == "poly_t") {
        spec.family = "poly";
        spec.alpha = 1.0;
        spec.decay_grid = log_grid(1.0 / (200.0 * kappa), 5000.0 / kappa, 8);
        spec.eta0_grid = log_grid(1.0 / kappa, 5.0, 8);
    } else if (name == "poly_sqrt_t") {
        spec.family = "poly";
        spec.alpha = 0.5;
        spec.decay_grid = log_grid(1.0 / (2500.0 * kappa), 100.0 / kappa, 8);
        spec.eta0_grid = log_grid(1.0 / (10.0 * kappa), 5.0, 8);
    } else if (name == "step_decay") {
        spec.family = "step_decay";
        spec.eta0_grid = log_grid(1.0 / kappa, 5.0, 8);
    } else if (name == "exp_decay") {
        // Total decay b T between 0.1 and 100.
        const double t = static_cast<double>(horizon);
        spec.family = "exp_decay";
        spec.decay_grid = log_grid(0.1 / t, 100.0 / t, 8);
        spec.eta0_grid = log_grid(1.0 / kappa, 5.0, 8);
    } else {
        throw Error(ErrorCode::Config, "families: unknown grid preset '" + name + "'");
    }
    return spec;
}

}  // namespace stepdecay
