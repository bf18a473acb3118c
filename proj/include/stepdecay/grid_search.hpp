#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stepdecay/problem.hpp"
#include "stepdecay/schedule.hpp"

namespace stepdecay {

enum class Objective { exact_final_risk, mc_final_risk };

struct McConfig {
    std::int64_t n_seeds = 5;
    std::uint64_t base_seed = 0;
};

/// Two-axis search space. `family` is one of poly, step_decay, exp_decay,
/// constant. decay means b in eta0 / (1 + b t^alpha) for poly, the exponent
/// rate for exp_decay, and is ignored for step_decay and constant.
struct GridSpec {
    std::string family;
    std::vector<double> eta0_grid;
    std::vector<double> decay_grid;
    std::optional<double> alpha;
    Objective objective = Objective::exact_final_risk;
    bool auto_extend = true;
    std::optional<McConfig> mc;
};

struct Cell {
    double eta0 = 0.0;
    double decay = 0.0;
    double risk = 0.0;
};

struct SweepResult {
    std::map<std::pair<double, double>, double> cells;
    Cell best;
    bool boundary_flag = false;
    int eta0_extensions = 0;
    int decay_extensions = 0;
};

/// Schedule for one grid cell.
Schedule cell_schedule(const GridSpec& spec, double eta0, double decay, std::int64_t horizon);

/// Final-iterate risk of every cell. While the best cell sits on an edge the
/// grid grows by one decade on that side, at most three times per axis.
/// Ties go to the smaller eta0, then the smaller decay; NaN counts as +inf.
SweepResult grid_search(const ProblemInstance& instance, const GridSpec& spec, std::int64_t horizon);

/// n points log-spaced over [lo, hi].
std::vector<double> log_grid(double lo, double hi, std::size_t n);

/// Named grids: poly_t, poly_sqrt_t, step_decay, exp_decay.
GridSpec grid_preset(const std::string& name, double kappa, std::int64_t horizon);

}  // namespace stepdecay
