#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stepdecay/exact_oracle.hpp"
#include "stepdecay/grid_search.hpp"

namespace stepdecay {

struct ConditionSweepConfig {
    std::vector<double> kappas{50.0, 100.0, 200.0, 400.0};
    std::optional<std::int64_t> horizon;  // default: max(kappas)^2
    std::vector<std::string> families{"poly_t", "poly_sqrt_t"};
    double noise_level = 1.0;
    Objective objective = Objective::exact_final_risk;
    McConfig mc;                      // grid seeds for mc objective and baseline seeds
    bool auto_extend = true;
};

struct SweepRow {
    double kappa = 0.0;
    std::string family;
    double eta0 = 0.0;
    double decay = 0.0;
    double risk = 0.0;
    double normalized = 0.0;
    bool boundary_flag = false;
};

std::int64_t sweep_horizon(const ConditionSweepConfig& config);

/// For every kappa: best cell of each family on fig1_2d(kappa), then a
/// step_decay row (unless already listed) and the averaged baseline.
std::vector<SweepRow> condition_sweep(const ConditionSweepConfig& config);

/// Columns kappa,family,eta0,decay,risk,normalized,boundary_flag.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

struct LedgerEntry {
    std::string id;
    std::string description;
    double lhs = 0.0;
    double rhs = 0.0;
    std::string relation;  // "<=" or ">="
    double margin = 0.0;   // positive when the relation holds
    bool pass = false;
    bool gating = true;    // informational entries do not affect the verdict
};

struct CertifyConfig {
    double noise_level = 1.0;
};

std::vector<LedgerEntry> certify_bounds(const CertifyConfig& config);
bool all_gating_pass(const std::vector<LedgerEntry>& ledger);
void write_ledger_jsonl(std::ostream& out, const std::vector<LedgerEntry>& ledger);

/// Tail sup and per-tau census of the normalized statistic.
LimsupResult bad_iterate_census(const ProblemInstance& instance, const Schedule& schedule, std::int64_t t_max,
                                const std::vector<double>& taus, HorizonPolicy policy = HorizonPolicy::strict);

/// Columns tau,bad_count,intervals,max_gap,min_run,tail_sup,tail_argmax.
void write_census_csv(std::ostream& out, const LimsupResult& result);

}  // namespace stepdecay
