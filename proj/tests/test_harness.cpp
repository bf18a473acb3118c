#include <doctest.h>

#include <cmath>
#include <sstream>

#include "stepdecay/error.hpp"
#include "stepdecay/experiments.hpp"
#include "stepdecay/grid_search.hpp"
#include "stepdecay/parallel.hpp"

using namespace stepdecay;

TEST_CASE("log_grid endpoints and spacing")
{
    const auto g = log_grid(0.01, 100, 5);
    REQUIRE(g.size() == 5);
    CHECK(g.front() == 0.01);
    CHECK(g.back() == 100);
    CHECK(g[2] == doctest::Approx(1.0));
    CHECK(log_grid(3, 3, 1) == std::vector<double>{3});
}

TEST_CASE("single cell grid is best and on the boundary")
{
    const auto inst = presets::fig1_2d(10, 1.0);
    GridSpec spec{"poly", {0.1}, {0.01}, 1.0, Objective::exact_final_risk, false, std::nullopt};
    const auto r = grid_search(inst, spec, 500);
    CHECK(r.cells.size() == 1);
    CHECK(r.best.eta0 == 0.1);
    CHECK(r.best.decay == 0.01);
    CHECK(r.boundary_flag);
    const auto sched = cell_schedule(spec, 0.1, 0.01, 500);
    CHECK(r.best.risk == final_risk(inst, sched, 500).total);
    CHECK(sched.rate(1) == doctest::Approx(0.1 / 1.01));
}

TEST_CASE("ties go to the smaller eta0 then the smaller decay")
{
    const ProblemInstance at_opt({1, 0.1}, 0.0, {0, 0}, {0, 0});
    GridSpec spec{"poly", {0.1, 0.2, 0.4}, {0.01, 0.1, 1.0}, 0.5, Objective::exact_final_risk, false, std::nullopt};
    const auto r = grid_search(at_opt, spec, 100);
    CHECK(r.best.eta0 == 0.1);
    CHECK(r.best.decay == 0.01);
    CHECK(r.best.risk == 0.0);
}

TEST_CASE("grid errors")
{
    const auto inst = presets::fig1_2d(10, 1.0);
    GridSpec mc{"poly", {0.1}, {0.01}, 1.0, Objective::mc_final_risk, false, std::nullopt};
    CHECK_THROWS_WITH_AS(grid_search(inst, mc, 100), doctest::Contains("mc"), Error);
    try {
        (void)grid_search(inst, mc, 100);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingConfig);
    }
    GridSpec unsorted{"poly", {0.2, 0.1}, {0.01}, 1.0, Objective::exact_final_risk, false, std::nullopt};
    CHECK_THROWS_AS(grid_search(inst, unsorted, 100), Error);
    GridSpec empty{"exp_decay", {0.1}, {}, std::nullopt, Objective::exact_final_risk, false, std::nullopt};
    CHECK_THROWS_AS(grid_search(inst, empty, 100), Error);
    GridSpec unknown{"cosine", {0.1}, {0.1}, std::nullopt, Objective::exact_final_risk, false, std::nullopt};
    CHECK_THROWS_WITH_AS(grid_search(inst, unknown, 100), doctest::Contains("family"), Error);
}

TEST_CASE("edge optimum extends the grid by decades")
{
    const auto inst = presets::fig1_2d(10, 1.0);
    GridSpec spec{"step_decay", {1e-4, 2e-4}, {}, std::nullopt, Objective::exact_final_risk, true, std::nullopt};
    const auto r = grid_search(inst, spec, 2000);
    CHECK(r.eta0_extensions >= 1);
    CHECK(r.eta0_extensions <= 3);
    CHECK(r.cells.size() > 2);
    if (!r.boundary_flag) {
        CHECK(r.best.eta0 > 2e-4);
    }
    // Three decades of doubling beyond 2e-4 reach about 0.2 at most.
    CHECK(r.best.eta0 <= 0.5);
}

TEST_CASE("mc objective runs with a seed configuration")
{
    const auto inst = presets::fig1_2d(10, 1.0);
    GridSpec spec{"constant", {0.01, 0.05}, {}, std::nullopt, Objective::mc_final_risk, false, McConfig{4, 1}};
    const auto r = grid_search(inst, spec, 300);
    CHECK(r.cells.size() == 2);
    CHECK(std::isfinite(r.best.risk));
}

TEST_CASE("grid search is parallel invariant")
{
    const auto inst = presets::fig1_2d(50, 1.0);
    const auto spec = grid_preset("poly_t", 50, 5000);
    const auto saved = thread_count();
    set_thread_count(1);
    const auto a = grid_search(inst, spec, 5000);
    set_thread_count(4);
    const auto b = grid_search(inst, spec, 5000);
    set_thread_count(saved);
    CHECK(a.cells == b.cells);
    CHECK(a.best.risk == b.best.risk);
}

TEST_CASE("poly decay loses to step decay on the two-dimensional problem")
{
    const auto inst = presets::fig1_2d(100, 1.0);
    const std::int64_t t = 160000;
    const double poly = grid_search(inst, grid_preset("poly_t", 100, t), t).best.risk;
    const double step = grid_search(inst, grid_preset("step_decay", 100, t), t).best.risk;
    CHECK(poly > step);
}

TEST_CASE("condition sweep table")
{
    ConditionSweepConfig cfg;
    cfg.kappas = {10, 20};
    cfg.horizon = 2000;
    cfg.mc.n_seeds = 3;
    const auto rows = condition_sweep(cfg);
    CHECK(rows.size() == 2 * 4);
    for (const auto& r : rows) {
        CHECK(std::isfinite(r.risk));
        CHECK(std::isfinite(r.normalized));
    }
    CHECK(rows[2].family == "step_decay");
    CHECK(rows[3].family == "averaged_baseline");
    std::ostringstream os;
    write_sweep_csv(os, rows);
    CHECK(os.str().rfind("kappa,family,eta0,decay,risk,normalized,boundary_flag\n", 0) == 0);
    CHECK(sweep_horizon(ConditionSweepConfig{}) == 160000);
    ConditionSweepConfig none;
    none.kappas.clear();
    CHECK_THROWS_AS(condition_sweep(none), Error);
}

TEST_CASE("certify ledger")
{
    const auto ledger = certify_bounds({});
    CHECK(all_gating_pass(ledger));
    for (const auto& e : ledger) {
        CHECK(std::isfinite(e.lhs));
        CHECK(std::isfinite(e.rhs));
        CHECK((e.margin >= 0) == e.pass);
    }
    const auto quiet = certify_bounds({0.0});
    for (const auto& e : quiet) {
        if (e.id.find("variance") != std::string::npos) {
            CHECK(e.lhs == 0.0);
            CHECK(e.pass);
        }
    }
    std::ostringstream os;
    write_ledger_jsonl(os, ledger);
    std::istringstream is(os.str());
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.contains("lhs"));
        CHECK(j.contains("margin"));
        ++n;
    }
    CHECK(n == ledger.size());
}

TEST_CASE("bad iterate census")
{
    const auto inst = presets::fig1_2d(100, 1.0);
    const auto res = bad_iterate_census(inst, Schedule::constant(0.5), 2000, {0.0, 1e9});
    CHECK(res.census[0].bad_count == 2000);
    CHECK(res.census[1].bad_count == 0);
    std::ostringstream os;
    write_census_csv(os, res);
    CHECK(os.str().rfind("tau,bad_count,intervals,max_gap,min_run,tail_sup,tail_argmax\n", 0) == 0);
}
