#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "stepdecay/error.hpp"
#include "stepdecay/parallel.hpp"
#include "stepdecay/sgd_sim.hpp"

using namespace stepdecay;

TEST_CASE("philox known-answer vectors")
{
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32_10({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u}) ==
          PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("uniform and bounded helpers")
{
    CHECK(uniform_open(0, 0) > 0.0);
    CHECK(uniform_open(~0u, ~0u) < 1.0);
    CHECK(bounded(0, 7) == 0);
    CHECK(bounded(~0ull, 7) == 6);
}

TEST_CASE("one-hot sampler moments")
{
    const ProblemInstance inst({1.0, 0.5}, 1.0, {0, 0}, {0, 0});
    const auto sampler = OneHotSampler::from_instance(inst, 42);
    const int n = 1000000;
    std::vector<double> second(2, 0.0), fourth(2, 0.0), second_sq(2, 0.0);
    double noise2 = 0.0;
    for (int t = 1; t <= n; ++t) {
        const auto x = sampler.draw(t);
        const double g2 = x.gaussian * x.gaussian;
        second[x.index] += g2;
        second_sq[x.index] += g2 * g2;
        fourth[x.index] += g2 * g2;
        noise2 += x.noise * x.noise;
    }
    double r2 = 0.0;
    for (std::size_t k = 0; k < 2; ++k) {
        const double mean = second[k] / n;
        const double var = second_sq[k] / n - mean * mean;
        CHECK(std::fabs(mean - inst.eigenvalues()[k]) <= 3.0 * std::sqrt(var / n));
        // E[|x|^2 x x^T] is diagonal with entries E[x_k^4]; R^2 bounds its ratio to lambda_k.
        r2 = std::max(r2, fourth[k] / n / inst.eigenvalues()[k]);
    }
    const double analytic = derive_constants(inst, OracleKind::one_hot_multiplicative).r_squared;
    CHECK(analytic == 6.0);
    CHECK(std::fabs(r2 - analytic) <= 0.02 * analytic);
    CHECK(noise2 / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("sampler draws are pure in seed and step")
{
    const ProblemInstance inst({1.0, 0.3, 0.2}, 1.0, {0, 0, 0}, {0, 0, 0});
    const auto a = OneHotSampler::from_instance(inst, 7);
    const auto b = OneHotSampler::from_instance(inst, 7);
    const auto c = OneHotSampler::from_instance(inst, 8);
    int same = 0;
    for (int t = 100; t >= 1; --t) {
        CHECK(a.draw(t).gaussian == b.draw(t).gaussian);
        same += a.draw(t).gaussian == c.draw(t).gaussian;
    }
    CHECK(same == 0);
}

TEST_CASE("run_sgd fixed points and suffix")
{
    const ProblemInstance at_opt({1.0, 0.2}, 0.0, {0.3, -2}, {0.3, -2});
    const auto s = OneHotSampler::from_instance(at_opt, 1);
    const auto r = run_sgd(at_opt, Schedule::poly_decay(1, 1, 1), 300, s, {std::int64_t{1}, 0, HorizonPolicy::strict});
    CHECK(r.final_iterate == std::vector<double>{0.3, -2});
    CHECK(*r.suffix_average == std::vector<double>{0.3, -2});

    const auto inst = presets::fig1_2d(10, 1.0);
    const auto s2 = OneHotSampler::from_instance(inst, 3);
    const auto last = run_sgd(inst, Schedule::constant(0.05), 200, s2, {std::int64_t{200}, 0, HorizonPolicy::strict});
    CHECK(*last.suffix_average == last.final_iterate);

    const ProblemInstance wrong({1.0}, 1.0, {0}, {0});
    CHECK_THROWS_AS(run_sgd(wrong, Schedule::constant(0.1), 10, s2), Error);
}

TEST_CASE("suffix average matches the mean of stored iterates")
{
    const auto inst = presets::fig1_2d(20, 1.0);
    const auto sampler = OneHotSampler::from_instance(inst, 11);
    const auto sched = Schedule::constant(0.05);
    const std::int64_t horizon = 1000, from = 400;
    std::vector<double> w(inst.initial_point().begin(), inst.initial_point().end());
    std::vector<long double> sum(2, 0.0L);
    for (std::int64_t t = 1; t <= horizon; ++t) {
        const auto x = sampler.draw(t);
        const double res = (w[x.index] - inst.optimum()[x.index]) * x.gaussian - x.noise;
        w[x.index] -= 0.05 * res * x.gaussian;
        if (t >= from) {
            sum[0] += w[0];
            sum[1] += w[1];
        }
    }
    const auto r = run_sgd(inst, sched, horizon, sampler, {from, 0, HorizonPolicy::strict});
    CHECK(r.final_iterate == w);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK((*r.suffix_average)[k] == doctest::Approx(static_cast<double>(sum[k] / (horizon - from + 1))).epsilon(1e-12));
    }
}

TEST_CASE("coordinates decouple under one-hot draws")
{
    const ProblemInstance inst({1.0, 0.5, 0.25}, 1.0, {0, 0, 0}, {1, 1, 1});
    std::mt19937_64 gen(13);
    std::normal_distribution<double> n01;
    std::uniform_int_distribution<std::size_t> pick(0, 2);
    std::vector<OneHotDraw> draws(500);
    for (auto& d : draws) {
        d = {pick(gen), n01(gen), n01(gen)};
    }
    auto scrambled = draws;
    for (auto& d : scrambled) {
        if (d.index != 0) {
            d.index = d.index == 1 ? 2 : 1;
            d.gaussian = n01(gen);
            d.noise = n01(gen);
        }
    }
    const auto sched = Schedule::constant(0.1);
    const auto a = run_sgd_with_draws(inst, sched, draws);
    const auto b = run_sgd_with_draws(inst, sched, scrambled);
    CHECK(a.final_iterate[0] == b.final_iterate[0]);
    CHECK(a.final_iterate[1] != b.final_iterate[1]);
}

TEST_CASE("ensemble mean tracks the moment recursion")
{
    const ProblemInstance inst({1.0}, 1.0, {0.0}, {1.0});
    const auto sched = Schedule::constant(0.1);
    const auto ens = ensemble_risk(inst, sched, 2000, 2000, 0);
    const double want = oracle::moment_recursion_risk(inst, [](std::int64_t) { return 0.1; }, 2000);
    CHECK(std::fabs(ens.final_iterate.mean - want) <= 3.0 * ens.final_iterate.std_error);
    CHECK(ens.final_iterate.n_seeds == 2000);

    const ProblemInstance at_opt({1.0, 2.0}, 0.0, {1, 1}, {1, 1});
    const auto zero = ensemble_risk(at_opt, sched, 100, 4, 9, std::int64_t{50});
    CHECK(zero.final_iterate.mean == 0.0);
    CHECK(zero.final_iterate.std_error == 0.0);
    CHECK(zero.suffix_average->mean == 0.0);
    CHECK_THROWS_AS(ensemble_risk(inst, sched, 10, 1, 0), Error);
}

TEST_CASE("ensemble is identical across thread counts")
{
    const auto inst = presets::fig1_2d(50, 1.0);
    const auto sched = Schedule::step_decay(1.0 / 6.0, 3000);
    const auto saved = thread_count();
    set_thread_count(1);
    const auto a = ensemble_risk(inst, sched, 3000, 16, 5, std::int64_t{1500});
    set_thread_count(4);
    const auto b = ensemble_risk(inst, sched, 3000, 16, 5, std::int64_t{1500});
    set_thread_count(saved);
    CHECK(a.final_iterate.mean == b.final_iterate.mean);
    CHECK(a.suffix_average->std_error == b.suffix_average->std_error);
}

TEST_CASE("additive risk lower-bounds the simulated risk")
{
    const ProblemInstance inst({1.0, 0.1}, 1.0, {0, 0}, {1, -1});
    const double r2 = derive_constants(inst, OracleKind::one_hot_multiplicative).r_squared;
    const auto sched = Schedule::constant(1.0 / (2 * r2));
    const auto ens = ensemble_risk(inst, sched, 300, 1000, 100);
    CHECK(final_risk(inst, sched, 300).total <= ens.final_iterate.mean + 3 * ens.final_iterate.std_error);
}

TEST_CASE("averaged baseline")
{
    const ProblemInstance at_opt({1.0, 0.5}, 0.0, {0, 0}, {0, 0});
    const auto zero = averaged_baseline(at_opt, 100, 3);
    CHECK(zero.total == 0.0);
    CHECK_THROWS_AS(averaged_baseline(at_opt, 101, 3), Error);

    const auto inst = presets::fig1_2d(10, 1.0);
    const auto rep = averaged_baseline(inst, 20000, 5);
    CHECK(rep.total > 0.0);
    CHECK(rep.bias_risk >= 0.0);
    CHECK(rep.total <= 4.0 * minimax_rate(inst, 20000));
}
