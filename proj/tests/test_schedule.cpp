#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "stepdecay/error.hpp"
#include "stepdecay/schedule.hpp"

using namespace stepdecay;

namespace {

ErrorCode code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::Io;
}

std::pair<double, double> direct_sum(const Schedule& s, std::int64_t a, std::int64_t b)
{
    long double s1 = 0, s2 = 0;
    for (auto t = a; t <= b; ++t) {
        const double e = s.rate(t);
        s1 += e;
        s2 += static_cast<long double>(e) * e;
    }
    return {static_cast<double>(s1), static_cast<double>(s2)};
}

}  // namespace

TEST_CASE("rate examples")
{
    CHECK(Schedule::poly_decay(1, 0, 1).rate(4) == 0.25);
    const auto sd = Schedule::step_decay(0.4, 1024);
    CHECK(sd.layout().phases == 10);
    CHECK(sd.layout().phase_length == 102);
    CHECK(sd.rate(1) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(sd.rate(102) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(sd.rate(103) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(sd.rate(1024) == doctest::Approx(0.4 / 1024).epsilon(1e-15));

    const auto tp = Schedule::three_phase(1, 0.1, 10, 300);
    CHECK(tp.rate(50) == 1.0);
    CHECK(tp.rate(104) == doctest::Approx(1.0 / (0.1 * 12.0)).epsilon(1e-14));
    // last third: ceil(log2 10) = 4 phases of 25 steps
    CHECK(tp.rate(201) == doctest::Approx(5 * std::log2(10.0) / (2 * 0.1 * 300)).epsilon(1e-14));
    CHECK(tp.rate(300) == doctest::Approx(5 * std::log2(10.0) / (16 * 0.1 * 300)).epsilon(1e-14));
}

TEST_CASE("rate errors and horizon policy")
{
    const auto sd = Schedule::step_decay(1.0, 16);
    CHECK(code_of([&] { (void)sd.rate(0); }) == ErrorCode::InvalidStep);
    CHECK(code_of([&] { (void)sd.rate(17); }) == ErrorCode::OutOfHorizon);
    CHECK(sd.rate(1000, HorizonPolicy::freeze) == sd.rate(16));
    CHECK(code_of([&] { (void)sd.rates(17); }) == ErrorCode::OutOfHorizon);
    CHECK(sd.rates(20, HorizonPolicy::freeze).back() == sd.rate(16));
    CHECK(code_of([] { (void)Schedule::step_decay(1.0, 1); }) == ErrorCode::InvalidSchedule);
    CHECK(code_of([] { (void)Schedule::poly_decay(1.0, 0.0, 2.0); }) == ErrorCode::InvalidSchedule);
    CHECK(code_of([] { (void)Schedule::three_phase(1.0, 1.0, 1.5, 100); }) == ErrorCode::InvalidSchedule);
    CHECK(code_of([] { (void)Schedule::constant(0.0); }) == ErrorCode::InvalidSchedule);
}

TEST_CASE("step decay takes P distinct values halving each phase")
{
    std::mt19937_64 gen(7);
    std::uniform_int_distribution<std::int64_t> hdist(2, 5000);
    for (int rep = 0; rep < 60; ++rep) {
        const auto h = hdist(gen);
        const auto s = Schedule::step_decay(0.7, h);
        const auto rates = s.rates(h);
        std::vector<double> distinct;
        for (const double r : rates) {
            if (distinct.empty() || distinct.back() != r) {
                distinct.push_back(r);
            }
        }
        const auto p = static_cast<std::int64_t>(std::ceil(std::log2(static_cast<double>(h))));
        CHECK(static_cast<std::int64_t>(distinct.size()) == p);
        for (std::size_t i = 1; i < distinct.size(); ++i) {
            CHECK(distinct[i - 1] == 2.0 * distinct[i]);
        }
        CHECK(distinct.front() == 0.35);
    }
}

TEST_CASE("monotone families are nonincreasing")
{
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        const double eta0 = 0.01 + u(gen);
        const std::vector<Schedule> cases{
            Schedule::constant(eta0),
            Schedule::poly_decay(eta0, 10 * u(gen), 0.5 + 0.5 * u(gen)),
            Schedule::exp_decay(eta0, 0.01 * u(gen)),
            Schedule::step_decay(eta0, 2 + static_cast<std::int64_t>(500 * u(gen))),
        };
        for (const auto& s : cases) {
            const auto h = s.horizon().value_or(500);
            for (std::int64_t t = 2; t <= h; ++t) {
                REQUIRE(s.rate(t) <= s.rate(t - 1));
            }
        }
    }
}

TEST_CASE("three-phase has no upward jump after the first third")
{
    for (const double kappa : {2.0, 10.0, 32.0, 1000.0}) {
        const double mu = 0.5;
        const auto s = Schedule::three_phase(kappa * mu, mu, kappa, 999);
        const auto a = s.layout().first_cut;
        CHECK(s.rate(a + 1) == doctest::Approx(1.0 / (mu * (kappa + 0.5))));
        CHECK(s.rate(a + 1) <= s.rate(a));
    }
    // Last third shorter than its phase count: one step per phase, the rest in the final phase.
    const auto tiny = Schedule::three_phase(1024.0, 1.0, 1024.0, 5);
    CHECK(tiny.layout().phase_length == 0);
    CHECK(tiny.rate(3) == doctest::Approx(5.0 * 10.0 / (2.0 * 5.0)));
    CHECK(tiny.rate(5) == doctest::Approx(5.0 * 10.0 / (8.0 * 5.0)));
}

TEST_CASE("schedule_sum examples and closed forms")
{
    auto c = schedule_sum(Schedule::constant(0.1), 1, 10);
    CHECK(c.sum_eta == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(c.sum_eta_sq == doctest::Approx(0.1).epsilon(1e-14));
    auto p = schedule_sum(Schedule::poly_decay(1, 0, 1), 1, 2);
    CHECK(p.sum_eta == 1.5);
    CHECK(p.sum_eta_sq == 1.25);
    auto s = schedule_sum(Schedule::step_decay(0.4, 1024), 1, 102);
    CHECK(s.sum_eta == doctest::Approx(20.4).epsilon(1e-14));
    CHECK(s.sum_eta_sq == doctest::Approx(4.08).epsilon(1e-14));

    CHECK(code_of([] { (void)schedule_sum(Schedule::constant(1), 5, 4); }) == ErrorCode::InvalidStep);
    CHECK(code_of([] { (void)schedule_sum(Schedule::constant(1), 0, 4); }) == ErrorCode::InvalidStep);

    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 40; ++rep) {
        const std::int64_t h = 50 + static_cast<std::int64_t>(3000 * u(gen));
        const double kappa = 2 + 200 * u(gen);
        const std::vector<Schedule> cases{
            Schedule::constant(u(gen) + 0.01),
            Schedule::poly_decay(u(gen) + 0.01, 5 * u(gen), 0.5 + 0.5 * u(gen)),
            Schedule::exp_decay(u(gen) + 0.01, 0.01 * u(gen)),
            Schedule::exp_decay(u(gen) + 0.01, 0.0),
            Schedule::step_decay(u(gen) + 0.01, h),
            Schedule::three_phase(1.0, 1.0 / kappa, kappa, h),
        };
        for (const auto& sched : cases) {
            std::int64_t a = 1 + static_cast<std::int64_t>((h - 1) * u(gen));
            std::int64_t b = a + static_cast<std::int64_t>((h - a) * u(gen));
            const auto got = schedule_sum(sched, a, b);
            const auto want = direct_sum(sched, a, b);
            CHECK(got.sum_eta == doctest::Approx(want.first).epsilon(1e-12));
            CHECK(got.sum_eta_sq == doctest::Approx(want.second).epsilon(1e-12));
        }
    }
}

TEST_CASE("validate flags divergent and precondition rates")
{
    DerivedConstants c{0.1, 1.0, 2.0, 20.0};
    CHECK(validate(Schedule::constant(1.0 / (2 * c.r_squared)), c).empty());
    const auto w = validate(Schedule::constant(3.0 / c.r_squared), c);
    REQUIRE(w.size() == 2);
    CHECK(w[0].kind == RateWarningKind::Divergent);
    CHECK(w[0].first_step == 1);
    CHECK(w[1].kind == RateWarningKind::ExceedsTheoremPrecondition);
    CHECK(validate(Schedule::step_decay(1.0 / (2 * c.r_squared), 777), c).empty());
    // Step decay with eta0 = 1/R^2 halves to 1/(2 R^2) before its first step.
    CHECK(validate(Schedule::step_decay(1.0 / c.r_squared, 777), c).empty());
}

TEST_CASE("accumulation window lands in [1/lambda, 3/lambda]")
{
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        const double lambda = 0.01 + u(gen);
        const auto s = Schedule::poly_decay(2.0 / lambda * (0.1 + 0.9 * u(gen)), 1.0, 0.5 + 0.5 * u(gen));
        const std::int64_t start = static_cast<std::int64_t>(1000 * u(gen));
        const auto delta = accumulation_window(s, start, 1.0 / lambda, 10000000);
        REQUIRE(delta);
        const auto sum = schedule_sum(s, start + 1, start + *delta).sum_eta;
        CHECK(sum >= 1.0 / lambda * (1 - 1e-12));
        CHECK(sum <= 3.0 / lambda);
    }
    CHECK_FALSE(accumulation_window(Schedule::constant(0.1), 0, 100.0, 10));
}

TEST_CASE("schedule JSON round trip and errors name the field")
{
    const std::vector<Schedule> cases{Schedule::constant(0.3), Schedule::poly_decay(1.5, 2.0, 0.5),
                                      Schedule::step_decay(0.4, 1024), Schedule::exp_decay(0.2, 1e-3),
                                      Schedule::three_phase(1, 0.1, 10, 300)};
    for (const auto& s : cases) {
        CHECK(schedule_from_json(to_json(s)) == s);
    }
    auto message_of = [](const nlohmann::json& j) {
        try {
            (void)schedule_from_json(j);
        } catch (const Error& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message_of(nlohmann::json{{"eta0", 1}}).find("family") != std::string::npos);
    CHECK(message_of(nlohmann::json{{"family", "cosine"}}).find("family") != std::string::npos);
    CHECK(message_of(nlohmann::json{{"family", "step_decay"}, {"eta0", 1}}).find("horizon") != std::string::npos);
    CHECK(message_of(nlohmann::json::array()).find("family") != std::string::npos);
}
