#include "bilin/errors.hpp"
#include "bilin/pfp.hpp"
#include "bilin/sim.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace bilin;

namespace {

double rk4_error(double dt)
{
    Matrix a(2, 2);
    a << -1.0, 2.0, -2.0, -1.0;
    const OdeRhs f = [&a](double, const Vector& x) { return Vector(a * x); };
    Vector x(2);
    x << 1.0, 0.5;
    const Vector x0 = x;
    const int steps = static_cast<int>(std::lround(2.0 / dt));
    for (int k = 0; k < steps; ++k) {
        x = rk4_step(f, k * dt, x, dt);
    }
    const Eigen::Vector2d exact = oracle::rotation_exp(-1.0, 2.0, 2.0) * Eigen::Vector2d(x0(0), x0(1));
    return (x - Vector(exact)).norm();
}

Scenario short_scenario(ControlMode mode, double t_end = 0.01)
{
    Scenario sc;
    sc.mode = mode;
    sc.t_end = t_end;
    sc.dt = 1e-5;
    sc.log_decimation = 10;
    return sc;
}

}  // namespace

TEST_CASE("one RK4 step of x' = x")
{
    const OdeRhs f = [](double, const Vector& x) { return x; };
    const Vector x = rk4_step(f, 0.0, Vector::Constant(1, 1.0), 0.1);
    CHECK(x(0) == doctest::Approx(1.105170833).epsilon(1e-9));
}

TEST_CASE("RK4 is fourth order against the matrix exponential")
{
    const double e1 = rk4_error(0.02);
    const double e2 = rk4_error(0.01);
    const double order = std::log2(e1 / e2);
    CHECK(order >= 3.8);
    CHECK(order <= 4.2);
}

TEST_CASE("RK4 rejects non-finite derivatives")
{
    const OdeRhs f = [](double, const Vector& x) { return Vector(x.array() / 0.0); };
    CHECK_THROWS_AS(rk4_step(f, 0.0, Vector::Constant(1, 1.0), 0.1), NumericError);
}

TEST_CASE("scenario validation")
{
    Scenario sc;
    CHECK_NOTHROW(sc.validate());
    sc.dt = 0.0;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
    sc = Scenario{};
    sc.log_decimation = 0;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
    sc = Scenario{};
    sc.events = {{0.2, "G", 1.0}, {0.1, "G", 1.0}};
    CHECK_THROWS_AS(sc.validate(), ConfigError);
    sc.events = {{0.5, "G", 1.0}};
    CHECK_THROWS_AS(sc.validate(), ConfigError);
    CHECK(parse_control_mode("output-feedback") == ControlMode::output_feedback);
    CHECK_THROWS_AS(parse_control_mode("magic"), ConfigError);
    CHECK(parse_pwm_model("switched") == PwmModel::switched);
}

TEST_CASE("logging honours the decimation and the horizon")
{
    const pfp::LoopSpec spec = pfp::LoopSpec::nominal(ControlMode::full_info);
    const SimLog log = simulate(pfp::make_components(spec), short_scenario(ControlMode::full_info));
    CHECK_FALSE(log.failed);
    REQUIRE(log.records.size() == 101);
    CHECK(log.records[1].t == doctest::Approx(1e-4));
    CHECK(log.records.back().t == doctest::Approx(0.01));
    CHECK(std::isnan(log.records.back().v_o));
    CHECK(std::isnan(log.records.back().det_phi));
    CHECK(log.records.back().x_hat.size() == 0);
}

TEST_CASE("the full-information loop tracks the reference on the ideal plant")
{
    pfp::LoopSpec spec = pfp::LoopSpec::nominal(ControlMode::full_info);
    spec.truth.r_source = 0.0;
    Scenario sc = short_scenario(ControlMode::full_info, 0.05);
    const SimLog log = simulate(pfp::make_components(spec), sc);
    REQUIRE_FALSE(log.failed);
    CHECK(std::abs(log.records.back().x(1) - 200.0) <= 2.0);
}

TEST_CASE("events fire at the first step boundary and need a handler")
{
    const pfp::LoopSpec spec = pfp::LoopSpec::nominal(ControlMode::adaptive);
    Scenario sc = short_scenario(ControlMode::adaptive);
    sc.events = {{0.005, "G", 0.02}};
    CHECK_THROWS_AS(simulate(pfp::make_components(spec), sc), ConfigError);

    const SimLog log = simulate(pfp::make_components(spec), sc, pfp::make_event_hook(spec));
    for (const auto& r : log.records) {
        CHECK(r.theta_true(0) == (r.t < 0.005 - 1e-12 ? spec.truth.g_load : 0.02));
    }
}

TEST_CASE("set-point events retarget the reference")
{
    const pfp::LoopSpec spec = pfp::LoopSpec::nominal(ControlMode::full_info);
    Scenario sc = short_scenario(ControlMode::full_info);
    sc.events = {{0.004, "V_d", 210.0}};
    const SimLog log = simulate(pfp::make_components(spec), sc, pfp::make_event_hook(spec));
    CHECK(log.records.front().y_d(0) == 200.0);
    CHECK(log.records.back().y_d(0) == 210.0);
}

TEST_CASE("adaptive logs carry the observer diagnostics")
{
    const pfp::LoopSpec spec = pfp::LoopSpec::nominal(ControlMode::adaptive);
    const SimLog log = simulate(pfp::make_components(spec), short_scenario(ControlMode::adaptive));
    const LogRecord& r = log.records.back();
    CHECK(r.det_phi > 0.0);
    CHECK(r.eps.size() == 1);
    CHECK(std::isfinite(r.v_o));
    CHECK(std::isfinite(r.u_fi_mismatch));
    CHECK(r.x_hat.isApprox(r.z_hat + r.y_filter * r.theta_hat));
    CHECK(log.records.front().mix_mat(0, 0) == 1e-6);
}

TEST_CASE("a destabilised loop is truncated and marked failed")
{
    pfp::LoopSpec spec = pfp::LoopSpec::nominal(ControlMode::full_info);
    spec.saturate = false;
    spec.gains.k_gain = 1e4;
    Scenario sc = short_scenario(ControlMode::full_info, 0.05);
    sc.hold_control = true;
    const SimLog log = simulate(pfp::make_components(spec), sc);
    CHECK(log.failed);
    CHECK_FALSE(log.failure.empty());
    CHECK(log.records.size() < 501);
}

TEST_CASE("switched model averages to the commanded duty")
{
    const pfp::LoopSpec spec = pfp::LoopSpec::nominal(ControlMode::full_info);
    Scenario sc = short_scenario(ControlMode::full_info, 0.01);
    sc.pwm = PwmModel::switched;
    sc.dt = 1e-6;
    sc.log_decimation = 1;
    const SimLog log = simulate(pfp::make_components(spec), sc);
    REQUIRE_FALSE(log.failed);
    for (const auto& r : log.records) {
        CHECK(std::abs(r.u_plant(0)) == 1.0);
    }
}

TEST_CASE("batch runs equal individual runs")
{
    std::vector<BatchJob> jobs;
    for (auto mode : {ControlMode::full_info, ControlMode::output_feedback, ControlMode::adaptive}) {
        const pfp::LoopSpec spec = pfp::LoopSpec::nominal(mode);
        jobs.push_back({pfp::make_components(spec), short_scenario(mode), {}});
    }
    const auto logs = simulate_batch(jobs);
    REQUIRE(logs.size() == 3);
    for (std::size_t k = 0; k < jobs.size(); ++k) {
        const SimLog single = simulate(jobs[k].components, jobs[k].scenario);
        CHECK(single.records.back().x == logs[k].records.back().x);
    }
    jobs[1].scenario.dt = -1.0;
    CHECK_THROWS_AS(simulate_batch(jobs), ConfigError);
}
