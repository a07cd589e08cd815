#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

#include "realize/errors.hpp"
#include "realize/realizability.hpp"
#include "realize/simulation.hpp"

#include <cmath>
#include <random>

using namespace realize;

TEST_CASE("constraint residual examples") {
    const AffineSystem pend = fixture::pendulum();
    const auto circle = fixture::analytic({"sin(t)", "cos(t)"}, 0, 10);
    for (double t : {0.0, 1.3, 7.0}) {
        CHECK(constraint_residual(pend, circle, t).norm() < 1e-15);
    }
    const auto line = fixture::analytic({"t", "t"}, 0, 2);
    CHECK(constraint_residual(pend, line, 0.0) == Vector{{1.0, 0.0}});
    CHECK(constraint_residual(pend, line, 2.0) == Vector{{-1.0, 0.0}});

    // square full-rank B: Q = 0, nothing is constrained
    const AffineSystem full = load_system(
        "[system]\nn = 2\np = 2\n[dynamics]\nR1 = x2\nR2 = x1^2\n[input]\nB1 = 1, 0\nB2 = 1, 2\n"
        "[initial]\nx0 = 0, 0\n");
    const auto wild = fixture::analytic({"exp(t)", "t^3"}, 0, 1);
    CHECK(constraint_residual(full, wild, 0.4).norm() < 1e-14);
    CHECK_THROWS_AS(constraint_residual(pend, fixture::analytic({"t"}, 0, 1), 0.1), DimensionError);
}

TEST_CASE("realizability verdicts") {
    const AffineSystem pend = fixture::pendulum();
    const auto circle = fixture::analytic({"sin(t)", "cos(t)"}, 0, 10);
    const TimeGrid grid = TimeGrid::uniform(0, 10, 1000);
    const auto ok = check_realizable(pend, circle, grid);
    CHECK(ok.verdict == Verdict::Realizable);
    CHECK(ok.realizable());
    CHECK(ok.per_time_residuals.size() == grid.size());

    const auto mism = check_realizable(pend.with_initial_state(Vector::Zero(2)), circle, grid);
    CHECK(mism.verdict == Verdict::InitialMismatch);
    CHECK(mism.initial_error == doctest::Approx(1.0));

    const auto line = fixture::analytic({"t", "t"}, 0, 2);
    const TimeGrid g2 = TimeGrid::uniform(0, 2, 20);
    const auto viol = check_realizable(pend.with_initial_state(Vector::Zero(2)), line, g2);
    CHECK(viol.verdict == Verdict::ConstraintViolated);
    CHECK(viol.max_constraint_residual >= 1.0);
    CHECK(check_realizable(pend, line, g2).verdict == Verdict::Both);
    CHECK(to_string(Verdict::Both) == "Both");
}

TEST_CASE("loosening tolerances never breaks a Realizable verdict") {
    const AffineSystem pend = fixture::pendulum();
    const TimeGrid grid = TimeGrid::uniform(0, 2, 50);
    const std::vector<std::vector<std::string>> cases = {
        {"sin(t)", "cos(t)"}, {"t^2", "2*t"}, {"t", "t"}, {"1e-9*t + sin(t)", "cos(t)"}};
    for (const auto& c : cases) {
        const auto xd = fixture::analytic(c, 0, 2);
        for (double tc : {1e-12, 1e-8, 1e-4, 1.0, 10.0}) {
            for (double ti : {1e-12, 1e-6, 1.0, 10.0}) {
                const bool tight = check_realizable(pend, xd, grid, tc, ti).realizable();
                const bool loose = check_realizable(pend, xd, grid, tc * 10, ti * 10).realizable();
                CHECK((!tight || loose));
            }
        }
    }
}

TEST_CASE("control synthesis examples") {
    const AffineSystem pend = fixture::pendulum();
    const TimeGrid grid = TimeGrid::uniform(0, 2, 200);
    const auto circle = fixture::analytic({"sin(t)", "cos(t)"}, 0, 2);
    const ControlSignal u = synthesize_control(pend, circle, grid);
    CHECK(u.samples()[0](0) == 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid[i];
        CHECK(u.samples()[i](0) == doctest::Approx(-std::sin(t) + std::sin(std::sin(t))).epsilon(1e-14));
    }
    CHECK_FALSE(u.forced());

    const auto parabola = fixture::analytic({"t^2", "2*t"}, 0, 2);
    const ControlSignal up = synthesize_control(pend.with_initial_state(Vector::Zero(2)), parabola, grid);
    CHECK(up.samples()[100](0) == doctest::Approx(2.0 + std::sin(1.0)).epsilon(1e-14));

    const auto line = fixture::analytic({"t", "t"}, 0, 2);
    CHECK_THROWS_AS(synthesize_control(pend, line, grid), NotRealizable);
    SynthesisOptions force;
    force.force = true;
    const ControlSignal uf = synthesize_control(pend, line, grid, force);
    CHECK(uf.forced());
}

TEST_CASE("uncontrolled solutions need no control") {
    const AffineSystem osc = fixture::harmonic_oscillator();
    const TimeGrid grid = TimeGrid::uniform(0, 5, 500);
    const auto xd = fixture::analytic({"sin(t)", "cos(t)"}, 0, 5);
    CHECK(synthesize_control(osc, xd, grid).sup_norm() <= 1e-15);

    // numerically integrated free pendulum motion, sampled
    const AffineSystem pend = fixture::pendulum().with_initial_state(Vector{{0.3, 0.0}});
    const TimeGrid fine = TimeGrid::uniform(0, 3, 30000);
    const auto states = integrate_rk4(
        [&](double, const Vector& x) { return pend.drift(x); }, pend.x0(), fine);
    std::vector<Vector> dx;
    for (const auto& x : states) {
        dx.push_back(pend.drift(x));
    }
    const auto free = DesiredTrajectory::sampled(fine, states, dx);
    CHECK(synthesize_control(pend, free, fine).sup_norm() <= 1e-6);
}

TEST_CASE("P/Q split reconstructs the full defect for any trajectory") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::vector<AffineSystem> systems = {fixture::pendulum(), fixture::devasia(),
                                               builtin_example("fitzhugh-nagumo")};
    for (const auto& sys : systems) {
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<std::string> xs;
            for (int i = 0; i < sys.n(); ++i) {
                char buf[128];
                std::snprintf(buf, sizeof buf, "%.6f*sin(%.6f*t) + %.6f*t^2", u(rng), 2 * u(rng), u(rng));
                xs.emplace_back(buf);
            }
            const auto xd = fixture::analytic(xs, 0, 1);
            const TimeGrid grid = TimeGrid::uniform(0, 1, 20);
            SynthesisOptions force;
            force.force = true;
            const ControlSignal ctl = synthesize_control(sys, xd, grid, force);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const Vector x = xd.value(grid[i]);
                const Vector defect = xd.derivative(grid[i]) - sys.drift(x);
                const Vector split = sys.input_matrix(x) * ctl.samples()[i] +
                                     constraint_residual(sys, xd, grid[i]);
                CHECK(oracle::max_abs(split - defect) <= 1e-10);
            }
        }
    }
}

TEST_CASE("generalized inverses give the same control on realizable trajectories") {
    const AffineSystem pend = fixture::pendulum();
    const TimeGrid grid = TimeGrid::uniform(0, 2, 100);
    const auto circle = fixture::analytic({"sin(t)", "cos(t)"}, 0, 2);
    const ControlSignal ref = synthesize_control(pend, circle, grid);
    const ControlSignal k1 = synthesize_control_generalized(pend, circle, Matrix{{0.3, 1.7}}, grid);
    const ControlSignal kt = synthesize_control_generalized(
        pend, circle, KernelFunction([&](const Vector& x) -> Matrix {
            return pend.input_matrix(x).transpose();
        }),
        grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(std::fabs(k1.samples()[i](0) - ref.samples()[i](0)) <= 1e-10);
        CHECK(std::fabs(kt.samples()[i](0) - ref.samples()[i](0)) <= 1e-12);
    }
    CHECK_THROWS_AS(synthesize_control_generalized(pend, circle, Matrix{{1.0, 0.0}}, grid),
                    RankDeficient);
}

TEST_CASE("output residual checks") {
    const AffineSystem dev = fixture::devasia();
    // y = x1 - 3 x3 holds identically for these closed forms with y_d = sin t
    const auto xd = fixture::analytic(
        {"1.5*(exp(t) - sin(t) - cos(t)) + sin(t)", "0", "0.5*(exp(t) - sin(t) - cos(t))", "0"}, 0, 2);
    const TimeGrid grid = TimeGrid::uniform(0, 2, 200);
    const auto yd = fixture::output({"sin(t)"}, 0, 2);
    CHECK(verify_output_realization(dev, xd, yd, grid).max_residual <= 1e-9);
    const auto shifted = fixture::output({"sin(t) + 0.1"}, 0, 2);
    const auto r = verify_output_realization(dev, xd, shifted, grid);
    CHECK(r.max_residual == doctest::Approx(0.1).epsilon(1e-9));
    CHECK_FALSE(r.within_tolerance);

    const AffineSystem pend = fixture::pendulum();
    const auto circle = fixture::analytic({"sin(t)", "cos(t)"}, 0, 2);
    const auto y_circle = fixture::output({"sin(t)"}, 0, 2);
    CHECK(verify_output_realization(pend, circle, y_circle, grid).max_residual == 0.0);
    const AffineSystem no_out = load_system(
        "[system]\nn = 1\np = 1\n[dynamics]\nR1 = x1\n[input]\nB1 = 1\n[initial]\nx0 = 0\n");
    CHECK_THROWS_AS(verify_output_realization(no_out, fixture::analytic({"t"}, 0, 2), y_circle, grid),
                    NoOutputDefined);
}
