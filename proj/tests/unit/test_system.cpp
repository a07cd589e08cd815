#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

#include "realize/errors.hpp"
#include "realize/system.hpp"

#include <cmath>
#include <random>

using namespace realize;

namespace {

const char* kPendulumText = R"(
# pendulum
[system]
n = 2
p = 1
[dynamics]
R1 = x2
R2 = -sin(x1)
[input]
B1 = 0
B2 = 1
[initial]
x0 = 0, 1
)";

}  // namespace

TEST_CASE("config parsing") {
    const Config cfg = Config::parse("# c\n[a]\nk = v  # trailing\n\n[plan]\nx1 <- ode(row_1)\n");
    CHECK(cfg.get("a", "k") == std::optional<std::string>("v"));
    CHECK_FALSE(cfg.get("a", "missing"));
    CHECK(cfg.section("plan")->lines.size() == 1);
    CHECK_THROWS_AS(cfg.require("a", "missing"), ConfigError);
    CHECK_THROWS_AS(Config::parse("k = v\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[a]\njunk\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[a]\nk=1\nk=2\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[a]\n[a]\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[a\n"), ConfigError);
    Config c2 = cfg;
    c2.set("a.k", "w");
    c2.set("time.t1", "3");
    CHECK(c2.get("a", "k") == std::optional<std::string>("w"));
    CHECK(c2.get("time", "t1") == std::optional<std::string>("3"));
    CHECK_THROWS_AS(c2.set("nodot", "1"), ConfigError);
    CHECK(parse_real(" 1e-3 ", "x") == 1e-3);
    CHECK_THROWS_AS(parse_real("1x", "x"), ConfigError);
    CHECK_THROWS_AS(parse_real("inf", "x"), ConfigError);
    CHECK_THROWS_AS(parse_int("2.5", "x"), ConfigError);
    CHECK(split("a, b ,c", ',') == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("loading the pendulum from text") {
    const AffineSystem sys = load_system(kPendulumText);
    CHECK(sys.n() == 2);
    CHECK(sys.p() == 1);
    CHECK(sys.m() == 0);
    CHECK_FALSE(sys.has_output());
    const Dynamics d = eval_dynamics(sys, 0.0, Vector{{0.5, 2.0}});
    CHECK(d.drift(0) == 2.0);
    CHECK(d.drift(1) == -std::sin(0.5));
    CHECK(d.input == Matrix{{0.0}, {1.0}});
    CHECK_THROWS_AS(sys.output_matrix(), NoOutputDefined);
    CHECK_THROWS_AS(sys.output_value(Vector::Zero(2)), NoOutputDefined);
    CHECK_THROWS_AS(sys.drift(Vector::Zero(3)), DimensionError);
}

TEST_CASE("config errors") {
    std::string missing_x0 = kPendulumText;
    missing_x0 = missing_x0.substr(0, missing_x0.find("[initial]"));
    CHECK_THROWS_AS(load_system(missing_x0), ConfigError);
    CHECK_THROWS_AS(load_system("[system]\nn = 2\n"), ConfigError);
    CHECK_THROWS_AS(load_system(std::string(kPendulumText) + "[output]\nC1 = 1\n"), ConfigError);
    CHECK_THROWS_AS(load_system(std::string(kPendulumText) + "[output]\nC1 = 1, 0\nC2 = 2, 0\n"),
                    ConfigError);
    std::string bad_expr = kPendulumText;
    bad_expr.replace(bad_expr.find("-sin(x1)"), 8, "-sin(x3)");
    CHECK_THROWS_AS(load_system(bad_expr), ConfigError);
    std::string time_dep = kPendulumText;
    time_dep.replace(time_dep.find("-sin(x1)"), 8, "-sin(t)");
    CHECK_THROWS_AS(load_system(time_dep), ConfigError);
    std::string extra = kPendulumText;
    extra.replace(extra.find("R1 = x2"), 7, "R1 = x2\nR3 = x1");
    CHECK_THROWS_AS(load_system(extra), ConfigError);
    CHECK_THROWS_AS(load_system("[system]\nexample = nope\n"), ConfigError);
    CHECK_THROWS_AS(load_system("[system]\nexample = devasia4\nn = 4\n"), ConfigError);
    CHECK_THROWS_AS(builtin_example("nope"), UnknownExample);
}

TEST_CASE("zero input column loads but fails at evaluation") {
    std::string zero_b = kPendulumText;
    zero_b.replace(zero_b.find("B2 = 1"), 6, "B2 = 0");
    const AffineSystem sys = load_system(zero_b);
    CHECK_THROWS_AS(sys.input_matrix(sys.x0()), RankDeficient);
}

TEST_CASE("built-in examples") {
    const AffineSystem dev = fixture::devasia();
    CHECK(dev.n() == 4);
    CHECK(dev.p() == 1);
    CHECK(dev.m() == 1);
    CHECK(dev.output_matrix() == Matrix{{1.0, 0.0, -3.0, 0.0}});
    const Dynamics d = eval_dynamics(dev, 0.0, Vector{{1.0, 0.0, 0.0, 0.0}});
    CHECK(d.drift == Vector{{-1.0, 1.0, 1.0, 0.0}});
    CHECK(d.input == Matrix{{0.0}, {2.0}, {0.0}, {0.0}});
    const double b2 = dev.input_matrix(Vector{{0.0, 0.0, 0.0, M_PI / 2}})(1, 0);
    CHECK(b2 == doctest::Approx(3.0).epsilon(1e-15));

    const AffineSystem pend = fixture::pendulum();
    CHECK(pend.x0() == Vector{{0.0, 1.0}});
    CHECK(pend.drift(Vector{{0.3, -0.2}}) == Vector{{-0.2, -std::sin(0.3)}});
    CHECK(pend.input_matrix(Vector::Zero(2)) == Matrix{{0.0}, {1.0}});

    const AffineSystem fhn = builtin_example("fitzhugh-nagumo");
    const Vector r = fhn.drift(Vector{{1.0, 0.5}});
    CHECK(r(0) == doctest::Approx(1.0 - 1.0 / 3.0 - 0.5).epsilon(1e-15));
    CHECK(r(1) == doctest::Approx(0.08 * (1.0 + 0.7 - 0.4)).epsilon(1e-15));
    CHECK(fhn.input_matrix(Vector::Zero(2)) == Matrix{{1.0}, {0.0}});

    CHECK(builtin_names().size() == 3);
    for (const auto& name : builtin_names()) {
        CHECK_FALSE(builtin_description(name).empty());
        CHECK(builtin_example(name).name() == name);
    }
    // linear drift at the origin
    const AffineSystem lin = load_system(
        "[system]\nn = 2\np = 1\n[dynamics]\nR1 = 2*x1 - x2\nR2 = x1\n[input]\nB1 = 1\nB2 = 0\n"
        "[initial]\nx0 = 0, 0\n");
    CHECK(lin.drift(Vector::Zero(2)) == Vector::Zero(2));
}

TEST_CASE("example overrides keep the built-in dynamics") {
    const AffineSystem sys =
        load_system("[system]\nexample = mechanical-pendulum\n[output]\nC1 = 0, 1\n[initial]\nx0 = 0.5, 0\n");
    CHECK(sys.output_matrix() == Matrix{{0.0, 1.0}});
    CHECK(sys.x0() == Vector{{0.5, 0.0}});
    CHECK(sys.drift(Vector{{0.0, 3.0}})(0) == 3.0);
    const AffineSystem nl = load_system("[system]\nexample = devasia4\n[output]\nh1 = x1^2 + x3\n");
    CHECK_FALSE(nl.has_linear_output());
    CHECK(nl.output_value(Vector{{2.0, 0.0, 1.0, 0.0}})(0) == 5.0);
    CHECK_THROWS_AS(nl.output_matrix(), UnsupportedStructure);
}

TEST_CASE("printing and reloading reproduces the dynamics") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (const auto& name : builtin_names()) {
        const AffineSystem a = builtin_example(name);
        const AffineSystem b = load_system(print_system(a));
        CHECK(b.x0() == a.x0());
        CHECK(b.m() == a.m());
        for (int k = 0; k < 100; ++k) {
            Vector x(a.n());
            for (int i = 0; i < a.n(); ++i) {
                x(i) = u(rng);
            }
            const Vector ra = a.drift(x), rb = b.drift(x);
            const Matrix ba = a.input_matrix(x), bb = b.input_matrix(x);
            for (int i = 0; i < a.n(); ++i) {
                CHECK(std::fabs(ra(i) - rb(i)) <= 1e-15 * std::max(1.0, std::fabs(ra(i))));
                CHECK(std::fabs(ba(i, 0) - bb(i, 0)) <= 1e-15 * std::max(1.0, std::fabs(ba(i, 0))));
            }
        }
    }
}

TEST_CASE("devasia input projector is constant") {
    const AffineSystem dev = fixture::devasia();
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    Matrix expected = Matrix::Zero(4, 4);
    expected(1, 1) = 1.0;
    double worst = 0;
    for (int k = 0; k < 50; ++k) {
        const Vector x{{u(rng), u(rng), u(rng), u(rng)}};
        worst = std::max(worst, oracle::max_abs(linalg::projectors_from_input(dev.input_matrix(x)).range - expected));
    }
    CHECK(worst <= 1e-14);
}
