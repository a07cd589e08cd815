#pragma once

#include "realize/system.hpp"
#include "realize/trajectory.hpp"

#include <string>
#include <vector>

namespace fixture {

inline realize::DesiredTrajectory analytic(const std::vector<std::string>& xs, double t0,
                                           double t1) {
    std::vector<realize::expr::Expr> es;
    for (const auto& s : xs) {
        es.push_back(realize::expr::parse(s, 0));
    }
    return realize::DesiredTrajectory::analytic(es, t0, t1);
}

inline realize::DesiredOutput output(const std::vector<std::string>& ys, double t0, double t1) {
    std::vector<realize::expr::Expr> es;
    for (const auto& s : ys) {
        es.push_back(realize::expr::parse(s, 0));
    }
    return realize::DesiredOutput(es, t0, t1);
}

inline realize::AffineSystem harmonic_oscillator() {
    return realize::load_system(R"(
[system]
name = harmonic
n = 2
p = 1
[dynamics]
R1 = x2
R2 = -x1
[input]
B1 = 0
B2 = 1
[output]
C1 = 1, 0
[initial]
x0 = 0, 1
)");
}

inline realize::AffineSystem pendulum() { return realize::builtin_example("mechanical-pendulum"); }
inline realize::AffineSystem devasia() { return realize::builtin_example("devasia4"); }

}  // namespace fixture
