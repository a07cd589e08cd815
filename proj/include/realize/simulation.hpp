#pragma once

#include "realize/realizability.hpp"
#include "realize/system.hpp"
#include "realize/trajectory.hpp"

#include <functional>
#include <string>
#include <vector>

namespace realize {

using VectorField = std::function<Vector(double t, const Vector& x)>;

/// Classical fixed-step RK4 on a uniform grid. Throws NonFiniteState at the
/// first step that leaves the finite range.
std::vector<Vector> integrate_rk4(const VectorField& field, const Vector& x0, const TimeGrid& grid);

/// ẋ = R(x) + B(x)u(t) under the open-loop control `u`.
std::vector<Vector> simulate_closed(const AffineSystem& sys, const ControlSignal& u,
                                    const Vector& x0, const TimeGrid& grid);

/// Composite Simpson rule for samples on a uniform grid with spacing h; an odd
/// interval count closes with the 3/8 rule on the last three intervals.
double simpson(const std::vector<double>& f, double h);

/// J = ½∫‖x(t) − x_d(t)‖² dt over the grid.
double tracking_cost(const std::vector<Vector>& x, const DesiredTrajectory& xd,
                     const TimeGrid& grid);

/// A: uncontrolled solution (realizable, sup‖u‖ ≤ tol); B: realizable with
/// nonzero control; C: not realizable.
enum class TrajectoryClass { A, B, C };

std::string to_string(TrajectoryClass c);

inline constexpr double kDefaultControlTol = 1e-6;

TrajectoryClass classify_trajectory(const AffineSystem& sys, const DesiredTrajectory& xd,
                                    const TimeGrid& grid, double control_tol = kDefaultControlTol,
                                    double tol_c = kDefaultConstraintTol,
                                    double tol_i = kDefaultInitialTol);

struct SimulationResult {
    std::vector<double> grid;
    std::vector<Vector> states;
    std::vector<double> errors;  // ‖x(t) − x_d(t)‖ per grid point
    double tracking_error_sup = 0.0;
    double cost_J = 0.0;
    TrajectoryClass trajectory_class = TrajectoryClass::C;
};

/// Simulates `u` from `x0`, then scores the run against x_d.
SimulationResult verify_tracking(const AffineSystem& sys, const DesiredTrajectory& xd,
                                 const ControlSignal& u, const Vector& x0, const TimeGrid& grid,
                                 double control_tol = kDefaultControlTol);

}  // namespace realize
