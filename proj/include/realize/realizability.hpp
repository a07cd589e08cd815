#pragma once

#include "realize/system.hpp"
#include "realize/trajectory.hpp"

#include <functional>
#include <string>
#include <vector>

namespace realize {

enum class Verdict { Realizable, ConstraintViolated, InitialMismatch, Both };

std::string to_string(Verdict v);

inline constexpr double kDefaultConstraintTol = 1e-8;
inline constexpr double kDefaultInitialTol = 1e-10;

struct RealizabilityReport {
    Verdict verdict = Verdict::Realizable;
    double max_constraint_residual = 0.0;  // sup over the grid of ‖Q(x_d)(ẋ_d − R(x_d))‖
    double initial_error = 0.0;            // ‖x_d(t0) − x0‖
    std::vector<double> grid;
    std::vector<double> per_time_residuals;

    bool realizable() const { return verdict == Verdict::Realizable; }
};

/// Q(x_d(t))·(ẋ_d(t) − R(x_d(t))): the part of the desired motion that no
/// control can produce.
Vector constraint_residual(const AffineSystem& sys, const DesiredTrajectory& xd, double t);

/// Certifies exact realizability on `grid`: the constraint residual must stay
/// within tol_c everywhere and x_d(t0) must match x0 within tol_i.
RealizabilityReport check_realizable(const AffineSystem& sys, const DesiredTrajectory& xd,
                                     const TimeGrid& grid, double tol_c = kDefaultConstraintTol,
                                     double tol_i = kDefaultInitialTol);

struct SynthesisOptions {
    double tol_constraint = kDefaultConstraintTol;
    double tol_initial = kDefaultInitialTol;
    bool force = false;  // synthesize even when the trajectory is not realizable
};

/// u(t) = B⁺(x_d)(ẋ_d − R(x_d)) at every grid point. Throws NotRealizable
/// unless the trajectory passes check_realizable or `force` is set.
ControlSignal synthesize_control(const AffineSystem& sys, const DesiredTrajectory& xd,
                                 const TimeGrid& grid, const SynthesisOptions& opts = {});

/// State-dependent kernel K(x) (p×n) generating Bᵍ = (KB)⁻¹K.
using KernelFunction = std::function<Matrix(const Vector& x)>;

/// Same control built from a generalized inverse of B instead of B⁺. For
/// realizable trajectories the result does not depend on the kernel.
ControlSignal synthesize_control_generalized(const AffineSystem& sys, const DesiredTrajectory& xd,
                                             const Matrix& kernel, const TimeGrid& grid,
                                             const SynthesisOptions& opts = {});
ControlSignal synthesize_control_generalized(const AffineSystem& sys, const DesiredTrajectory& xd,
                                             const KernelFunction& kernel, const TimeGrid& grid,
                                             const SynthesisOptions& opts = {});

struct OutputRealizationCheck {
    double max_residual = 0.0;  // sup over the grid of ‖y_d(t) − h(x_d(t))‖
    bool within_tolerance = false;
};

/// Measures how far h(x_d) is from y_d. For a realizable x_d this is exactly
/// the output tracking error of the open-loop control.
OutputRealizationCheck verify_output_realization(const AffineSystem& sys,
                                                 const DesiredTrajectory& xd,
                                                 const DesiredOutput& yd, const TimeGrid& grid,
                                                 double tol = 1e-6);

}  // namespace realize
