#include "realize/realizability.hpp"

#include "realize/errors.hpp"

#include <algorithm>
#include <cstdio>

namespace realize {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Realizable: return "Realizable";
        case Verdict::ConstraintViolated: return "ConstraintViolated";
        case Verdict::InitialMismatch: return "InitialMismatch";
        case Verdict::Both: return "Both";
    }
    return "?";
}

namespace {

void check_dims(const AffineSystem& sys, const DesiredTrajectory& xd) {
    if (xd.dim() != sys.n()) {
        throw DimensionError("trajectory has dimension " + std::to_string(xd.dim()) +
                             " but the system has n = " + std::to_string(sys.n()));
    }
}

std::string describe(const RealizabilityReport& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s (constraint residual %.3e, initial error %.3e)",
                  to_string(r.verdict).c_str(), r.max_constraint_residual, r.initial_error);
    return buf;
}

// Validates realizability (unless forced) and fills u(t_i) = G(x_d)(ẋ_d − R(x_d)),
// where G is the left inverse returned by `inverse`.
template <typename InverseFn>
ControlSignal synthesize_with(const AffineSystem& sys, const DesiredTrajectory& xd,
                              const TimeGrid& grid, const SynthesisOptions& opts,
                              InverseFn inverse) {
    check_dims(sys, xd);
    const RealizabilityReport report =
        check_realizable(sys, xd, grid, opts.tol_constraint, opts.tol_initial);
    if (!report.realizable() && !opts.force) {
        throw NotRealizable("trajectory is not exactly realizable: " + describe(report));
    }
    std::vector<Vector> u;
    u.reserve(grid.size());
    for (double t : grid.points()) {
        const Vector x = xd.value(t);
        const Matrix b = sys.input_matrix(x);
        u.push_back(inverse(b, x) * (xd.derivative(t) - sys.drift(x)));
    }
    return ControlSignal(grid, std::move(u), !report.realizable());
}

}  // namespace

Vector constraint_residual(const AffineSystem& sys, const DesiredTrajectory& xd, double t) {
    check_dims(sys, xd);
    const Vector x = xd.value(t);
    const auto proj = linalg::projectors_from_input(sys.input_matrix(x));
    return proj.complement * (xd.derivative(t) - sys.drift(x));
}

RealizabilityReport check_realizable(const AffineSystem& sys, const DesiredTrajectory& xd,
                                     const TimeGrid& grid, double tol_c, double tol_i) {
    check_dims(sys, xd);
    RealizabilityReport r;
    r.grid = grid.points();
    r.per_time_residuals.reserve(grid.size());
    for (double t : grid.points()) {
        const double res = constraint_residual(sys, xd, t).norm();
        r.per_time_residuals.push_back(res);
        r.max_constraint_residual = std::max(r.max_constraint_residual, res);
    }
    r.initial_error = (xd.value(grid.front()) - sys.x0()).norm();
    const bool constraint_ok = r.max_constraint_residual <= tol_c;
    const bool initial_ok = r.initial_error <= tol_i;
    if (constraint_ok && initial_ok) {
        r.verdict = Verdict::Realizable;
    } else if (!constraint_ok && !initial_ok) {
        r.verdict = Verdict::Both;
    } else {
        r.verdict = constraint_ok ? Verdict::InitialMismatch : Verdict::ConstraintViolated;
    }
    return r;
}

ControlSignal synthesize_control(const AffineSystem& sys, const DesiredTrajectory& xd,
                                 const TimeGrid& grid, const SynthesisOptions& opts) {
    return synthesize_with(sys, xd, grid, opts, [](const Matrix& b, const Vector&) {
        return linalg::pseudoinverse_tall(b);
    });
}

ControlSignal synthesize_control_generalized(const AffineSystem& sys, const DesiredTrajectory& xd,
                                             const Matrix& kernel, const TimeGrid& grid,
                                             const SynthesisOptions& opts) {
    return synthesize_control_generalized(
        sys, xd, KernelFunction([kernel](const Vector&) { return kernel; }), grid, opts);
}

ControlSignal synthesize_control_generalized(const AffineSystem& sys, const DesiredTrajectory& xd,
                                             const KernelFunction& kernel, const TimeGrid& grid,
                                             const SynthesisOptions& opts) {
    return synthesize_with(sys, xd, grid, opts, [&](const Matrix& b, const Vector& x) {
        return linalg::generalized_inverse(b, kernel(x));
    });
}

OutputRealizationCheck verify_output_realization(const AffineSystem& sys,
                                                 const DesiredTrajectory& xd,
                                                 const DesiredOutput& yd, const TimeGrid& grid,
                                                 double tol) {
    if (!sys.has_output()) {
        throw NoOutputDefined("system '" + sys.name() + "' has no output");
    }
    check_dims(sys, xd);
    if (yd.dim() != sys.m()) {
        throw DimensionError("desired output has " + std::to_string(yd.dim()) +
                             " components but the system has m = " + std::to_string(sys.m()));
    }
    OutputRealizationCheck out;
    for (double t : grid.points()) {
        const double res = (yd.value(t) - sys.output_value(xd.value(t))).norm();
        out.max_residual = std::max(out.max_residual, res);
    }
    out.within_tolerance = out.max_residual <= tol;
    return out;
}

}  // namespace realize
