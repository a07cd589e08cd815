#include "realize/simulation.hpp"

#include "realize/errors.hpp"

#include <algorithm>
#include <cmath>

namespace realize {

std::vector<Vector> integrate_rk4(const VectorField& field, const Vector& x0,
                                  const TimeGrid& grid) {
    if (!grid.is_uniform()) {
        throw DomainError("RK4 integration requires a uniform grid");
    }
    linalg::require_finite(x0, "initial state");
    std::vector<Vector> xs;
    xs.reserve(grid.size());
    xs.push_back(x0);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double t = grid[i];
        const double h = grid[i + 1] - t;
        const Vector& x = xs.back();
        Vector next;
        try {
            const Vector k1 = field(t, x);
            const Vector k2 = field(t + 0.5 * h, x + 0.5 * h * k1);
            const Vector k3 = field(t + 0.5 * h, x + 0.5 * h * k2);
            const Vector k4 = field(t + h, x + h * k3);
            next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        } catch (const DomainError& e) {
            if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e150) {
                throw NonFiniteState(std::string("state blew up: ") + e.what(), t);
            }
            throw;
        }
        if (!next.allFinite()) {
            throw NonFiniteState("state became non-finite", grid[i + 1]);
        }
        xs.push_back(std::move(next));
    }
    return xs;
}

std::vector<Vector> simulate_closed(const AffineSystem& sys, const ControlSignal& u,
                                    const Vector& x0, const TimeGrid& grid) {
    if (u.dim() != sys.p()) {
        throw DimensionError("control has dimension " + std::to_string(u.dim()) +
                             " but the system has p = " + std::to_string(sys.p()));
    }
    const VectorField field = [&](double t, const Vector& x) -> Vector {
        return sys.drift(x) + sys.input_matrix(x) * u.value(t);
    };
    return integrate_rk4(field, x0, grid);
}

double simpson(const std::vector<double>& f, double h) {
    const std::size_t intervals = f.size() - 1;
    if (f.size() < 2) {
        return 0.0;
    }
    if (intervals == 1) {
        return 0.5 * h * (f[0] + f[1]);
    }
    std::size_t even_end = intervals % 2 == 0 ? intervals : intervals - 3;
    double sum = 0.0;
    for (std::size_t i = 0; i + 2 <= even_end; i += 2) {
        sum += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
    }
    if (even_end != intervals) {
        const std::size_t i = even_end;
        sum += 3.0 * h / 8.0 * (f[i] + 3.0 * f[i + 1] + 3.0 * f[i + 2] + f[i + 3]);
    }
    return sum;
}

double tracking_cost(const std::vector<Vector>& x, const DesiredTrajectory& xd,
                     const TimeGrid& grid) {
    if (x.size() != grid.size()) {
        throw DimensionError("state sample count does not match grid");
    }
    if (!grid.is_uniform()) {
        throw DomainError("tracking cost quadrature requires a uniform grid");
    }
    std::vector<double> integrand(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vector d = x[i] - xd.value(grid[i]);
        integrand[i] = 0.5 * d.squaredNorm();
    }
    const double h = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
    return simpson(integrand, h);
}

std::string to_string(TrajectoryClass c) {
    switch (c) {
        case TrajectoryClass::A: return "A";
        case TrajectoryClass::B: return "B";
        case TrajectoryClass::C: return "C";
    }
    return "?";
}

TrajectoryClass classify_trajectory(const AffineSystem& sys, const DesiredTrajectory& xd,
                                    const TimeGrid& grid, double control_tol, double tol_c,
                                    double tol_i) {
    const RealizabilityReport report = check_realizable(sys, xd, grid, tol_c, tol_i);
    if (!report.realizable()) {
        return TrajectoryClass::C;
    }
    SynthesisOptions opts;
    opts.tol_constraint = tol_c;
    opts.tol_initial = tol_i;
    const ControlSignal u = synthesize_control(sys, xd, grid, opts);
    return u.sup_norm() <= control_tol ? TrajectoryClass::A : TrajectoryClass::B;
}

SimulationResult verify_tracking(const AffineSystem& sys, const DesiredTrajectory& xd,
                                 const ControlSignal& u, const Vector& x0, const TimeGrid& grid,
                                 double control_tol) {
    SimulationResult r;
    r.grid = grid.points();
    r.states = simulate_closed(sys, u, x0, grid);
    r.errors.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double e = (r.states[i] - xd.value(grid[i])).norm();
        r.errors.push_back(e);
        r.tracking_error_sup = std::max(r.tracking_error_sup, e);
    }
    r.cost_J = tracking_cost(r.states, xd, grid);
    r.trajectory_class = classify_trajectory(sys, xd, grid, control_tol);
    return r;
}

}  // namespace realize
