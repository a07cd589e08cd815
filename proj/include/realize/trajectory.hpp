#pragma once

#include "realize/expr.hpp"
#include "realize/linalg.hpp"

#include <vector>

namespace realize {

/// Strictly increasing sequence of sample times.
class TimeGrid {
public:
    explicit TimeGrid(std::vector<double> points);

    /// `steps` equal intervals on [t0, t1] (steps + 1 points).
    static TimeGrid uniform(double t0, double t1, int steps);

    std::size_t size() const { return points_.size(); }
    double operator[](std::size_t i) const { return points_[i]; }
    double front() const { return points_.front(); }
    double back() const { return points_.back(); }
    const std::vector<double>& points() const { return points_; }

    bool is_uniform(double rel_tol = 1e-9) const;

    /// Splits every interval into `factor` equal pieces.
    TimeGrid refined(int factor) const;

private:
    std::vector<double> points_;
};

/// Derivative of sampled data: 4th-order centred differences on uniform grids
/// (2nd-order centred next to the ends, 2nd-order one-sided at the ends),
/// 2nd-order three-point formulas on non-uniform grids.
std::vector<Vector> finite_difference(const TimeGrid& grid, const std::vector<Vector>& samples);

/// Cubic Hermite interpolation of (grid, values, slopes) at t.
Vector hermite_value(const TimeGrid& grid, const std::vector<Vector>& values,
                     const std::vector<Vector>& slopes, double t);
Vector hermite_slope(const TimeGrid& grid, const std::vector<Vector>& values,
                     const std::vector<Vector>& slopes, double t);

/// Desired state path x_d(t) on [t0, t1], either as expressions of t or as
/// samples on a grid. Derivatives come from symbolic differentiation or, for
/// samples without stored derivatives, from finite differences.
class DesiredTrajectory {
public:
    static DesiredTrajectory analytic(std::vector<expr::Expr> x, double t0, double t1,
                                      std::vector<expr::Expr> dx = {});
    static DesiredTrajectory sampled(TimeGrid grid, std::vector<Vector> x,
                                     std::vector<Vector> dx = {});

    int dim() const { return dim_; }
    double t0() const { return t0_; }
    double t1() const { return t1_; }
    bool is_analytic() const { return analytic_; }

    Vector value(double t) const;
    Vector derivative(double t) const;

    const std::vector<expr::Expr>& expressions() const { return x_expr_; }
    const std::vector<expr::Expr>& derivative_expressions() const { return dx_expr_; }
    const TimeGrid& grid() const { return grid_; }
    const std::vector<Vector>& samples() const { return x_samples_; }

private:
    DesiredTrajectory() : grid_(std::vector<double>{0.0, 1.0}) {}
    void check_domain(double t) const;

    bool analytic_ = true;
    int dim_ = 0;
    double t0_ = 0.0;
    double t1_ = 0.0;
    std::vector<expr::Expr> x_expr_;
    std::vector<expr::Expr> dx_expr_;
    TimeGrid grid_;
    std::vector<Vector> x_samples_;
    std::vector<Vector> dx_samples_;
};

/// Desired output y_d(t) given as m expressions of t, with symbolic first and
/// second derivatives.
class DesiredOutput {
public:
    DesiredOutput(std::vector<expr::Expr> y, double t0, double t1);

    int dim() const { return static_cast<int>(y_.size()); }
    double t0() const { return t0_; }
    double t1() const { return t1_; }

    Vector value(double t) const;
    Vector derivative(double t) const;
    Vector second_derivative(double t) const;

    const std::vector<expr::Expr>& expressions() const { return y_; }
    const std::vector<expr::Expr>& derivative_expressions() const { return dy_; }

private:
    std::vector<expr::Expr> y_;
    std::vector<expr::Expr> dy_;
    std::vector<expr::Expr> ddy_;
    double t0_;
    double t1_;
};

/// Open-loop control u(t) sampled on a grid, cubic-Hermite interpolated with
/// finite-difference slopes.
class ControlSignal {
public:
    ControlSignal(TimeGrid grid, std::vector<Vector> samples, bool forced = false);

    const TimeGrid& grid() const { return grid_; }
    const std::vector<Vector>& samples() const { return samples_; }
    int dim() const { return samples_.empty() ? 0 : static_cast<int>(samples_.front().size()); }

    /// True when synthesized for a trajectory that failed the realizability check.
    bool forced() const { return forced_; }

    Vector value(double t) const;

    /// max over samples of ‖u‖∞.
    double sup_norm() const;

private:
    TimeGrid grid_;
    std::vector<Vector> samples_;
    std::vector<Vector> slopes_;
    bool forced_;
};

}  // namespace realize
