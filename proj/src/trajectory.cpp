#include "realize/trajectory.hpp"

#include "realize/errors.hpp"

#include <algorithm>
#include <cmath>

namespace realize {

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.size() < 2) {
        throw DimensionError("time grid needs at least 2 points");
    }
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (!std::isfinite(points_[i])) {
            throw DomainError("time grid contains a non-finite point");
        }
        if (i > 0 && !(points_[i] > points_[i - 1])) {
            throw DomainError("time grid must be strictly increasing");
        }
    }
}

TimeGrid TimeGrid::uniform(double t0, double t1, int steps) {
    if (steps < 1) {
        throw DimensionError("uniform grid needs at least one step");
    }
    if (!(t1 > t0)) {
        throw DomainError("uniform grid needs t1 > t0");
    }
    std::vector<double> pts(static_cast<std::size_t>(steps) + 1);
    const double h = (t1 - t0) / steps;
    for (int i = 0; i <= steps; ++i) {
        pts[static_cast<std::size_t>(i)] = t0 + i * h;
    }
    pts.back() = t1;
    return TimeGrid(std::move(pts));
}

bool TimeGrid::is_uniform(double rel_tol) const {
    const double h = (back() - front()) / static_cast<double>(size() - 1);
    for (std::size_t i = 1; i < size(); ++i) {
        if (std::fabs((points_[i] - points_[i - 1]) - h) > rel_tol * h) {
            return false;
        }
    }
    return true;
}

TimeGrid TimeGrid::refined(int factor) const {
    if (factor < 1) {
        throw DimensionError("refinement factor must be positive");
    }
    std::vector<double> pts;
    pts.reserve((size() - 1) * static_cast<std::size_t>(factor) + 1);
    for (std::size_t i = 0; i + 1 < size(); ++i) {
        const double a = points_[i];
        const double h = (points_[i + 1] - a) / factor;
        for (int k = 0; k < factor; ++k) {
            pts.push_back(a + k * h);
        }
    }
    pts.push_back(back());
    return TimeGrid(std::move(pts));
}

std::vector<Vector> finite_difference(const TimeGrid& grid, const std::vector<Vector>& f) {
    const std::size_t n = grid.size();
    if (f.size() != n) {
        throw DimensionError("sample count does not match grid");
    }
    std::vector<Vector> d(n);
    if (n == 2) {
        const Vector s = (f[1] - f[0]) / (grid[1] - grid[0]);
        d[0] = s;
        d[1] = s;
        return d;
    }
    if (grid.is_uniform()) {
        const double h = (grid.back() - grid.front()) / static_cast<double>(n - 1);
        d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
        d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (i >= 2 && i + 2 < n) {
                d[i] = (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12.0 * h);
            } else {
                d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
            }
        }
        return d;
    }
    // Three-point Lagrange derivative on arbitrary spacing.
    auto three_point = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t at) {
        const double ta = grid[a], tb = grid[b], tc = grid[c], t = grid[at];
        const double wa = ((t - tb) + (t - tc)) / ((ta - tb) * (ta - tc));
        const double wb = ((t - ta) + (t - tc)) / ((tb - ta) * (tb - tc));
        const double wc = ((t - ta) + (t - tb)) / ((tc - ta) * (tc - tb));
        return Vector(wa * f[a] + wb * f[b] + wc * f[c]);
    };
    d[0] = three_point(0, 1, 2, 0);
    d[n - 1] = three_point(n - 3, n - 2, n - 1, n - 1);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        d[i] = three_point(i - 1, i, i + 1, i);
    }
    return d;
}

namespace {

std::size_t locate(const TimeGrid& grid, double t) {
    const auto& pts = grid.points();
    auto it = std::upper_bound(pts.begin(), pts.end(), t);
    if (it == pts.begin()) {
        return 0;
    }
    std::size_t i = static_cast<std::size_t>(it - pts.begin()) - 1;
    return std::min(i, grid.size() - 2);
}

}  // namespace

Vector hermite_value(const TimeGrid& grid, const std::vector<Vector>& v,
                     const std::vector<Vector>& m, double t) {
    const std::size_t i = locate(grid, t);
    const double h = grid[i + 1] - grid[i];
    const double s = (t - grid[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * v[i] + h10 * h * m[i] + h01 * v[i + 1] + h11 * h * m[i + 1];
}

Vector hermite_slope(const TimeGrid& grid, const std::vector<Vector>& v,
                     const std::vector<Vector>& m, double t) {
    const std::size_t i = locate(grid, t);
    const double h = grid[i + 1] - grid[i];
    const double s = (t - grid[i]) / h;
    const double s2 = s * s;
    const double d00 = (6 * s2 - 6 * s) / h;
    const double d10 = 3 * s2 - 4 * s + 1;
    const double d01 = (-6 * s2 + 6 * s) / h;
    const double d11 = 3 * s2 - 2 * s;
    return d00 * v[i] + d10 * m[i] + d01 * v[i + 1] + d11 * m[i + 1];
}

DesiredTrajectory DesiredTrajectory::analytic(std::vector<expr::Expr> x, double t0, double t1,
                                              std::vector<expr::Expr> dx) {
    if (x.empty()) {
        throw DimensionError("trajectory needs at least one component");
    }
    if (!(t1 > t0)) {
        throw DomainError("trajectory domain needs t1 > t0");
    }
    if (!dx.empty() && dx.size() != x.size()) {
        throw DimensionError("derivative count does not match trajectory dimension");
    }
    DesiredTrajectory d;
    d.analytic_ = true;
    d.dim_ = static_cast<int>(x.size());
    d.t0_ = t0;
    d.t1_ = t1;
    if (dx.empty()) {
        for (const auto& e : x) {
            dx.push_back(expr::differentiate(e, expr::Variable::time()));
        }
    }
    d.x_expr_ = std::move(x);
    d.dx_expr_ = std::move(dx);
    return d;
}

DesiredTrajectory DesiredTrajectory::sampled(TimeGrid grid, std::vector<Vector> x,
                                             std::vector<Vector> dx) {
    if (grid.size() < 4) {
        throw DimensionError("sampled trajectory needs at least 4 grid points");
    }
    if (x.size() != grid.size()) {
        throw DimensionError("sample count does not match grid");
    }
    const Eigen::Index n = x.front().size();
    for (const auto& s : x) {
        if (s.size() != n) {
            throw DimensionError("inconsistent sample dimension");
        }
        linalg::require_finite(s, "trajectory sample");
    }
    if (dx.empty()) {
        dx = finite_difference(grid, x);
    } else if (dx.size() != x.size()) {
        throw DimensionError("derivative sample count does not match grid");
    }
    DesiredTrajectory d;
    d.analytic_ = false;
    d.dim_ = static_cast<int>(n);
    d.t0_ = grid.front();
    d.t1_ = grid.back();
    d.grid_ = std::move(grid);
    d.x_samples_ = std::move(x);
    d.dx_samples_ = std::move(dx);
    return d;
}

void DesiredTrajectory::check_domain(double t) const {
    const double slack = 1e-12 * std::max(1.0, std::fabs(t1_ - t0_));
    if (t < t0_ - slack || t > t1_ + slack) {
        throw DomainError("time " + std::to_string(t) + " outside trajectory domain [" +
                          std::to_string(t0_) + ", " + std::to_string(t1_) + "]");
    }
}

Vector DesiredTrajectory::value(double t) const {
    check_domain(t);
    if (analytic_) {
        return expr::evaluate(x_expr_, t, Vector());
    }
    return hermite_value(grid_, x_samples_, dx_samples_, t);
}

Vector DesiredTrajectory::derivative(double t) const {
    check_domain(t);
    if (analytic_) {
        return expr::evaluate(dx_expr_, t, Vector());
    }
    const auto& pts = grid_.points();
    auto it = std::lower_bound(pts.begin(), pts.end(), t);
    if (it != pts.end() && *it == t) {
        return dx_samples_[static_cast<std::size_t>(it - pts.begin())];
    }
    return hermite_slope(grid_, x_samples_, dx_samples_, t);
}

DesiredOutput::DesiredOutput(std::vector<expr::Expr> y, double t0, double t1)
    : y_(std::move(y)), t0_(t0), t1_(t1) {
    if (y_.empty()) {
        throw DimensionError("desired output needs at least one component");
    }
    if (!(t1 > t0)) {
        throw DomainError("desired output domain needs t1 > t0");
    }
    for (const auto& e : y_) {
        if (!expr::state_variables(e).empty()) {
            throw ConfigError("desired output may depend on t only");
        }
        dy_.push_back(expr::differentiate(e, expr::Variable::time()));
        ddy_.push_back(expr::differentiate(dy_.back(), expr::Variable::time()));
    }
}

Vector DesiredOutput::value(double t) const { return expr::evaluate(y_, t, Vector()); }
Vector DesiredOutput::derivative(double t) const { return expr::evaluate(dy_, t, Vector()); }
Vector DesiredOutput::second_derivative(double t) const {
    return expr::evaluate(ddy_, t, Vector());
}

ControlSignal::ControlSignal(TimeGrid grid, std::vector<Vector> samples, bool forced)
    : grid_(std::move(grid)), samples_(std::move(samples)), forced_(forced) {
    if (samples_.size() != grid_.size()) {
        throw DimensionError("control sample count does not match grid");
    }
    for (const auto& s : samples_) {
        if (s.size() != samples_.front().size()) {
            throw DimensionError("inconsistent control dimension");
        }
        linalg::require_finite(s, "control sample");
    }
    slopes_ = finite_difference(grid_, samples_);
}

Vector ControlSignal::value(double t) const {
    const double slack = 1e-12 * std::max(1.0, grid_.back() - grid_.front());
    if (t < grid_.front() - slack || t > grid_.back() + slack) {
        throw DomainError("control requested at t = " + std::to_string(t) + " outside its grid");
    }
    return hermite_value(grid_, samples_, slopes_, t);
}

double ControlSignal::sup_norm() const {
    double out = 0.0;
    for (const auto& s : samples_) {
        if (s.size() > 0) {
            out = std::max(out, s.cwiseAbs().maxCoeff());
        }
    }
    return out;
}

}  // namespace realize
