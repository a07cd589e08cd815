#include "realize/output_realization.hpp"

#include "realize/errors.hpp"
#include "realize/simulation.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace realize {

std::string to_string(DaeClass c) {
    switch (c) {
        case DaeClass::PureODE: return "PureODE";
        case DaeClass::Index2: return "Index2";
        case DaeClass::Unsupported: return "Unsupported";
    }
    return "?";
}

std::string to_string(RealizationMethod m) {
    return m == RealizationMethod::LinearDae ? "linear-dae" : "cascade";
}

namespace {

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

Matrix input_complement(const AffineSystem& sys) {
    return linalg::projectors_from_input(sys.input_matrix(sys.x0())).complement;
}

// Fills the reduced-DAE fields for one fixed choice of free coordinates.
OutputRealizationProblem build_problem(const AffineSystem& sys, const DesiredOutput& yd,
                                       const Matrix& a, const Vector& b, const Matrix& q,
                                       std::vector<FreeCoordinate> free) {
    const int n = sys.n();
    const int p = sys.p();
    const Matrix& c = sys.output_matrix();
    const int m = static_cast<int>(c.rows());

    Matrix c_aug = Matrix::Zero(p, n);
    c_aug.topRows(m) = c;
    std::vector<expr::Expr> y_aug = yd.expressions();
    for (std::size_t i = 0; i < free.size(); ++i) {
        c_aug(m + static_cast<int>(i), free[i].index - 1) = 1.0;
        y_aug.push_back(free[i].value);
    }
    if (linalg::numeric_rank(c_aug) < p) {
        throw UnsupportedStructure("output rows plus free coordinates are linearly dependent");
    }

    OutputRealizationProblem pr{sys, yd, DesiredOutput(y_aug, yd.t0(), yd.t1()), a, b};
    pr.free_parameter_count = p - m;
    pr.free = std::move(free);
    pr.c_aug = c_aug;
    pr.c_aug_pinv = linalg::pseudoinverse_wide(c_aug);

    const int k = n - p;
    if (k == 0) {
        pr.classification = DaeClass::PureODE;
        pr.n_hat = pr.q_hat = Matrix::Zero(n, 0);
        pr.e = pr.f = Matrix::Zero(0, 0);
        pr.u1 = pr.u2 = pr.v1 = pr.v2 = Matrix::Zero(0, 0);
        pr.sigma1 = Vector::Zero(0);
        return pr;
    }
    const Matrix n_prime = Matrix::Identity(n, n) - pr.c_aug_pinv * c_aug;
    pr.n_hat = linalg::independent_columns(n_prime, k);
    pr.q_hat = linalg::independent_columns(q, k);
    pr.e = pr.q_hat.transpose() * pr.n_hat;
    pr.f = pr.q_hat.transpose() * a * pr.n_hat;

    // Rank decisions are relative to the scale of the projectors (entries ≤ 1),
    // so an all-zero E has rank 0 rather than being rescaled.
    Eigen::JacobiSVD<Matrix> svd(pr.e, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    int r = 0;
    while (r < s.size() && s(r) > linalg::kRankTolerance * std::max(1.0, s(0))) {
        ++r;
    }
    pr.r = r;
    pr.u1 = svd.matrixU().leftCols(r);
    pr.u2 = svd.matrixU().rightCols(k - r);
    pr.v1 = svd.matrixV().leftCols(r);
    pr.v2 = svd.matrixV().rightCols(k - r);
    pr.sigma1 = s.head(r);

    if (r == k) {
        pr.classification = DaeClass::PureODE;
        return pr;
    }
    pr.g_alg = pr.u2.transpose() * pr.f * pr.v2;
    const Vector gs = linalg::singular_values(pr.g_alg);
    const double scale = std::max(1.0, linalg::singular_values(pr.f).size()
                                           ? linalg::singular_values(pr.f)(0)
                                           : 0.0);
    if (gs.size() > 0 && gs(gs.size() - 1) > linalg::kRankTolerance * scale) {
        pr.classification = DaeClass::Index2;
    } else {
        pr.classification = DaeClass::Unsupported;
        pr.diagnostic = "algebraic rows do not determine the remaining coordinates after one "
                        "differentiation (index > 2)";
    }
    return pr;
}

// g(t) and ġ(t) of the reduced system.
struct Forcing {
    const OutputRealizationProblem& pr;
    Vector g(double t) const {
        return pr.q_hat.transpose() * (pr.a * pr.c_aug_pinv * pr.augmented.value(t) + pr.b -
                                       pr.c_aug_pinv * pr.augmented.derivative(t));
    }
    Vector g_rate(double t) const {
        return pr.q_hat.transpose() * (pr.a * pr.c_aug_pinv * pr.augmented.derivative(t) -
                                       pr.c_aug_pinv * pr.augmented.second_derivative(t));
    }
};

}  // namespace

OutputRealizationProblem reduce_dae(const AffineSystem& sys, const DesiredOutput& yd,
                                    const Matrix& a, const Vector& b,
                                    std::vector<FreeCoordinate> free) {
    if (!sys.has_output()) {
        throw NoOutputDefined("output realization needs an [output] section");
    }
    if (!sys.has_linear_output()) {
        throw UnsupportedStructure("the linear DAE route needs a linear output y = Cx");
    }
    const int n = sys.n();
    const int p = sys.p();
    const int m = sys.m();
    if (m > p) {
        throw DimensionError("output realization needs m <= p (m = " + std::to_string(m) +
                             ", p = " + std::to_string(p) + ")");
    }
    if (yd.dim() != m) {
        throw DimensionError("desired output has " + std::to_string(yd.dim()) +
                             " components, the system has m = " + std::to_string(m));
    }
    if (a.rows() != n || a.cols() != n || b.size() != n) {
        throw DimensionError("affine part must be n×n and n");
    }
    const Matrix q = input_complement(sys);

    if (!free.empty()) {
        if (static_cast<int>(free.size()) != p - m) {
            throw DimensionError("expected " + std::to_string(p - m) + " free coordinates, got " +
                                 std::to_string(free.size()));
        }
        for (const auto& fc : free) {
            if (fc.index < 1 || fc.index > n) {
                throw DimensionError("free coordinate x" + std::to_string(fc.index) +
                                     " out of range");
            }
            if (!expr::state_variables(fc.value).empty()) {
                throw ConfigError("free coordinate values may depend on t only");
            }
        }
        return build_problem(sys, yd, a, b, q, std::move(free));
    }
    if (p == m) {
        return build_problem(sys, yd, a, b, q, {});
    }

    // Lexicographic search over the (p − m)-subsets of coordinates.
    const int count = p - m;
    std::vector<int> pick(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        pick[static_cast<std::size_t>(i)] = i + 1;
    }
    std::optional<OutputRealizationProblem> index2;
    std::optional<OutputRealizationProblem> fallback;
    while (true) {
        std::vector<FreeCoordinate> trial;
        for (int k : pick) {
            trial.push_back({k, expr::number(sys.x0()(k - 1))});
        }
        try {
            OutputRealizationProblem pr = build_problem(sys, yd, a, b, q, std::move(trial));
            if (pr.classification == DaeClass::PureODE) {
                return pr;
            }
            if (pr.classification == DaeClass::Index2 && !index2) {
                index2.emplace(std::move(pr));
            } else if (!fallback) {
                fallback.emplace(std::move(pr));
            }
        } catch (const UnsupportedStructure&) {
            // dependent on the output rows, try the next subset
        }
        int i = count - 1;
        while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - (count - 1 - i)) {
            --i;
        }
        if (i < 0) {
            break;
        }
        ++pick[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < count; ++j) {
            pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
    if (index2) {
        return std::move(*index2);
    }
    if (fallback) {
        return std::move(*fallback);
    }
    throw UnsupportedStructure("no choice of free coordinates completes the output matrix");
}

bool InitialConsistency::consistent(double tol) const {
    if (!(output_match_residual <= tol)) {
        return false;
    }
    return std::all_of(extra_conditions.begin(), extra_conditions.end(),
                       [tol](double v) { return std::fabs(v) <= tol; });
}

InitialConsistency check_initial_consistency(const OutputRealizationProblem& pr,
                                             const Vector& x0) {
    if (x0.size() != pr.sys.n()) {
        throw DimensionError("x0 has the wrong dimension");
    }
    const double t0 = pr.yd.t0();
    InitialConsistency out;
    const Vector y0 = pr.augmented.value(t0);
    out.output_match_residual = (y0 - pr.c_aug * x0).norm();
    const int k = pr.sys.n() - pr.sys.p();
    if (k == 0 || pr.r == k || pr.classification == DaeClass::Unsupported) {
        return out;
    }
    const Vector z0 =
        linalg::pseudoinverse_tall(pr.n_hat) * (x0 - pr.c_aug_pinv * y0);
    const Vector extra = pr.u2.transpose() * (pr.f * z0 + Forcing{pr}.g(t0));
    for (Eigen::Index i = 0; i < extra.size(); ++i) {
        out.extra_conditions.push_back(extra(i));
        out.descriptions.push_back("algebraic constraint " + std::to_string(i + 1) + " of " +
                                   std::to_string(extra.size()) +
                                   " at t0 (involves dy_d/dt(t0) and x0)");
    }
    return out;
}

DesiredTrajectory solve_output_realization(const OutputRealizationProblem& pr, const Vector& x0,
                                           const TimeGrid& grid) {
    if (pr.classification == DaeClass::Unsupported) {
        throw UnsupportedStructure(pr.diagnostic.empty() ? "unsupported DAE structure"
                                                         : pr.diagnostic);
    }
    if (std::fabs(grid.front() - pr.yd.t0()) > 1e-12 * std::max(1.0, std::fabs(pr.yd.t0()))) {
        throw DomainError("grid must start at the desired output's t0");
    }
    const InitialConsistency ic = check_initial_consistency(pr, x0);
    if (!(ic.output_match_residual <= kConsistencyTol)) {
        throw InconsistentInitialData("y_d(t0) != C x0 (residual " +
                                      sci(ic.output_match_residual) + ")");
    }
    for (std::size_t i = 0; i < ic.extra_conditions.size(); ++i) {
        if (!(std::fabs(ic.extra_conditions[i]) <= kConsistencyTol)) {
            throw InconsistentInitialData(ic.descriptions[i] + " violated (residual " +
                                          sci(ic.extra_conditions[i]) + ")");
        }
    }

    const int n = pr.sys.n();
    const int k = n - pr.sys.p();
    const int l = k - pr.r;
    const Forcing forcing{pr};
    std::vector<Vector> xs, dxs;
    xs.reserve(grid.size());
    dxs.reserve(grid.size());

    if (k == 0) {
        for (double t : grid.points()) {
            xs.push_back(pr.c_aug_pinv * pr.augmented.value(t));
            dxs.push_back(pr.c_aug_pinv * pr.augmented.derivative(t));
        }
        return DesiredTrajectory::sampled(grid, std::move(xs), std::move(dxs));
    }

    Eigen::PartialPivLU<Matrix> g_lu;
    Matrix coupling;  // U2ᵀ F V1
    if (l > 0) {
        g_lu.compute(pr.g_alg);
        coupling = pr.u2.transpose() * pr.f * pr.v1;
    }
    auto algebraic = [&](double t, const Vector& a) -> Vector {
        if (l == 0) {
            return Vector::Zero(0);
        }
        return -g_lu.solve(coupling * a + pr.u2.transpose() * forcing.g(t));
    };
    auto rate = [&](double t, const Vector& a) -> Vector {
        if (pr.r == 0) {
            return Vector::Zero(0);
        }
        const Vector z = pr.v1 * a + pr.v2 * algebraic(t, a);
        return (pr.u1.transpose() * (pr.f * z + forcing.g(t))).cwiseQuotient(pr.sigma1);
    };

    const double t0 = grid.front();
    const Vector z0 = linalg::pseudoinverse_tall(pr.n_hat) *
                      (x0 - pr.c_aug_pinv * pr.augmented.value(t0));
    const Vector a0 = pr.v1.transpose() * z0;
    std::vector<Vector> as;
    if (pr.r > 0) {
        as = integrate_rk4(rate, a0, grid);
    } else {
        as.assign(grid.size(), Vector::Zero(0));
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid[i];
        const Vector& a = as[i];
        const Vector c = algebraic(t, a);
        const Vector da = rate(t, a);
        Vector dc = Vector::Zero(l);
        if (l > 0) {
            dc = -g_lu.solve(coupling * da + pr.u2.transpose() * forcing.g_rate(t));
        }
        const Vector z = pr.v1 * a + pr.v2 * c;
        const Vector dz = pr.v1 * da + pr.v2 * dc;
        xs.push_back(pr.c_aug_pinv * pr.augmented.value(t) + pr.n_hat * z);
        dxs.push_back(pr.c_aug_pinv * pr.augmented.derivative(t) + pr.n_hat * dz);
    }
    return DesiredTrajectory::sampled(grid, std::move(xs), std::move(dxs));
}

bool is_mechanical_position_form(const AffineSystem& sys) {
    if (sys.n() != 2 || sys.p() != 1 || !sys.has_linear_output()) {
        return false;
    }
    const Matrix& c = sys.output_matrix();
    if (c.rows() != 1 || c(0, 0) != 1.0 || c(0, 1) != 0.0) {
        return false;
    }
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    for (int i = 0; i < 20; ++i) {
        Vector x = sys.x0();
        if (i > 0) {
            x += Vector{{dist(rng), dist(rng)}};
        }
        try {
            const double r1 = expr::evaluate(sys.drift_expressions()[0], 0.0, x);
            const double b1 = expr::evaluate(sys.input_entry(0, 0), 0.0, x);
            if (std::fabs(r1 - x(1)) > 1e-12 * std::max(1.0, std::fabs(x(1))) ||
                std::fabs(b1) > 1e-12) {
                return false;
            }
        } catch (const DomainError&) {
            return false;
        }
    }
    return true;
}

ControlSignal computed_torque(const AffineSystem& sys, const DesiredOutput& yd,
                              const TimeGrid& grid) {
    if (!is_mechanical_position_form(sys)) {
        throw NotMechanicalForm("computed torque needs n = 2, p = 1, x1' = x2, B1 = 0 and "
                                "output y = x1");
    }
    if (yd.dim() != 1) {
        throw DimensionError("computed torque needs a scalar desired output");
    }
    std::vector<Vector> u;
    u.reserve(grid.size());
    for (double t : grid.points()) {
        const double y = yd.value(t)(0);
        const double dy = yd.derivative(t)(0);
        const double ddy = yd.second_derivative(t)(0);
        const Vector x{{y, dy}};
        const double r2 = expr::evaluate(sys.drift_expressions()[1], t, x);
        const double b2 = expr::evaluate(sys.input_entry(1, 0), t, x);
        if (std::fabs(b2) <= 1e-300 || !std::isfinite(b2)) {
            throw DomainError("B2 vanishes at t = " + std::to_string(t));
        }
        u.push_back(Vector::Constant(1, (ddy - r2) / b2));
    }
    return ControlSignal(grid, std::move(u));
}

OutputRealization realize_output(const AffineSystem& sys, const DesiredOutput& yd,
                                 const TimeGrid& grid, const RealizeOptions& opts) {
    if (!sys.has_output()) {
        throw NoOutputDefined("output realization needs an [output] section");
    }
    auto cascade = [&](std::string note) {
        CascadePlan plan = opts.plan ? *opts.plan : derive_plan(sys, yd, opts.free);
        DesiredTrajectory xd = solve_cascade(sys, yd, plan, sys.x0(), grid, opts.free);
        return OutputRealization{std::move(xd), RealizationMethod::Cascade, DaeClass::Unsupported,
                                 std::move(plan), std::move(note)};
    };
    if (opts.plan) {
        return cascade("plan supplied");
    }
    if (!sys.has_linear_output()) {
        return cascade("nonlinear output");
    }
    const ProjectorConstancy pc =
        check_constant_projectors(sys, 25, kDefaultProjectorTol, opts.seed);
    if (!pc.constant) {
        throw UnsupportedStructure("input projector is not constant (max deviation " +
                                   sci(pc.max_deviation) + ")");
    }
    AffinePart part;
    try {
        part = extract_affine_part(sys, kDefaultAffineTol, opts.seed);
    } catch (const NotAffine& e) {
        return cascade(std::string("projected drift not affine: ") + e.what());
    }
    OutputRealizationProblem pr = reduce_dae(sys, yd, part.a, part.b, opts.free);
    DesiredTrajectory xd = solve_output_realization(pr, sys.x0(), grid);
    return OutputRealization{std::move(xd), RealizationMethod::LinearDae, pr.classification,
                             CascadePlan{}, "linearizing assumption holds"};
}

}  // namespace realize
