#include "realize/structure.hpp"

#include "realize/errors.hpp"
#include "realize/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>

namespace realize {

namespace {

// Uniform samples from the ball of radius `radius` around `center`.
std::vector<Vector> ball_samples(const Vector& center, double radius, int count,
                                 std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const auto n = center.size();
    std::vector<Vector> out;
    for (int i = 0; i < count; ++i) {
        Vector dir(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            dir(k) = normal(rng);
        }
        const double nrm = dir.norm();
        if (nrm == 0.0) {
            dir = Vector::Unit(n, 0);
        } else {
            dir /= nrm;
        }
        const double r = radius * std::pow(uniform(rng), 1.0 / static_cast<double>(n));
        out.push_back(center + r * dir);
    }
    return out;
}

Matrix input_projector(const AffineSystem& sys, const Vector& x) {
    return linalg::projectors_from_input(sys.input_matrix(x)).range;
}

ControllabilityReport make_report(Matrix k, int required, double rank_tol) {
    ControllabilityReport r;
    r.singular_values = linalg::singular_values(k);
    r.rank = linalg::numeric_rank(k, rank_tol);
    r.required = required;
    r.controllable = r.rank == required;
    r.ctrb_matrix = std::move(k);
    return r;
}

}  // namespace

ProjectorConstancy check_constant_projectors(const AffineSystem& sys, int sample_count,
                                             double tol, std::uint64_t seed) {
    if (sample_count < 2) {
        throw DimensionError("check_constant_projectors needs at least 2 samples");
    }
    std::mt19937_64 rng(seed);
    std::vector<Matrix> projectors{input_projector(sys, sys.x0())};
    for (double radius : {1.0, 10.0}) {
        for (const Vector& x : ball_samples(sys.x0(), radius, sample_count, rng)) {
            projectors.push_back(input_projector(sys, x));
        }
    }
    ProjectorConstancy out;
    for (std::size_t i = 0; i < projectors.size(); ++i) {
        for (std::size_t j = i + 1; j < projectors.size(); ++j) {
            out.max_deviation =
                std::max(out.max_deviation, linalg::max_abs(projectors[i] - projectors[j]));
        }
    }
    out.constant = out.max_deviation <= tol;
    out.p = projectors.front();
    out.q = Matrix::Identity(sys.n(), sys.n()) - out.p;
    return out;
}

AffinePart fit_affine_part(const AffineSystem& sys, std::uint64_t seed) {
    const ProjectorConstancy pc = check_constant_projectors(sys, 25, kDefaultProjectorTol, seed);
    if (!pc.constant) {
        throw ProjectorNotConstant("input projector varies with the state (max deviation " +
                                   std::to_string(pc.max_deviation) + ")");
    }
    const int n = sys.n();
    AffinePart part;
    part.p = pc.p;
    part.q = pc.q;
    part.b = part.q * sys.drift(Vector::Zero(n));
    part.a = Matrix::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        part.a.col(j) = part.q * sys.drift(Vector::Unit(n, j)) - part.b;
    }

    std::mt19937_64 rng(seed + 1);
    std::vector<Vector> probes = ball_samples(sys.x0(), 1.0, 25, rng);
    for (const Vector& x : ball_samples(sys.x0(), 10.0, 25, rng)) {
        probes.push_back(x);
    }
    for (const Vector& x : probes) {
        const Vector misfit = part.q * sys.drift(x) - part.a * x - part.b;
        part.fit_residual = std::max(part.fit_residual, misfit.norm());
    }
    return part;
}

AffinePart extract_affine_part(const AffineSystem& sys, double tol, std::uint64_t seed) {
    AffinePart part = fit_affine_part(sys, seed);
    if (part.fit_residual > tol) {
        throw NotAffine("projected drift QR(x) is not affine in x (fit residual " +
                        std::to_string(part.fit_residual) + ")");
    }
    return part;
}

Matrix controllability_matrix(const Matrix& a, const Matrix& p, const Matrix& q) {
    const Eigen::Index n = a.rows();
    if (a.cols() != n || p.rows() != n || p.cols() != n || q.rows() != n || q.cols() != n) {
        throw DimensionError("controllability_matrix needs n×n A, P and Q");
    }
    const Matrix qa = q * a;
    const Matrix qap = qa * p;
    const Matrix qaq = qa * q;
    Matrix k(n, n * n);
    Matrix block = qap;
    for (Eigen::Index i = 0; i < n; ++i) {
        k.middleCols(i * n, n) = block;
        block = qaq * block;
    }
    return k;
}

Matrix output_controllability_matrix(const Matrix& a, const Matrix& p, const Matrix& q,
                                     const Matrix& c) {
    const Eigen::Index n = a.rows();
    if (c.cols() != n) {
        throw DimensionError("output matrix must have n columns");
    }
    const Matrix k = controllability_matrix(a, p, q);
    Matrix kc(c.rows(), n + n * n);
    kc.leftCols(n) = c * p;
    kc.rightCols(n * n) = c * k;
    return kc;
}

ControllabilityReport controllability_report(const Matrix& a, const Matrix& p, const Matrix& q,
                                             double rank_tol) {
    const int required = static_cast<int>(a.rows()) - linalg::numeric_rank(p, rank_tol);
    return make_report(controllability_matrix(a, p, q), required, rank_tol);
}

ControllabilityReport check_controllable(const AffineSystem& sys, double rank_tol,
                                         std::uint64_t seed) {
    const AffinePart part = extract_affine_part(sys, kDefaultAffineTol, seed);
    return make_report(controllability_matrix(part.a, part.p, part.q), sys.n() - sys.p(),
                       rank_tol);
}

ControllabilityReport output_controllability_report(const Matrix& a, const Matrix& p,
                                                    const Matrix& q, const Matrix& c,
                                                    double rank_tol) {
    return make_report(output_controllability_matrix(a, p, q, c), static_cast<int>(c.rows()),
                       rank_tol);
}

ControllabilityReport check_output_controllable(const AffineSystem& sys, double rank_tol,
                                                std::uint64_t seed) {
    const Matrix& c = sys.output_matrix();
    const AffinePart part = extract_affine_part(sys, kDefaultAffineTol, seed);
    return output_controllability_report(part.a, part.p, part.q, c, rank_tol);
}

std::vector<Vector> propagate_constraint(const Matrix& a, const Vector& b, const Matrix& p,
                                         const Matrix& q,
                                         const std::function<Vector(double)>& pxd,
                                         const Vector& qx0, const TimeGrid& grid) {
    const Matrix qa = q * a;
    const Matrix qaq = qa * q;
    const Matrix qap = qa * p;
    const Vector qb = q * b;
    const GaussRule rule = gauss_legendre(8);
    const bool uniform = grid.is_uniform();

    // exp(QAQ·s) for the step and for each node offset; reused on uniform grids.
    Matrix step_flow;
    std::vector<Matrix> node_flow(rule.nodes.size());
    double cached_h = -1.0;
    auto refresh = [&](double h) {
        if (uniform && cached_h > 0.0) {
            return;
        }
        step_flow = linalg::matrix_exponential(qaq * h);
        for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
            node_flow[j] = linalg::matrix_exponential(qaq * (0.5 * h * (1.0 - rule.nodes[j])));
        }
        cached_h = h;
    };

    std::vector<Vector> out;
    out.reserve(grid.size());
    out.push_back(q * qx0);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double t = grid[i];
        const double h = grid[i + 1] - t;
        refresh(h);
        Vector next = step_flow * out.back();
        for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
            const double tau = t + 0.5 * h * (1.0 + rule.nodes[j]);
            next += 0.5 * h * rule.weights[j] * (node_flow[j] * (qap * pxd(tau) + qb));
        }
        out.push_back(std::move(next));
    }
    return out;
}

TransferProblem synthesize_transfer(const AffineSystem& sys, const Vector& x1,
                                    const TimeGrid& grid, int basis_size, std::uint64_t seed) {
    const int n = sys.n();
    const int p = sys.p();
    if (x1.size() != n) {
        throw DimensionError("target state needs " + std::to_string(n) + " components");
    }
    if (basis_size == 0) {
        basis_size = n + 4;
    }
    if (basis_size < n || basis_size < 2) {
        throw DimensionError("basis_size must be at least n = " + std::to_string(n));
    }
    const ControllabilityReport ctrb = check_controllable(sys, linalg::kRankTolerance, seed);
    if (!ctrb.controllable) {
        throw NotControllable("rank K = " + std::to_string(ctrb.rank) + " < n - p = " +
                              std::to_string(ctrb.required) + ": not proven controllable");
    }
    const AffinePart part = extract_affine_part(sys, kDefaultAffineTol, seed);
    const Matrix& pp = part.p;
    const Matrix& qq = part.q;
    const Matrix qaq = qq * part.a * qq;
    const Matrix qap = qq * part.a * pp;
    const Vector qb = qq * part.b;
    const Matrix p_hat = linalg::independent_columns(pp, p);
    const Matrix p_hat_pinv = linalg::pseudoinverse_tall(p_hat);
    const Vector& x0 = sys.x0();
    const double t0 = grid.front();
    const double t1 = grid.back();
    const double span = t1 - t0;
    const int k_count = basis_size;
    const int unknowns = p * k_count;

    auto basis = [&](double t, std::vector<double>& phi, std::vector<double>& dphi) {
        legendre(k_count, 2.0 * (t - t0) / span - 1.0, phi, dphi);
        for (auto& d : dphi) {
            d *= 2.0 / span;
        }
    };

    // Linear conditions on vec(D) (block k holds the p coordinates of column k).
    const int q_rows = n - p;
    Matrix q_hat_pinv(0, n);
    if (q_rows > 0) {
        q_hat_pinv = linalg::pseudoinverse_tall(linalg::independent_columns(qq, q_rows));
    }
    Matrix cond = Matrix::Zero(2 * p + q_rows, unknowns);
    Vector rhs = Vector::Zero(2 * p + q_rows);
    std::vector<double> phi, dphi;
    basis(t0, phi, dphi);
    for (int k = 0; k < k_count; ++k) {
        cond.block(0, k * p, p, p) = phi[static_cast<std::size_t>(k)] * Matrix::Identity(p, p);
    }
    rhs.head(p) = p_hat_pinv * (pp * x0);
    basis(t1, phi, dphi);
    for (int k = 0; k < k_count; ++k) {
        cond.block(p, k * p, p, p) = phi[static_cast<std::size_t>(k)] * Matrix::Identity(p, p);
    }
    rhs.segment(p, p) = p_hat_pinv * (pp * x1);

    // Terminal Q condition and derivative-energy Gram matrix by composite
    // Gauss-Legendre quadrature.
    const GaussRule rule = gauss_legendre(8);
    const int panels = 64;
    Matrix sens = Matrix::Zero(n, unknowns);
    Vector drift_term = Vector::Zero(n);
    Matrix energy = Matrix::Zero(k_count, k_count);
    const double ph = span / panels;
    for (int panel = 0; panel < panels; ++panel) {
        for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
            const double tau = t0 + ph * (panel + 0.5 * (1.0 + rule.nodes[j]));
            const double w = 0.5 * ph * rule.weights[j];
            const Matrix flow = linalg::matrix_exponential(qaq * (t1 - tau));
            basis(tau, phi, dphi);
            const Matrix fq = flow * qap * p_hat;
            for (int k = 0; k < k_count; ++k) {
                sens.middleCols(k * p, p) += w * phi[static_cast<std::size_t>(k)] * fq;
                for (int l = 0; l < k_count; ++l) {
                    energy(k, l) += w * dphi[static_cast<std::size_t>(k)] *
                                    dphi[static_cast<std::size_t>(l)];
                }
            }
            drift_term += w * (flow * qb);
        }
    }
    if (q_rows > 0) {
        const Vector free_flow = linalg::matrix_exponential(qaq * span) * (qq * x0);
        cond.bottomRows(q_rows) = q_hat_pinv * sens;
        rhs.tail(q_rows) = q_hat_pinv * (qq * x1 - free_flow - drift_term);
    }

    // Least-squares particular solution, then the exact-solution family member
    // with the smallest derivative energy ∫‖P ẋ_d‖².
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(cond);
    Vector d = cod.solve(rhs);
    const double ls_residual = (cond * d - rhs).norm();
    if (ls_residual > 1e-6 * std::max(1.0, rhs.norm())) {
        throw SolveFailed("transfer conditions unsolvable (residual " +
                          std::to_string(ls_residual) + "); retry with a larger basis_size");
    }
    Eigen::JacobiSVD<Matrix> svd(cond, Eigen::ComputeFullV);
    const int rank = linalg::numeric_rank(cond);
    const Matrix nullspace = svd.matrixV().rightCols(unknowns - rank);
    if (nullspace.cols() > 0) {
        // Energy metric on vec(D): G ⊗ P̂ᵀP̂, factored through its symmetric square root.
        Matrix metric = Matrix::Zero(unknowns, unknowns);
        const Matrix pg = p_hat.transpose() * p_hat;
        for (int k = 0; k < k_count; ++k) {
            for (int l = 0; l < k_count; ++l) {
                metric.block(k * p, l * p, p, p) = energy(k, l) * pg;
            }
        }
        Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (metric + metric.transpose()));
        const Matrix root = eig.eigenvectors() *
                            eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                            eig.eigenvectors().transpose();
        const Matrix ln = root * nullspace;
        const Vector y = ln.completeOrthogonalDecomposition().solve(-(root * d));
        d += nullspace * y;
    }
    Matrix coeff(p, k_count);
    for (int k = 0; k < k_count; ++k) {
        coeff.col(k) = d.segment(k * p, p);
    }

    auto p_part = [&](double t) -> Vector {
        std::vector<double> f, df;
        basis(t, f, df);
        Vector out = Vector::Zero(p);
        for (int k = 0; k < k_count; ++k) {
            out += f[static_cast<std::size_t>(k)] * coeff.col(k);
        }
        return p_hat * out;
    };
    auto p_rate = [&](double t) -> Vector {
        std::vector<double> f, df;
        basis(t, f, df);
        Vector out = Vector::Zero(p);
        for (int k = 0; k < k_count; ++k) {
            out += df[static_cast<std::size_t>(k)] * coeff.col(k);
        }
        return p_hat * out;
    };

    const std::vector<Vector> qpart =
        propagate_constraint(part.a, part.b, pp, qq, p_part, qq * x0, grid);
    std::vector<Vector> xs, dxs;
    xs.reserve(grid.size());
    dxs.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid[i];
        const Vector px = p_part(t);
        xs.push_back(px + qpart[i]);
        dxs.push_back(p_rate(t) + qaq * qpart[i] + qap * px + qb);
    }
    const double residual = (xs.back() - x1).norm();
    return TransferProblem{x0,       x1,       t0,
                           t1,       k_count,  coeff,
                           residual, DesiredTrajectory::sampled(grid, std::move(xs), std::move(dxs))};
}

}  // namespace realize
