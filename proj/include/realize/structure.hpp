#pragma once

#include "realize/system.hpp"
#include "realize/trajectory.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace realize {

inline constexpr double kDefaultProjectorTol = 1e-10;
inline constexpr double kDefaultAffineTol = 1e-8;
inline constexpr std::uint64_t kDefaultSeed = 1;

struct ProjectorConstancy {
    bool constant = false;
    double max_deviation = 0.0;  // largest pairwise max-entry difference of P(x)
    Matrix p;                    // P(x0)
    Matrix q;                    // Q(x0)
};

/// Samples P(x) at x0 and at `sample_count` random points in the unit ball
/// around x0, plus as many at ten times that radius.
ProjectorConstancy check_constant_projectors(const AffineSystem& sys, int sample_count = 25,
                                             double tol = kDefaultProjectorTol,
                                             std::uint64_t seed = kDefaultSeed);

/// QR(x) = QAx + Qb. Only the Q-projected parts are stored: a = QA, b = Qb.
struct AffinePart {
    Matrix a;
    Vector b;
    double fit_residual = 0.0;  // max over validation points of ‖QR(x) − QAx − Qb‖
    Matrix p;
    Matrix q;
};

/// Probes R at 0 and at the unit vectors for QA and Qb and measures the fit
/// at 50 random points (half at unit radius, half at 10x) without judging it.
/// Throws ProjectorNotConstant.
AffinePart fit_affine_part(const AffineSystem& sys, std::uint64_t seed = kDefaultSeed);

/// fit_affine_part, rejecting fits worse than `tol`. Throws
/// ProjectorNotConstant or NotAffine.
AffinePart extract_affine_part(const AffineSystem& sys, double tol = kDefaultAffineTol,
                               std::uint64_t seed = kDefaultSeed);

/// (QAP | QAQ·QAP | … | (QAQ)^{n−1}·QAP), n×n².
Matrix controllability_matrix(const Matrix& a, const Matrix& p, const Matrix& q);

/// (CP | C·QAP | C·QAQ·QAP | … | C(QAQ)^{n−1}QAP), m×(n + n²).
Matrix output_controllability_matrix(const Matrix& a, const Matrix& p, const Matrix& q,
                                     const Matrix& c);

struct ControllabilityReport {
    Matrix ctrb_matrix;
    int rank = 0;
    int required = 0;
    bool controllable = false;
    Vector singular_values;
};

/// rank K = n − p is sufficient for state-to-state transfer. A failed test
/// means "not proven controllable", except for LTI systems with constant B
/// where it is also necessary.
ControllabilityReport controllability_report(const Matrix& a, const Matrix& p, const Matrix& q,
                                             double rank_tol = linalg::kRankTolerance);
ControllabilityReport check_controllable(const AffineSystem& sys,
                                         double rank_tol = linalg::kRankTolerance,
                                         std::uint64_t seed = kDefaultSeed);

/// Same report shape; `required` is m and the verdict is rank K_C = m.
ControllabilityReport output_controllability_report(const Matrix& a, const Matrix& p,
                                                    const Matrix& q, const Matrix& c,
                                                    double rank_tol = linalg::kRankTolerance);
ControllabilityReport check_output_controllable(const AffineSystem& sys,
                                                double rank_tol = linalg::kRankTolerance,
                                                std::uint64_t seed = kDefaultSeed);

/// Qx_d(t) = exp(QAQ(t−t0))Qx0 + ∫ exp(QAQ(t−τ)) Q(AP·x_d(τ) + b) dτ on the
/// grid, with 8-point Gauss-Legendre quadrature on every interval.
std::vector<Vector> propagate_constraint(const Matrix& a, const Vector& b, const Matrix& p,
                                         const Matrix& q,
                                         const std::function<Vector(double)>& pxd,
                                         const Vector& qx0, const TimeGrid& grid);

/// State transfer x0 → x1 over the grid's time span.
struct TransferProblem {
    Vector x0;
    Vector x1;
    double t0 = 0.0;
    double t1 = 0.0;
    int basis_size = 0;
    Matrix coefficients;  // p × basis_size weights of the shifted Legendre basis (P̂ coordinates)
    double residual = 0.0;  // ‖x_d(t1) − x1‖
    DesiredTrajectory trajectory;
};

/// P·x_d is a Legendre polynomial (`basis_size` terms, default n + 4) pinned to
/// Px0 and Px1 at the ends, Q·x_d follows from propagate_constraint, and the
/// coefficients are the least-squares solution of the terminal condition with
/// the least ∫‖P ẋ_d‖² among exact solutions. Throws NotControllable, or
/// SolveFailed when the linear conditions cannot be met to 1e-6.
TransferProblem synthesize_transfer(const AffineSystem& sys, const Vector& x1,
                                    const TimeGrid& grid, int basis_size = 0,
                                    std::uint64_t seed = kDefaultSeed);

}  // namespace realize
