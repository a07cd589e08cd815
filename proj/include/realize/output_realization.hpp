#pragma once

#include "realize/structure.hpp"
#include "realize/system.hpp"
#include "realize/trajectory.hpp"

#include <optional>
#include <string>
#include <vector>

namespace realize {

/// PureODE: the reduced constraint is an explicit ODE (r = n − p).
/// Index2: some rows are algebraic and one differentiation of them closes
/// the system; counting the output relation this is an index-2 DAE.
enum class DaeClass { PureODE, Index2, Unsupported };

std::string to_string(DaeClass c);

/// x_k prescribed as a function of t (k is 1-based).
struct FreeCoordinate {
    int index = 0;
    expr::Expr value;
};

/// Tolerance on the residuals of check_initial_consistency.
inline constexpr double kConsistencyTol = 1e-8;

/// Output realization under the linearizing assumption. The p − m free
/// coordinates are appended to C as unit rows, giving a square-or-wide
/// C' (p×n) and an augmented output y' = (y_d, free values). With
/// x = C'⁺y' + N̂z the constraint reduces to E ż = F z + g(t).
struct OutputRealizationProblem {
    AffineSystem sys;
    DesiredOutput yd;
    DesiredOutput augmented;  // y' = (y_d, prescribed free coordinates)
    Matrix a;                 // QA
    Vector b;                 // Qb
    DaeClass classification = DaeClass::Unsupported;
    int free_parameter_count = 0;
    std::vector<FreeCoordinate> free;
    int r = 0;  // rank(QN')

    Matrix c_aug;
    Matrix c_aug_pinv;
    Matrix n_hat;  // n×(n−p)
    Matrix q_hat;  // n×(n−p)
    Matrix e;      // Q̂ᵀN̂
    Matrix f;      // Q̂ᵀAN̂
    // E = U Σ Vᵀ split into the differential (1) and algebraic (2) blocks.
    Matrix u1, u2, v1, v2;
    Vector sigma1;
    Matrix g_alg;  // U2ᵀ F V2, invertible for Index2 problems

    std::string diagnostic;  // why the problem is Unsupported
};

/// Builds and classifies the reduced DAE. `free` pins the p − m free
/// coordinates; when empty they are chosen automatically (first
/// combination in lexicographic order giving PureODE, else Index2) and held
/// at their x0 values. Throws DimensionError (m > p), UnsupportedStructure
/// (no or nonlinear output, rank-deficient augmented output).
OutputRealizationProblem reduce_dae(const AffineSystem& sys, const DesiredOutput& yd,
                                    const Matrix& a, const Vector& b,
                                    std::vector<FreeCoordinate> free = {});

struct InitialConsistency {
    double output_match_residual = 0.0;    // ‖y'(t0) − C'x0‖
    std::vector<double> extra_conditions;  // U2ᵀ(F z0 + g(t0)), one per algebraic row
    std::vector<std::string> descriptions;  // one per extra condition

    bool consistent(double tol = kConsistencyTol) const;
};

InitialConsistency check_initial_consistency(const OutputRealizationProblem& problem,
                                             const Vector& x0);

/// Integrates the differential part with RK4 on the uniform grid and solves
/// the algebraic part exactly at every step. Samples carry exact derivatives.
/// Throws InconsistentInitialData or UnsupportedStructure.
DesiredTrajectory solve_output_realization(const OutputRealizationProblem& problem,
                                           const Vector& x0, const TimeGrid& grid);

// ---------------------------------------------------------------------------
// Cascade solver for systems outside the linearizing assumption.
//
// Equations are the m output rows "y1".."ym" (h_k(x) − y_k(t) = 0) and the
// independent constraint rows "row_j" (q_jᵀ(ẋ − R(x)) = 0, j the pivot rows
// of the constant projector Q).

enum class StepKind { Algebraic, Ode };

struct PlanStep {
    int variable = 0;       // 1-based state index
    StepKind kind = StepKind::Algebraic;
    bool output_row = false;
    int row = 0;            // output index (1-based) or Q row (1-based)

    std::string equation() const;  // "y1" or "row_3"
};

struct CascadePlan {
    std::vector<PlanStep> steps;
};

std::string to_string(const PlanStep& step);  // "x3 <- algebraic(y1)"

/// Parses lines of the form `x3 <- algebraic(y1)` or `x1 <- ode(row_3)`.
/// Throws ConfigError.
CascadePlan parse_plan(const std::vector<std::string>& lines, int n);

/// Searches for a feasible plan (depth first with backtracking; output rows
/// are tried first, then ODE steps, then algebraic constraint steps).
/// Throws PlanInfeasible when none exists within the search budget.
CascadePlan derive_plan(const AffineSystem& sys, const DesiredOutput& yd,
                        const std::vector<FreeCoordinate>& free = {});

/// Executes the plan symbolically, integrates the ODE variables with RK4 and
/// evaluates the algebraic ones exactly. Variables the plan does not mention
/// are free (given by `free`, else held at x0). Throws PlanInfeasible,
/// UnsupportedStructure (non-constant projectors) or InconsistentInitialData.
DesiredTrajectory solve_cascade(const AffineSystem& sys, const DesiredOutput& yd,
                                const CascadePlan& plan, const Vector& x0, const TimeGrid& grid,
                                const std::vector<FreeCoordinate>& free = {});

/// u = (ÿ_d − R₂(y_d, ẏ_d)) / B₂(y_d, ẏ_d) for ẋ₁ = x₂, ẋ₂ = R₂(x) + B₂(x)u,
/// y = x₁. Throws NotMechanicalForm, DomainError where B₂ vanishes.
ControlSignal computed_torque(const AffineSystem& sys, const DesiredOutput& yd,
                              const TimeGrid& grid);

/// True when the system has the mechanical form computed_torque accepts.
bool is_mechanical_position_form(const AffineSystem& sys);

// ---------------------------------------------------------------------------

enum class RealizationMethod { LinearDae, Cascade };

std::string to_string(RealizationMethod m);

struct RealizeOptions {
    std::vector<FreeCoordinate> free;
    std::optional<CascadePlan> plan;  // forces the cascade route
    std::uint64_t seed = kDefaultSeed;
};

struct OutputRealization {
    DesiredTrajectory trajectory;
    RealizationMethod method;
    DaeClass classification;  // linear route only
    CascadePlan plan;         // cascade route only
    std::string note;
};

/// Linear DAE route when the linearizing assumption holds, cascade otherwise
/// (or when a plan is given). Throws as the chosen route does.
OutputRealization realize_output(const AffineSystem& sys, const DesiredOutput& yd,
                                 const TimeGrid& grid, const RealizeOptions& opts = {});

}  // namespace realize
