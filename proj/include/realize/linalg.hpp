#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace realize {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

/// Relative singular-value threshold used for every rank decision.
inline constexpr double kRankTolerance = 1e-10;

/// Above this Gram condition number the normal equations lose too many digits
/// (error ~ cond(B)² eps) and the pseudoinverse comes from the SVD of B instead.
inline constexpr double kGramConditionLimit = 1e4;

/// Throws DomainError naming `what` if any entry is NaN or infinite.
void require_finite(const Matrix& m, const std::string& what);
void require_finite(const Vector& v, const std::string& what);

/// Singular values in decreasing order.
Vector singular_values(const Matrix& m);

/// Number of singular values above `tol` times the largest one.
int numeric_rank(const Matrix& m, double tol = kRankTolerance);

/// Moore-Penrose inverse (BᵀB)⁻¹Bᵀ of a tall matrix with full column rank.
Matrix pseudoinverse_tall(const Matrix& b, double tol = kRankTolerance);

/// Moore-Penrose inverse Cᵀ(CCᵀ)⁻¹ of a wide matrix with full row rank.
Matrix pseudoinverse_wide(const Matrix& c, double tol = kRankTolerance);

/// SVD-based pseudoinverse for arbitrary shape; singular values below
/// `tol`·σ_max are treated as zero.
Matrix pseudoinverse_svd(const Matrix& m, double tol = kRankTolerance);

/// Complementary orthogonal projector pair.
struct ProjectorPair {
    Matrix range;       // P = BB⁺ (or M = C⁺C)
    Matrix complement;  // Q = 1 - P (or N = 1 - M)
};

/// P = BB⁺ onto the input directions and Q = 1 - P.
ProjectorPair projectors_from_input(const Matrix& b, double tol = kRankTolerance);

/// M = C⁺C onto the row space of the output matrix and N = 1 - M.
ProjectorPair projectors_from_output(const Matrix& c, double tol = kRankTolerance);

/// Generalized inverse (KB)⁻¹K generated by a kernel matrix K (p×n).
Matrix generalized_inverse(const Matrix& b, const Matrix& kernel, double tol = kRankTolerance);

/// Picks r linearly independent columns of a projector by greedy pivoting:
/// at each step the column with the largest norm orthogonal to the columns
/// already chosen wins, ties going to the lowest index.
Matrix independent_columns(const Matrix& proj, int r, double tol = kRankTolerance);

/// Column indices chosen by independent_columns, in selection order.
std::vector<int> independent_column_indices(const Matrix& proj, int r,
                                            double tol = kRankTolerance);

/// exp(M) by scaling and squaring of a truncated Taylor series.
Matrix matrix_exponential(const Matrix& m);

/// T = [P̂ | Q̂]; T⁻¹QT = diag(0,…,0,1,…,1).
Matrix normal_form_transform(const Matrix& p, const Matrix& q, double tol = kRankTolerance);

/// Largest absolute entry, 0 for empty matrices.
double max_abs(const Matrix& m);

}  // namespace linalg
}  // namespace realize
