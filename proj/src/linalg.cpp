#include "realize/linalg.hpp"

#include "realize/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace realize::linalg {

namespace {

std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Gram matrices within the condition limit go through Cholesky; beyond it
// the pseudoinverse comes from an SVD of the factor itself, which avoids
// squaring its condition number.
bool gram_well_conditioned(const Vector& sv_of_factor) {
    if (sv_of_factor.size() == 0) {
        return true;
    }
    const double ratio = sv_of_factor(0) / sv_of_factor(sv_of_factor.size() - 1);
    return ratio * ratio <= kGramConditionLimit;
}

}  // namespace

void require_finite(const Matrix& m, const std::string& what) {
    if (!m.allFinite()) {
        throw DomainError(what + " has non-finite entries");
    }
}

void require_finite(const Vector& v, const std::string& what) {
    if (!v.allFinite()) {
        throw DomainError(what + " has non-finite entries");
    }
}

Vector singular_values(const Matrix& m) {
    if (m.size() == 0) {
        return Vector();
    }
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues();
}

int numeric_rank(const Matrix& m, double tol) {
    const Vector sv = singular_values(m);
    if (sv.size() == 0 || sv(0) == 0.0) {
        return 0;
    }
    const double cut = tol * sv(0);
    return static_cast<int>((sv.array() > cut).count());
}

Matrix pseudoinverse_svd(const Matrix& m, double tol) {
    if (m.size() == 0) {
        return Matrix::Zero(m.cols(), m.rows());
    }
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    Vector inv = Vector::Zero(s.size());
    const double cut = tol * (s.size() ? s(0) : 0.0);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > cut && s(i) > 0.0) {
            inv(i) = 1.0 / s(i);
        }
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix pseudoinverse_tall(const Matrix& b, double tol) {
    require_finite(b, "input matrix");
    if (b.cols() > b.rows()) {
        throw DimensionError("pseudoinverse_tall expects rows >= cols, got " + shape(b));
    }
    const Vector sv = singular_values(b);
    const int rank = numeric_rank(b, tol);
    if (rank < b.cols()) {
        throw RankDeficient("matrix " + shape(b) + " has numeric rank " + std::to_string(rank) +
                            " < " + std::to_string(b.cols()));
    }
    if (gram_well_conditioned(sv)) {
        Eigen::LLT<Matrix> llt(b.transpose() * b);
        if (llt.info() == Eigen::Success) {
            return llt.solve(b.transpose());
        }
    }
    return pseudoinverse_svd(b, 0.0);
}

Matrix pseudoinverse_wide(const Matrix& c, double tol) {
    require_finite(c, "output matrix");
    if (c.rows() > c.cols()) {
        throw DimensionError("pseudoinverse_wide expects rows <= cols, got " + shape(c));
    }
    const Vector sv = singular_values(c);
    const int rank = numeric_rank(c, tol);
    if (rank < c.rows()) {
        throw RankDeficient("matrix " + shape(c) + " has numeric rank " + std::to_string(rank) +
                            " < " + std::to_string(c.rows()));
    }
    if (gram_well_conditioned(sv)) {
        // C⁺ = Cᵀ(CCᵀ)⁻¹ = ((CCᵀ)⁻¹C)ᵀ since CCᵀ is symmetric.
        Eigen::LLT<Matrix> llt(c * c.transpose());
        if (llt.info() == Eigen::Success) {
            return llt.solve(c).transpose();
        }
    }
    return pseudoinverse_svd(c, 0.0);
}

ProjectorPair projectors_from_input(const Matrix& b, double tol) {
    const Matrix range = b * pseudoinverse_tall(b, tol);
    const Matrix id = Matrix::Identity(b.rows(), b.rows());
    return {range, id - range};
}

ProjectorPair projectors_from_output(const Matrix& c, double tol) {
    const Matrix range = pseudoinverse_wide(c, tol) * c;
    const Matrix id = Matrix::Identity(c.cols(), c.cols());
    return {range, id - range};
}

Matrix generalized_inverse(const Matrix& b, const Matrix& kernel, double tol) {
    require_finite(b, "input matrix");
    require_finite(kernel, "kernel matrix");
    if (kernel.rows() != b.cols() || kernel.cols() != b.rows()) {
        throw DimensionError("kernel matrix must be " + std::to_string(b.cols()) + "x" +
                             std::to_string(b.rows()) + ", got " + shape(kernel));
    }
    const Matrix kb = kernel * b;
    const int rank = numeric_rank(kb, tol);
    if (rank < b.cols()) {
        throw RankDeficient("K·B has numeric rank " + std::to_string(rank) + " < " +
                            std::to_string(b.cols()));
    }
    return kb.fullPivLu().solve(kernel);
}

std::vector<int> independent_column_indices(const Matrix& proj, int r, double tol) {
    const int rank = numeric_rank(proj, tol);
    if (rank != r) {
        throw RankMismatch("projector has numeric rank " + std::to_string(rank) + ", expected " +
                           std::to_string(r));
    }
    Matrix residual = proj;
    std::vector<int> chosen;
    std::vector<bool> used(static_cast<std::size_t>(proj.cols()), false);
    for (int k = 0; k < r; ++k) {
        int best = -1;
        double best_norm = -1.0;
        for (Eigen::Index j = 0; j < residual.cols(); ++j) {
            if (used[static_cast<std::size_t>(j)]) {
                continue;
            }
            const double nrm = residual.col(j).norm();
            if (nrm > best_norm) {
                best_norm = nrm;
                best = static_cast<int>(j);
            }
        }
        used[static_cast<std::size_t>(best)] = true;
        chosen.push_back(best);
        const Vector dir = residual.col(best) / best_norm;
        for (Eigen::Index j = 0; j < residual.cols(); ++j) {
            if (!used[static_cast<std::size_t>(j)]) {
                residual.col(j) -= dir * dir.dot(residual.col(j));
            }
        }
    }
    return chosen;
}

Matrix independent_columns(const Matrix& proj, int r, double tol) {
    const std::vector<int> idx = independent_column_indices(proj, r, tol);
    Matrix out(proj.rows(), r);
    for (int k = 0; k < r; ++k) {
        out.col(k) = proj.col(idx[static_cast<std::size_t>(k)]);
    }
    return out;
}

Matrix matrix_exponential(const Matrix& m) {
    require_finite(m, "matrix exponential argument");
    if (m.rows() != m.cols()) {
        throw DimensionError("matrix_exponential needs a square matrix, got " + shape(m));
    }
    const Eigen::Index n = m.rows();
    const double norm = n == 0 ? 0.0 : m.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    while (std::ldexp(norm, -squarings) > 0.5) {
        ++squarings;
    }
    const Matrix scaled = m * std::ldexp(1.0, -squarings);

    Matrix sum = Matrix::Identity(n, n);
    Matrix term = Matrix::Identity(n, n);
    for (int k = 1; k < 60; ++k) {
        term = term * scaled / static_cast<double>(k);
        sum += term;
        if (max_abs(term) <= 1e-16 * max_abs(sum)) {
            break;
        }
    }
    for (int s = 0; s < squarings; ++s) {
        sum = sum * sum;
    }
    return sum;
}

Matrix normal_form_transform(const Matrix& p, const Matrix& q, double tol) {
    if (p.rows() != p.cols() || q.rows() != q.cols() || p.rows() != q.rows()) {
        throw DimensionError("projectors must be square and of equal size");
    }
    const int rp = numeric_rank(p, tol);
    const int n = static_cast<int>(p.rows());
    Matrix t(n, n);
    if (rp > 0) {
        t.leftCols(rp) = independent_columns(p, rp, tol);
    }
    if (n - rp > 0) {
        t.rightCols(n - rp) = independent_columns(q, n - rp, tol);
    } else if (numeric_rank(q, tol) != 0) {
        throw RankMismatch("complement projector must vanish when P has full rank");
    }
    return t;
}

double max_abs(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace realize::linalg
