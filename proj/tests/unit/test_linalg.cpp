#include "doctest.h"
#include "oracles.hpp"

#include "realize/errors.hpp"
#include "realize/linalg.hpp"

#include <random>

using namespace realize;
using namespace realize::linalg;

namespace {

Matrix full_rank_tall(std::mt19937_64& rng, int n, int p) {
    while (true) {
        Matrix b = oracle::random_matrix(rng, n, p);
        if (oracle::rank(b) == p) {
            return b;
        }
    }
}

}  // namespace

TEST_CASE("pseudoinverse of a tall matrix satisfies the Penrose conditions") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 8);
        const int p = 1 + static_cast<int>(rng() % static_cast<unsigned>(n));
        const Matrix b = full_rank_tall(rng, n, p);
        const Matrix bp = pseudoinverse_tall(b);
        CHECK(oracle::max_abs(b * bp * b - b) < 1e-10);
        CHECK(oracle::max_abs(bp * b * bp - bp) < 1e-10);
        CHECK(oracle::max_abs((b * bp).transpose() - b * bp) < 1e-10);
        CHECK(oracle::max_abs((bp * b).transpose() - bp * b) < 1e-10);
        // full column rank: left inverse, matching the normal-equation oracle
        CHECK(oracle::max_abs(bp * b - Matrix::Identity(p, p)) < 1e-10);
        const Matrix ref = oracle::inverse(b.transpose() * b) * b.transpose();
        CHECK(oracle::max_abs(bp - ref) < 1e-9);
    }
}

TEST_CASE("projector identities for P = BB+ and Q = 1 - P") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 8);
        const int p = 1 + static_cast<int>(rng() % static_cast<unsigned>(n));
        const Matrix b = full_rank_tall(rng, n, p);
        const auto pr = projectors_from_input(b);
        const Matrix& P = pr.range;
        const Matrix& Q = pr.complement;
        const Matrix bp = pseudoinverse_tall(b);
        CHECK(oracle::max_abs(P * P - P) < 1e-10);
        CHECK(oracle::max_abs(Q * Q - Q) < 1e-10);
        CHECK(oracle::max_abs(P * Q) < 1e-10);
        CHECK(oracle::max_abs(P + Q - Matrix::Identity(n, n)) < 1e-15);
        CHECK(oracle::max_abs(P.transpose() - P) < 1e-10);
        CHECK(oracle::max_abs(P * b - b) < 1e-10);
        CHECK(oracle::max_abs(Q * b) < 1e-10);
        CHECK(oracle::max_abs(bp * P - bp) < 1e-10);
        CHECK(oracle::max_abs(bp * Q) < 1e-10);
        CHECK(oracle::rank(P) == p);
        if (n > p) {
            CHECK(oracle::rank(Q) == n - p);
        }
    }
}

TEST_CASE("output pseudoinverse and M, N projectors") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 6);
        const int m = 1 + static_cast<int>(rng() % static_cast<unsigned>(n));
        const Matrix c = full_rank_tall(rng, n, m).transpose();
        const Matrix cp = pseudoinverse_wide(c);
        CHECK(oracle::max_abs(c * cp - Matrix::Identity(m, m)) < 1e-10);
        CHECK(oracle::max_abs(cp * c * cp - cp) < 1e-10);
        const auto mn = projectors_from_output(c);
        CHECK(oracle::max_abs(mn.range * mn.range - mn.range) < 1e-10);
        CHECK(oracle::max_abs(c * mn.complement) < 1e-10);
        CHECK(oracle::max_abs(cp - c.transpose() * oracle::inverse(c * c.transpose())) < 1e-9);
    }
}

TEST_CASE("pendulum input matrix gives the coordinate projectors") {
    Matrix b(2, 1);
    b << 0, 1;
    const auto pr = projectors_from_input(b);
    Matrix p_expected(2, 2), q_expected(2, 2);
    p_expected << 0, 0, 0, 1;
    q_expected << 1, 0, 0, 0;
    CHECK(pr.range == p_expected);
    CHECK(pr.complement == q_expected);
    CHECK(pseudoinverse_tall(b) == Matrix{{0.0, 1.0}});
}

TEST_CASE("rank-deficient input is rejected") {
    Matrix b(3, 2);
    b << 1, 2, 2, 4, 3, 6;
    CHECK_THROWS_AS(pseudoinverse_tall(b), RankDeficient);
    CHECK_THROWS_AS(projectors_from_input(b), RankDeficient);
    CHECK_THROWS_AS(pseudoinverse_tall(Matrix::Zero(3, 1)), RankDeficient);
    CHECK_THROWS_AS(pseudoinverse_tall(Matrix::Ones(2, 3)), DimensionError);
    CHECK_THROWS_AS(pseudoinverse_wide(Matrix::Ones(3, 2)), DimensionError);
    Matrix bad = Matrix::Ones(2, 1);
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(pseudoinverse_tall(bad), DomainError);
}

TEST_CASE("ill-conditioned Gram matrix still gives a left inverse") {
    Matrix b(3, 2);
    b << 1, 1, 1, 1 + 1e-7, 1, 1 - 1e-7;
    const Matrix bp = pseudoinverse_tall(b);
    CHECK(oracle::max_abs(bp * b - Matrix::Identity(2, 2)) < 1e-6);
    CHECK(oracle::max_abs(b * bp * b - b) < 1e-8);
}

TEST_CASE("generalized inverse from a kernel matrix") {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 6);
        const int p = 1 + static_cast<int>(rng() % static_cast<unsigned>(n));
        const Matrix b = full_rank_tall(rng, n, p);
        const Matrix k = oracle::random_matrix(rng, p, n);
        if (oracle::rank(k * b) < p) {
            continue;
        }
        const Matrix g = generalized_inverse(b, k);
        CHECK(oracle::max_abs(b * g * b - b) < 1e-8);
        CHECK(oracle::max_abs(g * b - Matrix::Identity(p, p)) < 1e-8);
    }
    Matrix b(2, 1);
    b << 0, 1;
    CHECK_THROWS_AS(generalized_inverse(b, Matrix{{1.0, 0.0}}), RankDeficient);
    CHECK_THROWS_AS(generalized_inverse(b, Matrix::Ones(2, 2)), DimensionError);
    // K = Bᵀ reproduces the pseudoinverse
    const Matrix bb = full_rank_tall(rng, 5, 2);
    CHECK(oracle::max_abs(generalized_inverse(bb, bb.transpose()) - pseudoinverse_tall(bb)) <
          1e-10);
}

TEST_CASE("numeric rank uses a relative threshold") {
    Matrix m = Matrix::Zero(3, 3);
    CHECK(numeric_rank(m) == 0);
    m(0, 0) = 1e-30;
    CHECK(numeric_rank(m) == 1);
    m(1, 1) = 1e-41;
    CHECK(numeric_rank(m) == 1);
    m(1, 1) = 1e-35;
    CHECK(numeric_rank(m) == 2);
    CHECK(numeric_rank(Matrix::Identity(4, 4)) == 4);
}

TEST_CASE("independent columns: largest residual first, lowest index on ties") {
    Matrix q(4, 4);
    q.setZero();
    q(0, 0) = q(2, 2) = q(3, 3) = 1.0;  // devasia-style complement
    CHECK(independent_column_indices(q, 3) == std::vector<int>{0, 2, 3});
    Matrix p(3, 3);
    p << 0.5, 0.5, 0, 0.5, 0.5, 0, 0, 0, 0;
    CHECK(independent_column_indices(p, 1) == std::vector<int>{0});
    Matrix w(2, 2);
    w << 1, 0, 0, 3;
    CHECK(independent_column_indices(w, 2) == std::vector<int>{1, 0});
    CHECK_THROWS_AS(independent_columns(q, 2), RankMismatch);
}

TEST_CASE("matrix exponential against a long-double Taylor oracle") {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 6);
        const double scale = trial < 10 ? 0.1 : (trial < 20 ? 1.0 : 5.0);
        const Matrix a = oracle::random_matrix(rng, n, n, scale);
        const Matrix e = matrix_exponential(a);
        const Matrix ref = oracle::expm(a);
        CHECK(oracle::max_abs(e - ref) <= 1e-11 * std::max(1.0, oracle::max_abs(ref)));
        CHECK(oracle::max_abs(e * matrix_exponential(-a) - Matrix::Identity(n, n)) < 1e-8);
    }
    Matrix nil(2, 2);
    nil << 0, 1, 0, 0;
    Matrix expected(2, 2);
    expected << 1, 1, 0, 1;
    CHECK(oracle::max_abs(matrix_exponential(nil) - expected) < 1e-15);
    Matrix rot(2, 2);
    rot << 0, -1, 1, 0;
    const Matrix r = matrix_exponential(rot * 0.7);
    CHECK(r(0, 0) == doctest::Approx(std::cos(0.7)).epsilon(1e-14));
    CHECK(r(1, 0) == doctest::Approx(std::sin(0.7)).epsilon(1e-14));
    CHECK(matrix_exponential(Matrix::Zero(0, 0)).size() == 0);
    CHECK_THROWS_AS(matrix_exponential(Matrix::Ones(2, 3)), DimensionError);
}

TEST_CASE("normal form transform diagonalises Q") {
    std::mt19937_64 rng(16);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 6);
        const int p = 1 + static_cast<int>(rng() % static_cast<unsigned>(n - 1));
        const auto pr = projectors_from_input(full_rank_tall(rng, n, p));
        const Matrix t = normal_form_transform(pr.range, pr.complement);
        const Matrix d = oracle::inverse(t) * pr.complement * t;
        Matrix expected = Matrix::Zero(n, n);
        for (int i = p; i < n; ++i) {
            expected(i, i) = 1.0;
        }
        CHECK(oracle::max_abs(d - expected) < 1e-8);
    }
}

TEST_CASE("worked examples") {
    CHECK(pseudoinverse_tall(Matrix{{0.0}, {2.0}}) == Matrix{{0.0, 0.5}});
    CHECK(pseudoinverse_tall(Matrix::Identity(3, 3)) == Matrix::Identity(3, 3));
    CHECK(pseudoinverse_wide(Matrix{{1.0, 0.0}}) == Matrix{{1.0}, {0.0}});
    const Matrix cp = pseudoinverse_wide(Matrix{{1.0, 0.0, -3.0, 0.0}});
    CHECK(oracle::max_abs(cp - Matrix{{0.1}, {0.0}, {-0.3}, {0.0}}) < 1e-16);
    const auto mn = projectors_from_output(Matrix{{1.0, 0.0, -3.0, 0.0}});
    CHECK(oracle::max_abs(mn.range * mn.range - mn.range) < 1e-12);
    const auto sel = projectors_from_output(Matrix{{0.0, 1.0}});
    CHECK(sel.range == Matrix{{0.0, 0.0}, {0.0, 1.0}});
    CHECK(sel.complement == Matrix{{1.0, 0.0}, {0.0, 0.0}});
    const auto id = projectors_from_input(Matrix::Identity(3, 3));
    CHECK(id.range == Matrix::Identity(3, 3));
    CHECK(id.complement == Matrix::Zero(3, 3));
    for (double x4 : {0.0, 0.4, 2.0, -7.0}) {
        Matrix b = Matrix::Zero(4, 1);
        b(1, 0) = 2.0 + std::pow(std::sin(x4), 2);
        Matrix p = Matrix::Zero(4, 4);
        p(1, 1) = 1.0;
        CHECK(oracle::max_abs(projectors_from_input(b).range - p) < 1e-15);
    }
    CHECK(generalized_inverse(Matrix{{0.0}, {1.0}}, Matrix{{1.0, 1.0}}) == Matrix{{1.0, 1.0}});
    CHECK(independent_columns(Matrix{{1.0, 0.0}, {0.0, 0.0}}, 1) == Matrix{{1.0}, {0.0}});
    CHECK(independent_columns(Matrix::Identity(2, 2), 2) == Matrix::Identity(2, 2));
    Matrix p4 = Matrix::Zero(4, 4);
    p4(1, 1) = 1.0;
    CHECK(independent_columns(p4, 1) == Matrix{{0.0}, {1.0}, {0.0}, {0.0}});
    CHECK(numeric_rank(Matrix{{1.0, 1.0}, {1.0, 1.0}}) == 1);
    CHECK(matrix_exponential(Matrix::Zero(3, 3)) == Matrix::Identity(3, 3));
    Matrix d = Matrix::Zero(3, 3);
    d.diagonal() << -1.0, 0.5, 2.0;
    const Matrix ed = matrix_exponential(d);
    for (int i = 0; i < 3; ++i) {
        CHECK(ed(i, i) == doctest::Approx(std::exp(d(i, i))).epsilon(1e-14));
    }
    const Matrix t = normal_form_transform(Matrix{{0.0, 0.0}, {0.0, 1.0}}, Matrix{{1.0, 0.0}, {0.0, 0.0}});
    CHECK(t == Matrix{{0.0, 1.0}, {1.0, 0.0}});
    CHECK(normal_form_transform(Matrix::Identity(2, 2), Matrix::Zero(2, 2)) == Matrix::Identity(2, 2));
}
