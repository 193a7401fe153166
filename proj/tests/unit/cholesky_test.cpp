#include <batchomp/cholesky.hpp>

#include <gtest/gtest.h>

#include "dense_reference.hpp"

#include <random>
#include <vector>

using namespace batchomp;
using testing_support::multiply;
using testing_support::transpose;

namespace {

PackedUpperTriangular packed(const DenseMatrix& m) { return PackedUpperTriangular::from_dense(m); }

CholeskyState from_lower(const DenseMatrix& v) {
    CholeskyState s(v.rows());
    for (std::size_t i = 0; i < v.rows(); ++i) {
        std::vector<double> row(i + 1);
        for (std::size_t j = 0; j <= i; ++j)
            row[j] = v(i, j);
        s.packed().append_column(row);
    }
    return s;
}

} // namespace

TEST(CholeskyFactor, OneByOne) {
    const auto v = cholesky_factor(packed(DenseMatrix::from_rows({{4}})));
    EXPECT_DOUBLE_EQ(v.lower(0, 0), 2.0);
}

TEST(CholeskyFactor, TwoByTwo) {
    const auto v = cholesky_factor(packed(DenseMatrix::from_rows({{1, 0.6}, {0.6, 1}})));
    EXPECT_NEAR(v.lower(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(v.lower(1, 0), 0.6, 1e-15);
    EXPECT_NEAR(v.lower(1, 1), 0.8, 1e-15);
}

TEST(CholeskyFactor, ReproducesGram) {
    std::mt19937_64 rng(3);
    const DenseMatrix a = testing_support::random_matrix(20, 8, rng);
    const DenseMatrix g = multiply(transpose(a), a);
    const DenseMatrix v = cholesky_factor(packed(g)).to_dense_lower();
    const DenseMatrix vvt = multiply(v, transpose(v));
    EXPECT_LE(testing_support::max_abs_diff(vvt.values(), g.values()), 1e-12);
}

TEST(CholeskyFactor, DependentColumnIsRankDeficient) {
    const DenseMatrix g = DenseMatrix::from_rows({{1, 1}, {1, 1}});
    try {
        cholesky_factor(packed(g));
        FAIL() << "expected rank deficiency";
    } catch (const RankDeficiencyError& e) {
        EXPECT_EQ(e.order(), 1u);
    }
}

TEST(TriangularSolve, ForwardSubstitution) {
    const CholeskyState v = from_lower(DenseMatrix::from_rows({{2, 0}, {1, 1}}));
    const auto x = triangular_solve(v, std::vector<double>{2, 3}, TriangularMode::forward);
    EXPECT_DOUBLE_EQ(x[0], 1.0);
    EXPECT_DOUBLE_EQ(x[1], 2.0);
}

TEST(TriangularSolve, BackwardUsesTranspose) {
    // V^T x = b with V = [[2,0],[1,1]]: [[2,1],[0,1]] x = (4, 2) -> (1, 2)
    const CholeskyState v = from_lower(DenseMatrix::from_rows({{2, 0}, {1, 1}}));
    const auto x = triangular_solve(v, std::vector<double>{4, 2}, TriangularMode::backward);
    EXPECT_DOUBLE_EQ(x[0], 1.0);
    EXPECT_DOUBLE_EQ(x[1], 2.0);
}

TEST(TriangularSolve, BothSolvesTheNormalEquations) {
    std::mt19937_64 rng(11);
    const DenseMatrix a = testing_support::random_matrix(15, 6, rng);
    const DenseMatrix g = multiply(transpose(a), a);
    const std::vector<double> rhs{1, -2, 0.5, 3, 0, 1};
    const auto x = triangular_solve(cholesky_factor(packed(g)), rhs, TriangularMode::both);
    const auto expected = testing_support::gauss_solve(g, rhs);
    EXPECT_LE(testing_support::max_abs_diff(x, expected), 1e-10);
}

TEST(TriangularSolve, LengthMismatch) {
    const CholeskyState v = from_lower(DenseMatrix::from_rows({{2, 0}, {1, 1}}));
    EXPECT_THROW(triangular_solve(v, std::vector<double>{1}, TriangularMode::both), InputError);
}

TEST(TriangularSolve, ZeroDiagonalIsNumericalError) {
    const CholeskyState v = from_lower(DenseMatrix::from_rows({{2, 0}, {1, 0}}));
    EXPECT_THROW(triangular_solve(v, std::vector<double>{1, 1}, TriangularMode::forward), NumericalError);
}

TEST(CholeskyAppend, MatchesFullFactorization) {
    std::mt19937_64 rng(5);
    const DenseMatrix a = testing_support::random_matrix(30, 12, rng);
    const DenseMatrix g = multiply(transpose(a), a);
    CholeskyState inc(12);
    for (std::size_t k = 0; k < 12; ++k) {
        std::vector<double> cross(k);
        for (std::size_t j = 0; j < k; ++j)
            cross[j] = g(j, k);
        cholesky_append(inc, cross, g(k, k));
    }
    const auto full = cholesky_factor(packed(g));
    EXPECT_LE(testing_support::max_abs_diff(inc.packed().active(), full.packed().active()), 1e-10);
}

TEST(CholeskyAppend, DuplicateColumnIsRankDeficientAndLeavesStateIntact) {
    CholeskyState s(3);
    cholesky_append(s, {}, 1.0);
    cholesky_append(s, std::vector<double>{0.6}, 1.0);
    const std::vector<double> before(s.packed().active().begin(), s.packed().active().end());
    // Same atom as column 1 again: cross = (0.6, 1), self = 1.
    EXPECT_THROW(cholesky_append(s, std::vector<double>{0.6, 1.0}, 1.0), RankDeficiencyError);
    EXPECT_EQ(s.order(), 2u);
    EXPECT_EQ(std::vector<double>(s.packed().active().begin(), s.packed().active().end()), before);
}

TEST(CholeskyAppend, NonPositiveSelfIsRankDeficient) {
    CholeskyState s(2);
    EXPECT_THROW(cholesky_append(s, {}, 0.0), RankDeficiencyError);
}

TEST(CholeskyAppend, FullFactorIsAddressingError) {
    CholeskyState s(1);
    cholesky_append(s, {}, 1.0);
    EXPECT_THROW(cholesky_append(s, std::vector<double>{0.0}, 1.0), AddressingError);
}
