#include <batchomp/naive.hpp>
#include <batchomp/oracle.hpp>
#include <batchomp/problem.hpp>

#include <gtest/gtest.h>

#include "dense_reference.hpp"

#include <random>
#include <vector>

using namespace batchomp;

TEST(OmpReference, IdentityTwoSteps) {
    const DenseMatrix eye = DenseMatrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    const auto rep = oracle::omp_reference(eye, std::vector<double>{2, -1, 0}, 2);
    EXPECT_EQ(rep.support, (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(rep.coefficients, (std::vector<double>{2, -1, 0}));
    EXPECT_EQ(rep.residual_norm, 0.0);
}

TEST(OmpReference, SingleAtomMeasurement) {
    std::mt19937_64 rng(4);
    const DenseMatrix dict = normalize_columns(testing_support::random_matrix(8, 20, rng)).first;
    std::vector<double> y(8);
    for (std::size_t m = 0; m < 8; ++m)
        y[m] = dict(m, 13);
    const auto rep = oracle::omp_reference(dict, y, 1);
    EXPECT_EQ(rep.support, (std::vector<std::size_t>{13}));
    EXPECT_NEAR(rep.coefficients[13], 1.0, 1e-14);
}

TEST(OmpReference, SparsityZeroIsRejected) {
    EXPECT_THROW(oracle::omp_reference(DenseMatrix::from_rows({{1}}), std::vector<double>{1}, 0), InputError);
}

TEST(OmpReference, MatchesNaiveSupports) {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 10; ++t) {
        const DenseMatrix dict = testing_support::random_matrix(16, 64, rng);
        const DenseMatrix y = testing_support::random_matrix(1, 16, rng);
        SolverOptions opts;
        opts.sparsity = 5;
        const auto naive = run_naive(dict, MeasurementBatch(y), opts);
        const auto ref = oracle::omp_reference(dict, y.line(0), 5);
        EXPECT_EQ(naive[0].support, ref.support);
    }
}

TEST(OmpReference, ResidualHistoryIsNonIncreasing) {
    std::mt19937_64 rng(37);
    const DenseMatrix dict = testing_support::random_matrix(20, 50, rng);
    const DenseMatrix y = testing_support::random_matrix(1, 20, rng);
    const auto rep = oracle::omp_reference(dict, y.line(0), 10);
    ASSERT_EQ(rep.residual_history.size(), 11u);
    for (std::size_t k = 1; k < rep.residual_history.size(); ++k)
        EXPECT_LE(rep.residual_history[k], rep.residual_history[k - 1] * (1 + 1e-12));
}

TEST(LeastSquares, DependentColumnsGiveNothing) {
    const DenseMatrix d = DenseMatrix::from_rows({{1, 2}, {1, 2}});
    EXPECT_FALSE(oracle::least_squares(d, std::vector<std::size_t>{0, 1}, std::vector<double>{1, 1}));
}

TEST(LeastSquares, MatchesNormalEquations) {
    std::mt19937_64 rng(43);
    const DenseMatrix dict = testing_support::random_matrix(12, 5, rng);
    const std::vector<double> y{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    const std::vector<std::size_t> cols{0, 2, 4};
    const auto ls = oracle::least_squares(dict, cols, y);
    ASSERT_TRUE(ls);
    const auto expected = testing_support::normal_equations(testing_support::columns(dict, cols), y);
    EXPECT_LE(testing_support::max_abs_diff(ls->x, expected), 1e-10);
}

TEST(ExhaustiveBestSupport, RecoversExactSparseSupport) {
    ProblemSpec spec;
    spec.m = 6;
    spec.n = 10;
    spec.s = 2;
    spec.b = 1;
    spec.seed = 5;
    const Problem p = generate_problem(spec);
    const auto rep = oracle::exhaustive_best_support(p.dict, p.y.line(0), 2);
    EXPECT_LE(rep.objective, 1e-12);
    std::vector<std::size_t> got = rep.support;
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, p.supports[0]);
}

TEST(ExhaustiveBestSupport, FullSupportWhenNEqualsS) {
    std::mt19937_64 rng(47);
    const DenseMatrix dict = testing_support::random_matrix(5, 3, rng);
    const auto rep = oracle::exhaustive_best_support(dict, std::vector<double>{1, 0, 0, 2, 1}, 3);
    EXPECT_EQ(rep.support, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(ExhaustiveBestSupport, GreedyNeverBeatsItAndSometimesLoses) {
    int strict = 0;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        ProblemSpec spec;
        spec.m = 6;
        spec.n = 10;
        spec.s = 2;
        spec.b = 1;
        spec.noise_sigma = 0.05;
        spec.seed = seed;
        const Problem p = generate_problem(spec);
        const auto greedy = oracle::omp_reference(p.dict, p.y.line(0), 2);
        const auto best = oracle::exhaustive_best_support(p.dict, p.y.line(0), 2);
        EXPECT_GE(greedy.objective, best.objective - 1e-12);
        strict += greedy.objective > best.objective + 1e-9;
    }
    EXPECT_GT(strict, 0);
}

TEST(ExhaustiveBestSupport, BudgetIsEnforced) {
    EXPECT_DOUBLE_EQ(oracle::binomial(10, 2), 45.0);
    std::mt19937_64 rng(53);
    const DenseMatrix dict = testing_support::random_matrix(40, 200, rng);
    EXPECT_THROW(oracle::exhaustive_best_support(dict, std::vector<double>(40, 1.0), 10), BudgetError);
}
