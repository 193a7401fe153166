// Randomized invariants shared by all cores.

#include <batchomp/naive.hpp>
#include <batchomp/oracle.hpp>
#include <batchomp/problem.hpp>
#include <batchomp/v0.hpp>

#include <gtest/gtest.h>

#include "dense_reference.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cmath>
#include <functional>
#include <random>
#include <vector>

using namespace batchomp;

namespace {

using Runner = std::function<std::vector<RecoveryResult>(const DenseMatrix&, const MeasurementBatch&,
                                                         const SolverOptions&)>;

std::vector<std::pair<const char*, Runner>> cores() {
    return {
        {"naive", [](const DenseMatrix& d, const MeasurementBatch& b, SolverOptions o) {
             o.factor_strategy = FactorStrategy::refactor;
             return run_naive(d, b, o);
         }},
        {"naive-update", [](const DenseMatrix& d, const MeasurementBatch& b, SolverOptions o) {
             o.factor_strategy = FactorStrategy::update;
             return run_naive(d, b, o);
         }},
        {"v0", [](const DenseMatrix& d, const MeasurementBatch& b, const SolverOptions& o) {
             return run_v0(d, b, o);
         }},
    };
}

Problem noisy_problem(std::size_t m, std::uint64_t seed, std::size_t batch = 8) {
    ProblemSpec spec;
    spec.m = m;
    spec.b = batch;
    spec.noise_sigma = 0.05;
    spec.seed = seed;
    return generate_problem(spec);
}

std::vector<double> residual(const DenseMatrix& dict, std::span<const double> y, const RecoveryResult& r) {
    std::vector<double> out(y.begin(), y.end());
    for (std::size_t n : r.support)
        for (std::size_t m = 0; m < out.size(); ++m)
            out[m] -= dict(m, n) * r.coefficients[n];
    return out;
}

} // namespace

TEST(Properties, ResidualIsOrthogonalToSelectedAtoms) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const Problem p = noisy_problem(32, seed);
        SolverOptions opts;
        opts.sparsity = 8;
        const MeasurementBatch batch(p.y);
        for (const auto& [name, run] : cores()) {
            const auto results = run(p.dict, batch, opts);
            for (std::size_t b = 0; b < batch.size(); ++b) {
                const auto r = residual(p.dict, batch.element(b), results[b]);
                for (std::size_t n : results[b].support) {
                    double d = 0.0;
                    for (std::size_t m = 0; m < r.size(); ++m)
                        d += p.dict(m, n) * r[m];
                    EXPECT_LE(std::fabs(d), 1e-8) << name;
                }
                EXPECT_NEAR(results[b].residual_norm, norm2(r), 1e-10);
            }
        }
    }
}

TEST(Properties, ResidualNormNeverIncreases) {
    const Problem p = noisy_problem(32, 11);
    SolverOptions opts;
    opts.sparsity = 8;
    const MeasurementBatch batch(p.y);
    for (const auto& [name, run] : cores()) {
        std::vector<double> last(batch.size());
        for (std::size_t b = 0; b < batch.size(); ++b)
            last[b] = norm2(batch.element(b));
        auto observer = [&](const IterationEvent& e) {
            EXPECT_LE(e.residual_norm, last[e.element] * (1 + 1e-12)) << name;
            last[e.element] = e.residual_norm;
        };
        if (std::string(name) == "v0")
            run_v0(p.dict, batch, opts, observer);
        else {
            SolverOptions o = opts;
            o.factor_strategy = std::string(name) == "naive" ? FactorStrategy::refactor : FactorStrategy::update;
            run_naive(p.dict, batch, o, observer);
        }
    }
}

TEST(Properties, ToleranceStopsAtFirstQualifyingIteration) {
    const Problem p = noisy_problem(32, 17);
    const MeasurementBatch batch(p.y);
    // Reference residual histories decide where each element should stop.
    for (const double eps : {0.5, 0.2, 0.06}) {
        SolverOptions opts;
        opts.sparsity = 16;
        opts.tolerance = eps;
        for (const auto& [name, run] : cores()) {
            const auto results = run(p.dict, batch, opts);
            for (std::size_t b = 0; b < batch.size(); ++b) {
                const auto ref = oracle::omp_reference(p.dict, batch.element(b), 16);
                std::size_t expected = 16;
                for (std::size_t k = 0; k < ref.residual_history.size(); ++k)
                    if (ref.residual_history[k] <= eps) {
                        expected = k;
                        break;
                    }
                EXPECT_EQ(results[b].iterations, expected) << name << " eps " << eps;
                if (expected < 16) {
                    EXPECT_EQ(results[b].flag, StopFlag::tol_reached);
                    EXPECT_LE(results[b].residual_norm, eps);
                }
            }
        }
    }
}

TEST(Properties, PrecomputedGramChangesNothing) {
    const Problem p = noisy_problem(16, 23);
    const MeasurementBatch batch(p.y);
    SolverOptions a;
    a.sparsity = 4;
    SolverOptions b = a;
    b.precompute_gram = true;
    for (auto s : {FactorStrategy::refactor, FactorStrategy::update}) {
        a.factor_strategy = b.factor_strategy = s;
        const auto ra = run_naive(p.dict, batch, a);
        const auto rb = run_naive(p.dict, batch, b);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            EXPECT_EQ(ra[i].support, rb[i].support);
            EXPECT_LE(testing_support::max_abs_diff(ra[i].coefficients, rb[i].coefficients), 1e-12);
        }
    }
}

TEST(Properties, ColumnScalingOnlyRescalesCoefficients) {
    const Problem p = noisy_problem(16, 29);
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> scale(0.1, 10.0);
    DenseMatrix scaled = p.dict;
    std::vector<double> c(p.dict.cols());
    for (std::size_t n = 0; n < c.size(); ++n) {
        c[n] = scale(rng);
        for (std::size_t m = 0; m < p.dict.rows(); ++m)
            scaled(m, n) *= c[n];
    }
    const MeasurementBatch batch(p.y);
    SolverOptions opts;
    opts.sparsity = 4;
    for (const auto& [name, run] : cores()) {
        const auto base = run(p.dict, batch, opts);
        const auto other = run(scaled, batch, opts);
        for (std::size_t b = 0; b < batch.size(); ++b) {
            EXPECT_EQ(base[b].support, other[b].support) << name;
            for (std::size_t n = 0; n < c.size(); ++n)
                EXPECT_NEAR(other[b].coefficients[n] * c[n], base[b].coefficients[n], 1e-8);
        }
    }
}

TEST(Properties, ResultsIndependentOfThreadCount) {
#ifdef _OPENMP
    const Problem p = noisy_problem(32, 31, 24);
    const MeasurementBatch batch(p.y);
    SolverOptions opts;
    opts.sparsity = 8;
    const int saved = omp_get_max_threads();
    for (const auto& [name, run] : cores()) {
        omp_set_num_threads(1);
        const auto one = run(p.dict, batch, opts);
        omp_set_num_threads(4);
        const auto four = run(p.dict, batch, opts);
        for (std::size_t b = 0; b < batch.size(); ++b) {
            EXPECT_EQ(one[b].support, four[b].support) << name;
            EXPECT_EQ(one[b].coefficients, four[b].coefficients) << name;
        }
    }
    omp_set_num_threads(saved);
#else
    GTEST_SKIP() << "built without OpenMP";
#endif
}

// When every off-support atom satisfies ||A_S^+ a_j||_1 < 1, greedy
// selection is guaranteed to pick only support atoms, so noiseless
// measurements are recovered exactly.
TEST(Properties, ExactRecoveryWhenSupportIsWellSeparated) {
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        ProblemSpec spec;
        spec.m = 6;
        spec.n = 10;
        spec.s = 2;
        spec.b = 1;
        spec.seed = seed;
        const Problem p = generate_problem(spec);
        const auto& sup = p.supports[0];
        const DenseMatrix as = testing_support::columns(p.dict, sup);
        double worst = 0.0;
        for (std::size_t j = 0; j < 10; ++j) {
            if (std::find(sup.begin(), sup.end(), j) != sup.end())
                continue;
            std::vector<double> aj(6);
            for (std::size_t m = 0; m < 6; ++m)
                aj[m] = p.dict(m, j);
            const auto coef = testing_support::normal_equations(as, aj);
            worst = std::max(worst, std::fabs(coef[0]) + std::fabs(coef[1]));
        }
        if (worst >= 1.0)
            continue;
        ++checked;
        const auto rep = oracle::omp_reference(p.dict, p.y.line(0), 2);
        EXPECT_LE(rep.objective, 1e-10) << "seed " << seed;
    }
    EXPECT_GT(checked, 20);
}
