#include <batchomp/benchmark.hpp>
#include <batchomp/problem.hpp>

#include <gtest/gtest.h>

#include <sstream>
#include <string>

using namespace batchomp;

TEST(ProblemSpec, DefaultsDeriveFromM) {
    ProblemSpec spec;
    spec.m = 16;
    const ProblemSpec r = spec.resolved();
    EXPECT_EQ(r.n, 128u);
    EXPECT_EQ(r.s, 4u);
    EXPECT_EQ(r.b, 100u);
}

TEST(ProblemSpec, InvalidShapesAreRejected) {
    ProblemSpec spec;
    spec.m = 8;
    spec.s = 9;
    EXPECT_THROW(spec.validate(), InputError);
    spec.s = 2;
    spec.n = 4;
    EXPECT_THROW(spec.validate(), InputError);
    spec.n = 0;
    spec.b = 0;
    EXPECT_THROW(spec.validate(), InputError);
    spec.b = 1;
    spec.noise_sigma = -1;
    EXPECT_THROW(spec.validate(), InputError);
}

TEST(GenerateProblem, NoiselessMeasurementsAreExact) {
    ProblemSpec spec;
    spec.m = 16;
    spec.b = 10;
    spec.seed = 3;
    const Problem p = generate_problem(spec);
    EXPECT_EQ(p.dict.rows(), 16u);
    EXPECT_EQ(p.dict.cols(), 128u);
    for (std::size_t b = 0; b < 10; ++b) {
        EXPECT_EQ(p.supports[b].size(), 4u);
        for (std::size_t m = 0; m < 16; ++m) {
            double s = 0.0;
            for (std::size_t n : p.supports[b])
                s += p.dict(m, n) * p.x(b, n);
            EXPECT_EQ(s, p.y(b, m));
        }
    }
}

TEST(GenerateProblem, ColumnsAreUnitNorm) {
    ProblemSpec spec;
    spec.m = 8;
    const Problem p = generate_problem(spec);
    for (double v : column_norms(p.dict))
        EXPECT_NEAR(v, 1.0, 1e-14);
}

TEST(GenerateProblem, SameSeedIsBitIdentical) {
    ProblemSpec spec;
    spec.m = 8;
    spec.noise_sigma = 0.1;
    spec.seed = 99;
    const Problem a = generate_problem(spec);
    const Problem b = generate_problem(spec);
    EXPECT_EQ(a.dict, b.dict);
    EXPECT_EQ(a.y, b.y);
    EXPECT_EQ(a.x, b.x);
    spec.seed = 100;
    EXPECT_FALSE(generate_problem(spec).y == a.y);
}

TEST(Benchmark, SingleAlgorithmGivesOneColumn) {
    ProblemSpec spec;
    spec.m = 16;
    spec.b = 20;
    BenchOptions bo;
    bo.repetitions = 3;
    const auto rows = run_benchmark({spec}, {Algorithm::naive}, bo);
    ASSERT_EQ(rows.size(), 1u);
    ASSERT_EQ(rows[0].records.size(), 1u);
    EXPECT_GT(rows[0].records[0].wall_seconds, 0.0);
    const std::string csv = bench_csv(rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "m,n,s,b,gram_seconds,naive");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(Benchmark, ColumnsForEachCore) {
    ProblemSpec spec;
    spec.m = 16;
    spec.b = 10;
    BenchOptions bo;
    bo.repetitions = 1;
    const auto rows = run_benchmark(
        {spec}, {Algorithm::reference, Algorithm::naive, Algorithm::naive_update, Algorithm::v0}, bo);
    const std::string csv = bench_csv(rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "m,n,s,b,gram_seconds,reference,naive,naive-update,v0");
}

TEST(Benchmark, FastTimingsWarn) {
    ProblemSpec spec;
    spec.m = 8;
    spec.b = 1;
    std::ostringstream warnings;
    BenchOptions bo;
    bo.repetitions = 1;
    bo.warnings = &warnings;
    run_benchmark({spec}, {Algorithm::naive}, bo);
    EXPECT_NE(warnings.str().find("below 1 ms"), std::string::npos);
}

TEST(Benchmark, EmptyInputsAreRejected) {
    EXPECT_THROW(run_benchmark({}, {Algorithm::naive}, {}), InputError);
    EXPECT_THROW(run_benchmark({ProblemSpec{}}, {}, {}), InputError);
}

TEST(Benchmark, AlgorithmNamesRoundTrip) {
    for (auto a : {Algorithm::reference, Algorithm::naive, Algorithm::naive_update, Algorithm::v0})
        EXPECT_EQ(parse_algorithm(algorithm_name(a)), a);
    EXPECT_THROW(parse_algorithm("gpu"), InputError);
}

TEST(Benchmark, V0FasterThanNaiveAtLargeM) {
    ProblemSpec spec;
    spec.m = 512;
    spec.b = 100;
    BenchOptions bo;
    bo.repetitions = 1;
    const BenchRow row = bench_one(spec, {Algorithm::naive, Algorithm::v0}, bo);
    const double naive = row.records[0].wall_seconds;
    const double v0 = row.records[1].wall_seconds + row.gram_seconds;
    EXPECT_LT(v0, naive);
}
