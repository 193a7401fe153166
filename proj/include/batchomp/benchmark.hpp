#pragma once

#include <batchomp/batch_control.hpp>
#include <batchomp/classify.hpp>
#include <batchomp/errors.hpp>
#include <batchomp/naive.hpp>
#include <batchomp/oracle.hpp>
#include <batchomp/problem.hpp>
#include <batchomp/types.hpp>
#include <batchomp/v0.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace batchomp {

enum class Algorithm { reference, naive, naive_update, v0 };

inline std::string algorithm_name(Algorithm a) {
    switch (a) {
    case Algorithm::reference: return "reference";
    case Algorithm::naive: return "naive";
    case Algorithm::naive_update: return "naive-update";
    case Algorithm::v0: return "v0";
    }
    return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
    for (Algorithm a : {Algorithm::reference, Algorithm::naive, Algorithm::naive_update, Algorithm::v0})
        if (algorithm_name(a) == s)
            return a;
    throw InputError("unknown algorithm '" + s + "' (expected naive, naive-update, v0 or reference)");
}

struct BenchRecord {
    std::string algorithm;
    std::size_t m = 0;
    double wall_seconds = 0.0;
    double max_residual_norm = 0.0;
    bool supports_match_reference = false;
};

struct BenchRow {
    ProblemSpec spec; ///< resolved
    double gram_seconds = 0.0;
    std::vector<BenchRecord> records;
};

struct BenchOptions {
    std::size_t repetitions = 3;
    /// Elements cross-checked against the reference per (M, algorithm).
    std::size_t check_elements = 2;
    std::ostream* warnings = nullptr;
};

/// Median wall time of `reps` runs after one discarded warm-up run.
inline double median_seconds(const std::function<void()>& fn, std::size_t reps) {
    fn();
    std::vector<double> t;
    for (std::size_t r = 0; r < std::max<std::size_t>(reps, 1); ++r) {
        const auto start = std::chrono::steady_clock::now();
        fn();
        t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    std::sort(t.begin(), t.end());
    const std::size_t mid = t.size() / 2;
    return t.size() % 2 ? t[mid] : 0.5 * (t[mid - 1] + t[mid]);
}

inline std::vector<RecoveryResult> run_reference_batch(const DenseMatrix& dict, const MeasurementBatch& batch,
                                                       const SolverOptions& opts) {
    std::vector<RecoveryResult> out(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto rep = oracle::omp_reference(dict, batch.element(b), opts.sparsity,
                                               batch.tolerance_for(b, opts));
        out[b] = {rep.coefficients, rep.support, rep.residual_norm, rep.support.size(), rep.flag};
    }
    return out;
}

/// Compare against the reference on supports (exact) and coefficients.
/// Elements whose reference selection had a near tie are skipped.
inline bool matches_reference(const RecoveryResult& r, const oracle::OracleReport& ref, double tol) {
    if (r.support != ref.support)
        return false;
    double scale = 1.0;
    for (double v : ref.coefficients)
        scale = std::max(scale, std::fabs(v));
    for (std::size_t n = 0; n < ref.coefficients.size(); ++n)
        if (std::fabs(r.coefficients[n] - ref.coefficients[n]) > tol * scale)
            return false;
    return true;
}

inline constexpr double kBenchGapThreshold = 1e-9;
inline constexpr double kBenchCoefficientTolerance = 1e-6;

/// Time each algorithm on one generated problem. Every timed algorithm
/// must agree with the reference on the checked elements, otherwise this
/// throws.
inline BenchRow bench_one(const ProblemSpec& spec_in, const std::vector<Algorithm>& algs,
                          const BenchOptions& bo) {
    const ProblemSpec spec = spec_in.resolved();
    const Problem problem = generate_problem(spec);
    const MeasurementBatch batch(problem.y);
    SolverOptions opts;
    opts.sparsity = spec.s;

    BenchRow row;
    row.spec = spec;
    const SharedDictionary plain = share_dictionary(problem.dict, true, false);
    SharedDictionary with_gram = plain;
    row.gram_seconds = median_seconds([&] { with_gram.gram = gram_matrix(with_gram.prepared.matrix); },
                                      bo.repetitions);

    const std::size_t checks = std::min(bo.check_elements, batch.size());
    std::vector<oracle::OracleReport> refs;
    for (std::size_t b = 0; b < checks; ++b)
        refs.push_back(oracle::omp_reference(problem.dict, batch.element(b), spec.s));

    for (Algorithm a : algs) {
        std::vector<RecoveryResult> results;
        std::function<void()> fn;
        switch (a) {
        case Algorithm::reference:
            fn = [&] { results = run_reference_batch(problem.dict, batch, opts); };
            break;
        case Algorithm::naive:
            fn = [&] { results = run_core(Core::naive, plain, batch, opts); };
            break;
        case Algorithm::naive_update:
            fn = [&] { results = run_core(Core::naive_update, plain, batch, opts); };
            break;
        case Algorithm::v0:
            fn = [&] { results = run_core(Core::v0, with_gram, batch, opts); };
            break;
        }
        BenchRecord rec;
        rec.algorithm = algorithm_name(a);
        rec.m = spec.m;
        rec.wall_seconds = median_seconds(fn, bo.repetitions);
        for (const auto& r : results)
            rec.max_residual_norm = std::max(rec.max_residual_norm, r.residual_norm);
        rec.supports_match_reference = true;
        for (std::size_t b = 0; b < checks; ++b) {
            if (refs[b].min_selection_gap < kBenchGapThreshold)
                continue;
            if (!matches_reference(results[b], refs[b], kBenchCoefficientTolerance))
                throw Error("correctness gate failed: " + rec.algorithm + " disagrees with the reference on element " +
                            std::to_string(b) + " at M=" + std::to_string(spec.m));
        }
        if (rec.wall_seconds < 1e-3 && bo.warnings)
            *bo.warnings << "warning: median time for " << rec.algorithm << " at M=" << spec.m
                         << " is below 1 ms; timer resolution may dominate\n";
        row.records.push_back(rec);
    }
    return row;
}

inline std::vector<BenchRow> run_benchmark(const std::vector<ProblemSpec>& specs,
                                           const std::vector<Algorithm>& algs, const BenchOptions& bo) {
    if (specs.empty() || algs.empty())
        throw InputError("benchmark needs at least one problem size and one algorithm");
    std::vector<BenchRow> rows;
    for (const auto& s : specs)
        rows.push_back(bench_one(s, algs, bo));
    return rows;
}

/// One row per M, one timing column per algorithm (seconds).
inline std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    os << "m,n,s,b,gram_seconds";
    if (!rows.empty())
        for (const auto& r : rows.front().records)
            os << ',' << r.algorithm;
    os << '\n' << std::setprecision(6);
    for (const auto& row : rows) {
        os << row.spec.m << ',' << row.spec.n << ',' << row.spec.s << ',' << row.spec.b << ','
           << row.gram_seconds;
        for (const auto& r : row.records)
            os << ',' << r.wall_seconds;
        os << '\n';
    }
    return os.str();
}

} // namespace batchomp
