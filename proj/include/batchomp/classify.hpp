#pragma once

#include <batchomp/batch_control.hpp>
#include <batchomp/dense.hpp>
#include <batchomp/errors.hpp>
#include <batchomp/naive.hpp>
#include <batchomp/types.hpp>
#include <batchomp/v0.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace batchomp {

enum class Core { naive, naive_update, v0 };

inline std::vector<RecoveryResult> run_core(Core core, const SharedDictionary& shared,
                                            const MeasurementBatch& batch, SolverOptions opts) {
    switch (core) {
    case Core::naive:
        opts.factor_strategy = FactorStrategy::refactor;
        return run_naive(shared, batch, opts);
    case Core::naive_update:
        opts.factor_strategy = FactorStrategy::update;
        return run_naive(shared, batch, opts);
    case Core::v0:
        return run_v0(shared, batch, opts);
    }
    throw LogicError("unknown core");
}

/// Class decided by the smallest residual when y is explained only by the
/// selected atoms of that class. Classes without selected atoms score
/// +inf; ties go to the smallest class id.
inline int class_by_residual(const DenseMatrix& dict, std::span<const int> labels,
                             std::span<const int> classes, std::span<const double> y,
                             const RecoveryResult& result) {
    int best_class = classes.front();
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> r(y.size());
    for (int c : classes) {
        bool any = false;
        std::copy(y.begin(), y.end(), r.begin());
        for (std::size_t atom : result.support) {
            if (labels[atom] != c)
                continue;
            any = true;
            const double x = result.coefficients[atom];
            for (std::size_t i = 0; i < r.size(); ++i)
                r[i] -= dict(i, atom) * x;
        }
        const double score = any ? norm2(r) : std::numeric_limits<double>::infinity();
        if (score < best) {
            best = score;
            best_class = c;
        }
    }
    return best_class;
}

/// Sparse-representation classification of every row of `test` against a
/// labelled dictionary (one label per column).
inline std::vector<int> classify_by_residual(const DenseMatrix& train, std::span<const int> labels,
                                             const DenseMatrix& test, std::size_t sparsity,
                                             Core core = Core::naive) {
    if (labels.size() != train.cols())
        throw InputError("need one label per dictionary column (" + std::to_string(train.cols()) +
                         "), got " + std::to_string(labels.size()));
    std::vector<int> classes(labels.begin(), labels.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

    SolverOptions opts;
    opts.sparsity = sparsity;
    const SharedDictionary shared = share_dictionary(train, true, core == Core::v0);
    const MeasurementBatch batch(test);
    const auto results = run_core(core, shared, batch, opts);

    std::vector<int> predicted(results.size());
    for (std::size_t b = 0; b < results.size(); ++b)
        predicted[b] = class_by_residual(train, labels, classes, batch.element(b), results[b]);
    return predicted;
}

/// Synthetic labelled data: each class lives near its own random
/// low-dimensional subspace.
struct ClassProblem {
    DenseMatrix train;       ///< M x (classes * atoms_per_class)
    std::vector<int> labels; ///< per training column
    DenseMatrix test;        ///< tests x M
    std::vector<int> truth;  ///< per test row
};

struct ClassProblemSpec {
    std::size_t classes = 5;
    std::size_t atoms_per_class = 20;
    std::size_t m = 64;
    std::size_t subspace_dim = 4;
    std::size_t tests = 200;
    double noise_sigma = 0.01;
    std::uint64_t seed = 0;
};

inline ClassProblem generate_class_problem(const ClassProblemSpec& spec) {
    if (spec.classes == 0 || spec.atoms_per_class == 0 || spec.m == 0 || spec.subspace_dim == 0)
        throw InputError("class problem dimensions must be positive");
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<DenseMatrix> bases;
    for (std::size_t c = 0; c < spec.classes; ++c) {
        DenseMatrix u(spec.m, spec.subspace_dim);
        for (double& v : u.values())
            v = gauss(rng);
        bases.push_back(std::move(u));
    }
    auto sample = [&](std::size_t c, std::vector<double>& out) {
        std::vector<double> g(spec.subspace_dim);
        for (double& v : g)
            v = gauss(rng);
        for (std::size_t i = 0; i < spec.m; ++i) {
            double s = 0.0;
            for (std::size_t d = 0; d < spec.subspace_dim; ++d)
                s += bases[c](i, d) * g[d];
            out[i] = s;
        }
        const double nrm = norm2(out);
        for (double& v : out)
            v /= nrm;
    };

    ClassProblem p;
    const std::size_t n = spec.classes * spec.atoms_per_class;
    p.train = DenseMatrix(spec.m, n);
    p.labels.resize(n);
    std::vector<double> v(spec.m);
    for (std::size_t c = 0; c < spec.classes; ++c)
        for (std::size_t a = 0; a < spec.atoms_per_class; ++a) {
            const std::size_t col = c * spec.atoms_per_class + a;
            sample(c, v);
            for (std::size_t i = 0; i < spec.m; ++i)
                p.train(i, col) = v[i];
            p.labels[col] = static_cast<int>(c);
        }
    p.test = DenseMatrix(spec.tests, spec.m);
    p.truth.resize(spec.tests);
    std::uniform_int_distribution<std::size_t> pick(0, spec.classes - 1);
    for (std::size_t t = 0; t < spec.tests; ++t) {
        const std::size_t c = pick(rng);
        sample(c, v);
        for (std::size_t i = 0; i < spec.m; ++i)
            p.test(t, i) = v[i] + spec.noise_sigma * gauss(rng);
        p.truth[t] = static_cast<int>(c);
    }
    return p;
}

} // namespace batchomp
