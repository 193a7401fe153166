#pragma once

#include <batchomp/dense.hpp>
#include <batchomp/errors.hpp>
#include <batchomp/kernels.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace batchomp {

/// Synthetic recovery problem shape. Zero for `n` or `s` means "derive
/// from m": n = 8m atoms, s = m/4.
struct ProblemSpec {
    std::size_t m = 16;
    std::size_t n = 0;
    std::size_t s = 0;
    std::size_t b = 100;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    ProblemSpec resolved() const {
        ProblemSpec r = *this;
        if (r.n == 0)
            r.n = 8 * r.m;
        if (r.s == 0)
            r.s = std::max<std::size_t>(1, r.m / 4);
        return r;
    }

    void validate() const {
        const ProblemSpec r = resolved();
        if (r.m == 0 || r.s == 0 || r.s > r.m || r.m > r.n)
            throw InputError("problem spec needs 1 <= S <= M <= N (got M=" + std::to_string(r.m) +
                             ", N=" + std::to_string(r.n) + ", S=" + std::to_string(r.s) + ")");
        if (r.b == 0)
            throw InputError("batch size must be at least 1");
        if (!(r.noise_sigma >= 0.0))
            throw InputError("noise sigma must be non-negative");
    }
};

struct Problem {
    DenseMatrix dict;                            ///< M x N, unit-norm columns
    DenseMatrix y;                               ///< B x M
    DenseMatrix x;                               ///< B x N ground truth
    std::vector<std::vector<std::size_t>> supports; ///< ascending
};

/// Gaussian dictionary (columns normalized), uniformly random size-S
/// supports with Gaussian coefficients, y = A x + sigma * noise.
/// Deterministic for a given seed.
inline Problem generate_problem(const ProblemSpec& spec_in) {
    spec_in.validate();
    const ProblemSpec spec = spec_in.resolved();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    DenseMatrix raw(spec.m, spec.n);
    for (double& v : raw.values())
        v = gauss(rng);
    Problem p;
    p.dict = normalize_columns(raw).first;

    p.y = DenseMatrix(spec.b, spec.m);
    p.x = DenseMatrix(spec.b, spec.n);
    p.supports.resize(spec.b);
    std::vector<std::size_t> pool(spec.n);
    for (std::size_t e = 0; e < spec.b; ++e) {
        // Partial Fisher-Yates: the first S slots form a uniform sample.
        for (std::size_t i = 0; i < spec.n; ++i)
            pool[i] = i;
        for (std::size_t i = 0; i < spec.s; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, spec.n - 1);
            std::swap(pool[i], pool[pick(rng)]);
        }
        auto& support = p.supports[e];
        support.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(spec.s));
        std::sort(support.begin(), support.end());
        for (std::size_t idx : support)
            p.x(e, idx) = gauss(rng);

        for (std::size_t i = 0; i < spec.m; ++i) {
            double s = 0.0;
            for (std::size_t idx : support)
                s += p.dict(i, idx) * p.x(e, idx);
            p.y(e, i) = s;
        }
        if (spec.noise_sigma > 0.0)
            for (std::size_t i = 0; i < spec.m; ++i)
                p.y(e, i) += spec.noise_sigma * gauss(rng);
    }
    return p;
}

} // namespace batchomp
