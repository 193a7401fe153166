#pragma once

#include <batchomp/dense.hpp>
#include <batchomp/errors.hpp>

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace batchomp {

enum class FactorStrategy {
    refactor, ///< full Cholesky of the packed Gram every iteration, O(k^3)
    update,   ///< one rank-extension of the stored factor per iteration, O(k^2)
};

struct SolverOptions {
    std::size_t sparsity = 1;
    /// Stop once the residual 2-norm is <= tolerance.
    std::optional<double> tolerance;
    bool precompute_gram = false;
    FactorStrategy factor_strategy = FactorStrategy::refactor;
    /// Normalize columns up front and rescale coefficients at the end. When
    /// false the dictionary must already have unit-norm columns.
    bool normalize = true;
    /// Upper bound on the v0 workspace estimate before allocation is refused.
    double workspace_limit_bytes = 16e9;

    void validate(std::size_t m) const {
        if (sparsity < 1 || sparsity > m)
            throw InputError("sparsity " + std::to_string(sparsity) + " outside [1, " +
                             std::to_string(m) + "]");
        if (tolerance && !(*tolerance >= 0.0))
            throw InputError("tolerance must be a non-negative number");
    }
};

/// B measurement vectors of length M (one per row), with optional
/// per-element tolerances overriding SolverOptions::tolerance.
struct MeasurementBatch {
    DenseMatrix y;
    std::vector<std::optional<double>> tolerances;

    MeasurementBatch() = default;
    explicit MeasurementBatch(DenseMatrix measurements) : y(std::move(measurements).with_layout(Layout::row_major)) {}

    std::size_t size() const noexcept { return y.rows(); }
    std::size_t length() const noexcept { return y.cols(); }
    std::span<const double> element(std::size_t b) const noexcept { return y.line(b); }

    std::optional<double> tolerance_for(std::size_t b, const SolverOptions& opts) const {
        if (b < tolerances.size() && tolerances[b])
            return tolerances[b];
        return opts.tolerance;
    }
};

enum class StopFlag {
    completed,   ///< reached k = S
    tol_reached, ///< residual fell to the tolerance (or to numerical zero)
    degenerate,  ///< next atom was dependent on / duplicate of the selected set
};

inline const char* to_string(StopFlag f) noexcept {
    switch (f) {
    case StopFlag::completed: return "completed";
    case StopFlag::tol_reached: return "tol_reached";
    case StopFlag::degenerate: return "degenerate";
    }
    return "?";
}

struct RecoveryResult {
    std::vector<double> coefficients; ///< length N, zero off-support
    std::vector<std::size_t> support; ///< in selection order
    double residual_norm = 0.0;
    std::size_t iterations = 0;
    StopFlag flag = StopFlag::completed;
};

/// Check dictionary/measurement shapes shared by all solver entry points.
inline void validate_problem(const DenseMatrix& dict, const MeasurementBatch& batch,
                             const SolverOptions& opts) {
    if (dict.rows() == 0 || dict.cols() == 0)
        throw InputError("empty dictionary");
    if (batch.length() != dict.rows())
        throw InputError("measurement length " + std::to_string(batch.length()) +
                         " does not match dictionary rows " + std::to_string(dict.rows()));
    if (!batch.tolerances.empty() && batch.tolerances.size() != batch.size())
        throw InputError("per-element tolerance count does not match batch size");
    for (const auto& t : batch.tolerances)
        if (t && !(*t >= 0.0))
            throw InputError("per-element tolerance must be non-negative");
    opts.validate(dict.rows());
    for (double v : dict.values())
        if (!std::isfinite(v))
            throw InputError("dictionary contains a non-finite value");
    for (double v : batch.y.values())
        if (!std::isfinite(v))
            throw InputError("measurements contain a non-finite value");
}

} // namespace batchomp
