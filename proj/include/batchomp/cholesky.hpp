#pragma once

#include <batchomp/dense.hpp>
#include <batchomp/errors.hpp>
#include <batchomp/packed.hpp>

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace batchomp {

/// Relative threshold below which a new pivot counts as rank deficient:
/// pivot^2 <= kDegeneracyTolerance * (diagonal Gram entry).
inline constexpr double kDegeneracyTolerance = 1e-12;

/// Lower-triangular Cholesky factor V with V V^T = Gram.
///
/// V is held transposed in packed upper storage, so row i of V (entries
/// V(i, 0..i)) is the contiguous packed column i. Appending a row to V is
/// appending a packed column.
class CholeskyState {
public:
    CholeskyState() = default;
    explicit CholeskyState(std::size_t capacity) : factor_(capacity) {}

    std::size_t order() const noexcept { return factor_.order(); }
    std::size_t capacity() const noexcept { return factor_.capacity(); }

    /// V(i, j) for j <= i.
    double lower(std::size_t i, std::size_t j) const { return factor_(j, i); }

    /// Row i of V, entries 0..i.
    std::span<const double> row(std::size_t i) const noexcept { return factor_.column(i); }

    const PackedUpperTriangular& packed() const noexcept { return factor_; }
    PackedUpperTriangular& packed() noexcept { return factor_; }

    void truncate(std::size_t k) { factor_.set_order(k); }

    DenseMatrix to_dense_lower() const {
        const std::size_t k = order();
        DenseMatrix v(k, k);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j <= i; ++j)
                v(i, j) = lower(i, j);
        return v;
    }

private:
    PackedUpperTriangular factor_;
};

/// Full factorization of a packed SPD Gram matrix, O(k^3).
///
/// Column-oriented (left-looking): column j of V is finished before column
/// j+1 is touched. `capacity` reserves room for later appends.
inline CholeskyState cholesky_factor(const PackedUpperTriangular& gram, std::size_t capacity = 0) {
    const std::size_t k = gram.order();
    CholeskyState state(capacity < k ? k : capacity);
    PackedUpperTriangular& v = state.packed();
    v.set_order(k);

    for (std::size_t j = 0; j < k; ++j) {
        double pivot = gram(j, j);
        for (std::size_t p = 0; p < j; ++p)
            pivot -= v(p, j) * v(p, j);
        if (!(pivot > kDegeneracyTolerance * gram(j, j)))
            throw RankDeficiencyError(j, "non-positive pivot at order " + std::to_string(j) +
                                             " during Cholesky factorization");
        const double d = std::sqrt(pivot);
        v(j, j) = d;
        for (std::size_t i = j + 1; i < k; ++i) {
            double s = gram(j, i);
            for (std::size_t p = 0; p < j; ++p)
                s -= v(p, i) * v(p, j);
            v(j, i) = s / d;
        }
    }
    return state;
}

/// Solve V z = rhs in place (forward substitution), rhs length = order.
inline void forward_substitute(const CholeskyState& state, std::span<double> rhs) {
    const std::size_t k = state.order();
    for (std::size_t i = 0; i < k; ++i) {
        const auto row = state.row(i);
        double s = rhs[i];
        for (std::size_t p = 0; p < i; ++p)
            s -= row[p] * rhs[p];
        if (row[i] == 0.0)
            throw NumericalError("zero diagonal in Cholesky factor at " + std::to_string(i));
        rhs[i] = s / row[i];
    }
}

/// Solve V^T x = rhs in place (back substitution).
inline void backward_substitute(const CholeskyState& state, std::span<double> rhs) {
    const std::size_t k = state.order();
    for (std::size_t p = k; p-- > 0;) {
        const auto row = state.row(p);
        if (row[p] == 0.0)
            throw NumericalError("zero diagonal in Cholesky factor at " + std::to_string(p));
        const double x = rhs[p] / row[p];
        rhs[p] = x;
        for (std::size_t i = 0; i < p; ++i)
            rhs[i] -= row[i] * x;
    }
}

enum class TriangularMode { forward, backward, both };

/// forward: V w = rhs; backward: V^T x = rhs; both: V V^T x = rhs.
inline std::vector<double> triangular_solve(const CholeskyState& state, std::span<const double> rhs,
                                            TriangularMode mode) {
    if (rhs.size() != state.order())
        throw InputError("right-hand side length " + std::to_string(rhs.size()) +
                         " does not match factor order " + std::to_string(state.order()));
    std::vector<double> x(rhs.begin(), rhs.end());
    if (mode != TriangularMode::backward)
        forward_substitute(state, x);
    if (mode != TriangularMode::forward)
        backward_substitute(state, x);
    return x;
}

/// Extend V_k to V_{k+1} for a new column a with A_k^T a = `cross` and
/// a^T a = `self_sq`. One forward solve, O(k^2). On failure the state is
/// left unchanged.
inline void cholesky_append(CholeskyState& state, std::span<const double> cross, double self_sq) {
    const std::size_t k = state.order();
    if (cross.size() != k)
        throw InputError("cross-product length " + std::to_string(cross.size()) +
                         " does not match factor order " + std::to_string(k));
    if (!(self_sq > 0.0))
        throw RankDeficiencyError(k, "appended column has non-positive squared norm");
    if (k >= state.capacity())
        throw AddressingError("Cholesky factor is full at order " + std::to_string(k));

    // z is written straight into the new packed column.
    std::span<double> col = state.packed().column(k);
    std::copy(cross.begin(), cross.end(), col.begin());
    forward_substitute(state, col.first(k));

    const double remainder = self_sq - squared_norm(col.first(k));
    if (!(remainder > kDegeneracyTolerance * self_sq))
        throw RankDeficiencyError(k, "appended column is numerically dependent on the selected set");
    col[k] = std::sqrt(remainder);
    state.packed().set_order(k + 1);
}

} // namespace batchomp
