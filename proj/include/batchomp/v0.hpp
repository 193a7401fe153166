#pragma once

#include <batchomp/batch_control.hpp>
#include <batchomp/cholesky.hpp>
#include <batchomp/dense.hpp>
#include <batchomp/errors.hpp>
#include <batchomp/kernels.hpp>
#include <batchomp/packed.hpp>
#include <batchomp/types.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace batchomp {

/// Inverse Cholesky factor F_k = V_k^{-T} (upper triangular, packed by
/// column) plus the quantities of the latest extension.
struct InverseCholState {
    PackedUpperTriangular factor;
    double gamma = 0.0;
    std::vector<double> z;

    InverseCholState() = default;
    explicit InverseCholState(std::size_t capacity) : factor(capacity) { z.reserve(capacity); }

    std::size_t order() const noexcept { return factor.order(); }
};

/// Per-element v0 state. `projections` is A^T r_k kept current in place;
/// row j of `d` is column j of D_k = A^T A_k F_k.
class ProjectionState {
public:
    ProjectionState() = default;
    ProjectionState(std::span<const double> initial_projections, std::size_t capacity, double y_norm)
        : projections(initial_projections.begin(), initial_projections.end()),
          residual_sq(y_norm * y_norm), y_norm(y_norm), n_(initial_projections.size()),
          capacity_(capacity) {
        // Row j is fully written before it is ever read.
        d_ = std::make_unique_for_overwrite<double[]>(capacity * n_);
#ifdef BATCHOMP_POISON_WORKSPACE
        std::fill_n(d_.get(), capacity * n_, std::numeric_limits<double>::quiet_NaN());
#endif
        aty.reserve(capacity);
        weights.reserve(capacity);
        support.reserve(capacity);
    }

    std::size_t atoms() const noexcept { return n_; }
    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t k() const noexcept { return support.size(); }

    std::span<const double> d_row(std::size_t j) const noexcept { return {d_.get() + j * n_, n_}; }
    std::span<double> d_row(std::size_t j) noexcept { return {d_.get() + j * n_, n_}; }

    bool contains(std::size_t atom) const {
        return std::find(support.begin(), support.end(), atom) != support.end();
    }

    std::vector<double> projections;
    std::vector<double> aty;          ///< A_k^T y gathered on selection
    std::vector<double> weights;      ///< q_j^T y for each orthonormalized atom
    std::vector<std::size_t> support;
    double residual_sq = 0.0;         ///< tracked ||r_k||^2
    double y_norm = 0.0;

private:
    std::size_t n_ = 0;
    std::size_t capacity_ = 0;
    std::unique_ptr<double[]> d_;
};

namespace detail {

// row -= sum_j z[j] * D row j, four D rows per sweep over `row`.
inline void subtract_rows(const ProjectionState& state, std::span<const double> z,
                          std::span<double> row) {
    const std::size_t k = z.size();
    const std::size_t n = row.size();
    double* __restrict out = row.data();
    std::size_t j = 0;
    for (; j + 4 <= k; j += 4) {
        const double* __restrict d0 = state.d_row(j).data();
        const double* __restrict d1 = state.d_row(j + 1).data();
        const double* __restrict d2 = state.d_row(j + 2).data();
        const double* __restrict d3 = state.d_row(j + 3).data();
        const double z0 = z[j], z1 = z[j + 1], z2 = z[j + 2], z3 = z[j + 3];
        for (std::size_t i = 0; i < n; ++i)
            out[i] -= ((z0 * d0[i] + z1 * d1[i]) + (z2 * d2[i] + z3 * d3[i]));
    }
    for (; j < k; ++j)
        axpy(-z[j], state.d_row(j), row);
}

} // namespace detail

struct V0Step {
    std::size_t atom = 0;
    bool accepted = false; ///< false: degenerate, state unchanged
};

/// Shared Gram table and initial projections A^T y (B x N) for a batch.
struct V0Setup {
    const DenseMatrix* gram = nullptr;
    DenseMatrix aty;
};

/// Bytes for inputs, Gram and the B D-matrices, O(NM + N^2 + BNS).
inline double v0_workspace_bytes(std::size_t m, std::size_t n, std::size_t batch, std::size_t s) {
    const double nd = static_cast<double>(n);
    return 8.0 * (nd * static_cast<double>(m) + nd * nd +
                  static_cast<double>(batch) * nd * static_cast<double>(s));
}

/// Compute A^T y for the batch with one product and allocate per-element
/// states. The Gram table must already be present in `shared`.
inline V0Setup init_v0(const SharedDictionary& shared, const MeasurementBatch& batch,
                       const SolverOptions& opts, std::vector<ProjectionState>& states,
                       std::vector<InverseCholState>& inverses) {
    if (!shared.gram)
        throw InputError("v0 requires the Gram table of the shared dictionary");
    const std::size_t n = shared.atoms();
    const double estimate = v0_workspace_bytes(shared.rows(), n, batch.size(), opts.sparsity);
    if (estimate > opts.workspace_limit_bytes)
        throw SizingError("v0 workspace needs about " + std::to_string(estimate / 1e9) +
                          " GB (8 bytes x (NM + N^2 + BNS)), above the configured limit");
    try {
        V0Setup setup{&*shared.gram, flatten_batched_product(shared.matrix().view().transposed(), batch.y)};
        states.clear();
        inverses.clear();
        states.reserve(batch.size());
        inverses.reserve(batch.size());
        for (std::size_t b = 0; b < batch.size(); ++b) {
            states.emplace_back(setup.aty.line(b), opts.sparsity, norm2(batch.element(b)));
            inverses.emplace_back(opts.sparsity);
        }
        return setup;
    } catch (const std::bad_alloc&) {
        throw SizingError("allocation failed for the v0 workspace of about " +
                          std::to_string(estimate / 1e9) + " GB (8 bytes x (NM + N^2 + BNS))");
    }
}

/// One v0 iteration: pick the atom with the largest |projection|, extend
/// F and D by one column/row, and downdate the projections with a single
/// N-length axpy. `aty_row` is A^T y for this element.
inline V0Step v0_iterate(ProjectionState& state, InverseCholState& inv, const DenseMatrix& gram,
                         std::span<const double> aty_row) {
    const std::size_t k = state.k();
    if (k >= state.capacity())
        throw LogicError("v0 iteration past the sparsity level");

    const std::size_t atom = abs_argmax(state.projections);
    if (state.contains(atom))
        return {atom, false};

    // z_j = q_j^T a: the correlation of the new atom with each orthonormal
    // direction is already tabulated in D.
    std::vector<double> z(k);
    for (std::size_t j = 0; j < k; ++j)
        z[j] = state.d_row(j)[atom];
    const double self_sq = gram(atom, atom);
    const double remainder = self_sq - squared_norm(z);
    if (!(remainder > kDegeneracyTolerance * self_sq))
        return {atom, false};
    const double gamma = 1.0 / std::sqrt(remainder);

    // D row k = gamma * ([A^T A]_atom - D_{0..k-1}^T z)
    std::span<double> row = state.d_row(k);
    const std::span<const double> gram_row = gram.line(atom);
    std::copy(gram_row.begin(), gram_row.end(), row.begin());
    detail::subtract_rows(state, z, row);
    for (double& v : row)
        v *= gamma;

    // F column k = [-gamma F_{k-1} z; gamma]
    std::vector<double> f(k + 1, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        const auto col = inv.factor.column(j);
        for (std::size_t i = 0; i <= j; ++i)
            f[i] += col[i] * z[j];
    }
    for (std::size_t i = 0; i < k; ++i)
        f[i] *= -gamma;
    f[k] = gamma;
    inv.factor.append_column(f);
    inv.gamma = gamma;
    inv.z = std::move(z);

    state.aty.push_back(aty_row[atom]);
    state.support.push_back(atom);

    // Weight of the new orthonormal direction: q_k^T y = f . (A_k^T y).
    const double weight = dot(f, state.aty);
    state.weights.push_back(weight);
    axpy(-weight, row, state.projections);
    state.residual_sq = std::max(0.0, state.residual_sq - weight * weight);
    return {atom, true};
}

/// x_support = F F^T (A_k^T y), using only triangular matrix-vector products.
inline std::vector<double> reconstruct_coefficients(const InverseCholState& inv,
                                                    std::span<const double> aty) {
    const std::size_t k = inv.order();
    if (aty.size() != k)
        throw InputError("A_k^T y length does not match the inverse factor order");
    std::vector<double> w(k);
    for (std::size_t j = 0; j < k; ++j)
        w[j] = dot(inv.factor.column(j), aty.first(j + 1));
    std::vector<double> x(k, 0.0);
    for (std::size_t j = 0; j < k; ++j)
        axpy(w[j], inv.factor.column(j), std::span<double>(x).first(j + 1));
    return x;
}

/// ||y - A_S x|| formed explicitly.
inline double explicit_residual_norm(const DenseMatrix& dict, std::span<const double> y,
                                     std::span<const std::size_t> support,
                                     std::span<const double> x) {
    std::vector<double> r(y.begin(), y.end());
    for (std::size_t i = 0; i < r.size(); ++i) {
        double s = r[i];
        for (std::size_t j = 0; j < support.size(); ++j)
            s -= dict(i, support[j]) * x[j];
        r[i] = s;
    }
    return norm2(r);
}

namespace detail {

// The tracked ||r||^2 loses relative accuracy once it is small compared to
// ||y||^2, so decisions made in that regime (or close to the tolerance)
// are confirmed against the explicit residual.
inline constexpr double kTrackedNormTrust = 1e-6;

inline double v0_residual_for_decision(ProjectionState& state, const InverseCholState& inv,
                                       const DenseMatrix& dict, std::span<const double> y,
                                       const StopCriteria& criteria) {
    const double tracked = std::sqrt(state.residual_sq);
    const double band = kTrackedNormTrust * state.y_norm;
    const bool small = state.residual_sq <= kTrackedNormTrust * state.y_norm * state.y_norm;
    const bool near_tol = criteria.tolerance && std::fabs(tracked - *criteria.tolerance) <= band;
    if (state.k() == 0 || !(small || near_tol))
        return tracked;
    const std::vector<double> x = reconstruct_coefficients(inv, state.aty);
    const double exact = explicit_residual_norm(dict, y, state.support, x);
    state.residual_sq = exact * exact;
    return exact;
}

} // namespace detail

/// Batched v0. Elements that stop have their result captured immediately;
/// their data stays in place (no compaction) and is no longer updated.
inline std::vector<RecoveryResult> run_v0(const SharedDictionary& shared, const MeasurementBatch& batch,
                                          const SolverOptions& opts,
                                          const IterationObserver& observer = {}) {
    const DenseMatrix& dict = shared.matrix();
    validate_problem(dict, batch, opts);

    std::vector<ProjectionState> states;
    std::vector<InverseCholState> inverses;
    const V0Setup setup = init_v0(shared, batch, opts, states, inverses);
    const std::size_t batch_size = batch.size();

    std::vector<StopCriteria> criteria(batch_size);
    for (std::size_t b = 0; b < batch_size; ++b)
        criteria[b] = StopCriteria{opts.sparsity, batch.tolerance_for(b, opts), states[b].y_norm};

    ResultCapture results(batch_size);
    std::vector<RecoveryResult> pending(batch_size);
    std::vector<char> done(batch_size, 0);
    std::vector<char> stepped(batch_size, 0);
    std::vector<std::exception_ptr> errors(batch_size);

    while (results.pending() > 0) {
        std::fill(stepped.begin(), stepped.end(), 0);
#pragma omp parallel for schedule(dynamic)
        for (long long bb = 0; bb < static_cast<long long>(batch_size); ++bb) {
            const auto b = static_cast<std::size_t>(bb);
            if (done[b])
                continue;
            try {
                auto& st = states[b];
                auto& inv = inverses[b];
                const auto y = batch.element(b);
                const double r = detail::v0_residual_for_decision(st, inv, dict, y, criteria[b]);
                StopDecision d = check_stop(r, st.k(), criteria[b]);
                StopFlag flag = to_flag(d);
                if (d == StopDecision::continue_iterating) {
                    const V0Step step = v0_iterate(st, inv, *setup.gram, setup.aty.line(b));
                    if (step.accepted) {
                        stepped[b] = 1;
                        continue;
                    }
                    flag = StopFlag::degenerate;
                }
                const std::vector<double> x = reconstruct_coefficients(inv, st.aty);
                pending[b] = make_result(dict.cols(), st.support, x,
                                         explicit_residual_norm(dict, y, st.support, x), flag,
                                         shared.record());
                done[b] = 1;
            } catch (...) {
                errors[b] = std::current_exception();
                done[b] = 1;
            }
        }
        for (std::size_t b = 0; b < batch_size; ++b) {
            if (errors[b])
                std::rethrow_exception(errors[b]);
            if (done[b] && !results.captured(b))
                results.capture(b, std::move(pending[b]));
        }
        if (observer)
            for (std::size_t b = 0; b < batch_size; ++b)
                if (stepped[b])
                    observer({b, states[b].k(), states[b].support.back(),
                              std::sqrt(states[b].residual_sq)});
    }
    return std::move(results).release();
}

inline std::vector<RecoveryResult> run_v0(const DenseMatrix& dict, const MeasurementBatch& batch,
                                          const SolverOptions& opts,
                                          const IterationObserver& observer = {}) {
    const SharedDictionary shared = share_dictionary(dict, opts.normalize, true);
    return run_v0(shared, batch, opts, observer);
}

} // namespace batchomp
