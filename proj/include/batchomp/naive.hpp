#pragma once

#include <batchomp/batch_control.hpp>
#include <batchomp/cholesky.hpp>
#include <batchomp/dense.hpp>
#include <batchomp/errors.hpp>
#include <batchomp/kernels.hpp>
#include <batchomp/packed.hpp>
#include <batchomp/types.hpp>

#include <algorithm>
#include <cstddef>
#include <exception>
#include <span>
#include <string>
#include <vector>

namespace batchomp {

/// Per-element state of the naive core: the selected columns A_k (stored
/// column after column), A_k^T y, the packed Gram A_k^T A_k, the current
/// solution and residual.
struct NaiveWorkspace {
    std::size_t m = 0;
    std::vector<double> selected; ///< capacity x m, column j at [j*m, (j+1)*m)
    std::vector<double> aty;
    PackedUpperTriangular gram;
    CholeskyState factor; ///< maintained only by FactorStrategy::update
    std::vector<double> coefficients;
    std::vector<double> residual;
    double residual_norm = 0.0;
    std::vector<std::size_t> support;
    bool degenerate = false;

    NaiveWorkspace() = default;
    NaiveWorkspace(std::span<const double> y, std::size_t capacity)
        : m(y.size()), selected(capacity * y.size()), gram(capacity), factor(capacity),
          residual(y.begin(), y.end()), residual_norm(norm2(y)) {
        aty.reserve(capacity);
        coefficients.reserve(capacity);
        support.reserve(capacity);
    }

    std::size_t k() const noexcept { return support.size(); }
    std::size_t capacity() const noexcept { return gram.capacity(); }

    std::span<const double> column(std::size_t j) const noexcept {
        return {selected.data() + j * m, m};
    }

    bool contains(std::size_t atom) const {
        return std::find(support.begin(), support.end(), atom) != support.end();
    }

    /// Drop the most recent extension (used when it proves degenerate).
    void pop_back() {
        const std::size_t k_new = k() - 1;
        support.pop_back();
        aty.pop_back();
        gram.set_order(k_new);
        if (factor.order() > k_new)
            factor.truncate(k_new);
    }
};

/// Most correlated atom for one residual. The dictionary must be row-major
/// with unit-norm columns.
inline std::size_t select_atom(const DenseMatrix& dict, std::span<const double> residual) {
    const MatrixView r(residual.data(), 1, residual.size(), Layout::row_major);
    const DenseMatrix projections = flatten_batched_product(dict.view().transposed(), r);
    return abs_argmax(projections.line(0));
}

/// Append atom `atom` to the workspace: its column, a^T y, and the new Gram
/// column [A_{k-1}^T a; a^T a]. With a Gram table the column is gathered
/// from it instead of computed.
inline void extend_workspace(NaiveWorkspace& ws, const DenseMatrix& dict, std::span<const double> y,
                             std::size_t atom, const DenseMatrix* gram_table = nullptr) {
    if (ws.contains(atom))
        throw LogicError("atom " + std::to_string(atom) + " is already in the support");
    const std::size_t k = ws.k();
    if (k >= ws.capacity())
        throw LogicError("workspace is full");

    double* col = ws.selected.data() + k * ws.m;
    for (std::size_t i = 0; i < ws.m; ++i)
        col[i] = dict(i, atom);
    const std::span<const double> a(col, ws.m);

    std::vector<double> gram_col(k + 1);
    if (gram_table) {
        for (std::size_t j = 0; j < k; ++j)
            gram_col[j] = (*gram_table)(ws.support[j], atom);
        gram_col[k] = (*gram_table)(atom, atom);
    } else {
        for (std::size_t j = 0; j < k; ++j)
            gram_col[j] = dot(ws.column(j), a);
        gram_col[k] = dot(a, a);
    }

    ws.aty.push_back(dot(a, y));
    ws.gram.append_column(gram_col);
    ws.support.push_back(atom);
}

/// Solve A_k^T A_k x = A_k^T y for the current workspace.
inline std::vector<double> solve_coefficients(NaiveWorkspace& ws, FactorStrategy strategy) {
    const std::size_t k = ws.k();
    if (strategy == FactorStrategy::refactor) {
        const CholeskyState v = cholesky_factor(ws.gram);
        return triangular_solve(v, ws.aty, TriangularMode::both);
    }
    while (ws.factor.order() < k) {
        const std::size_t j = ws.factor.order();
        const auto col = ws.gram.column(j);
        cholesky_append(ws.factor, col.first(j), col[j]);
    }
    return triangular_solve(ws.factor, ws.aty, TriangularMode::both);
}

/// r = y - A_k x
inline std::vector<double> update_residual(const NaiveWorkspace& ws, std::span<const double> y,
                                           std::span<const double> x) {
    std::vector<double> r(y.begin(), y.end());
    for (std::size_t j = 0; j < x.size(); ++j)
        axpy(-x[j], ws.column(j), r);
    return r;
}

namespace detail {

// One naive iteration for one element, given the selected atom.
inline void naive_step(NaiveWorkspace& ws, const DenseMatrix& dict, std::span<const double> y,
                       std::size_t atom, const DenseMatrix* gram_table, FactorStrategy strategy) {
    if (ws.contains(atom)) {
        ws.degenerate = true;
        return;
    }
    extend_workspace(ws, dict, y, atom, gram_table);
    std::vector<double> x;
    try {
        x = solve_coefficients(ws, strategy);
    } catch (const RankDeficiencyError&) {
        ws.pop_back();
        ws.degenerate = true;
        return;
    }
    ws.residual = update_residual(ws, y, x);
    ws.residual_norm = norm2(ws.residual);
    ws.coefficients = std::move(x);
}

struct NaiveSlot {
    NaiveWorkspace ws;
    StopCriteria criteria;
    StopFlag flag = StopFlag::completed;
};

} // namespace detail

/// Batched naive OMP. Finished elements are removed from the active set
/// after every iteration so later iterations only touch live elements.
inline std::vector<RecoveryResult> run_naive(const SharedDictionary& shared,
                                             const MeasurementBatch& batch,
                                             const SolverOptions& opts,
                                             const IterationObserver& observer = {}) {
    const DenseMatrix& dict = shared.matrix();
    validate_problem(dict, batch, opts);
    const DenseMatrix* gram_table =
        opts.precompute_gram && shared.gram ? &*shared.gram : nullptr;
    if (opts.precompute_gram && !gram_table)
        throw InputError("precompute_gram requested but the shared dictionary has no Gram table");

    const std::size_t batch_size = batch.size();
    const std::size_t m = dict.rows();
    const std::size_t n_atoms = dict.cols();
    const MatrixView dict_t = dict.view().transposed();

    ActiveSet active(batch_size);
    std::vector<detail::NaiveSlot> slots;
    slots.reserve(batch_size);
    for (std::size_t b = 0; b < batch_size; ++b) {
        const auto y = batch.element(b);
        slots.push_back({NaiveWorkspace(y, opts.sparsity),
                         StopCriteria{opts.sparsity, batch.tolerance_for(b, opts), norm2(y)}});
    }

    ResultCapture results(batch_size);
    auto sink = [&](std::size_t index, detail::NaiveSlot&& slot) {
        const NaiveWorkspace& ws = slot.ws;
        results.capture(index, make_result(n_atoms, ws.support, ws.coefficients, ws.residual_norm,
                                           slot.flag, shared.record()));
    };

    DenseMatrix residuals;
    std::vector<std::size_t> finished;
    while (true) {
        finished.clear();
        for (std::size_t s = 0; s < slots.size(); ++s) {
            auto& slot = slots[s];
            if (slot.ws.degenerate) {
                slot.flag = StopFlag::degenerate;
                finished.push_back(s);
                continue;
            }
            const StopDecision d = check_stop(slot.ws.residual_norm, slot.ws.k(), slot.criteria);
            if (d != StopDecision::continue_iterating) {
                slot.flag = to_flag(d);
                finished.push_back(s);
            }
        }
        compact_active(active, finished, slots, sink);
        const std::size_t live = slots.size();
        if (live == 0)
            break;

        // Correlate every live residual with every atom in one product.
        residuals = DenseMatrix(live, m);
        for (std::size_t s = 0; s < live; ++s)
            std::copy(slots[s].ws.residual.begin(), slots[s].ws.residual.end(), residuals.line(s).begin());
        const DenseMatrix projections = flatten_batched_product(dict_t, residuals);
        const std::vector<std::size_t> atoms = batched_abs_argmax(projections);

        std::vector<std::exception_ptr> errors(live);
#pragma omp parallel for schedule(dynamic)
        for (long long ss = 0; ss < static_cast<long long>(live); ++ss) {
            const auto s = static_cast<std::size_t>(ss);
            try {
                detail::naive_step(slots[s].ws, dict, batch.element(active.original_index(s)),
                                   atoms[s], gram_table, opts.factor_strategy);
            } catch (...) {
                errors[s] = std::current_exception();
            }
        }
        for (const auto& e : errors)
            if (e)
                std::rethrow_exception(e);

        if (observer)
            for (std::size_t s = 0; s < live; ++s)
                if (!slots[s].ws.degenerate)
                    observer({active.original_index(s), slots[s].ws.k(), atoms[s],
                              slots[s].ws.residual_norm});
    }
    return std::move(results).release();
}

inline std::vector<RecoveryResult> run_naive(const DenseMatrix& dict, const MeasurementBatch& batch,
                                             const SolverOptions& opts,
                                             const IterationObserver& observer = {}) {
    const SharedDictionary shared = share_dictionary(dict, opts.normalize, opts.precompute_gram);
    return run_naive(shared, batch, opts, observer);
}

} // namespace batchomp
