#pragma once

#include <batchomp/dense.hpp>
#include <batchomp/errors.hpp>
#include <batchomp/kernels.hpp>
#include <batchomp/types.hpp>

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace batchomp {

/// Residual norms at or below this fraction of ||y|| count as an exact fit,
/// even without a user tolerance.
inline constexpr double kImplicitStopRatio = 1e-13;

enum class StopDecision { continue_iterating, stop_tol, stop_sparsity };

struct StopCriteria {
    std::size_t sparsity = 1;
    std::optional<double> tolerance;
    double y_norm = 0.0;
};

/// Tolerance is checked before sparsity.
inline StopDecision check_stop(double residual_norm, std::size_t k, const StopCriteria& c) {
    if (c.tolerance && residual_norm <= *c.tolerance)
        return StopDecision::stop_tol;
    if (residual_norm <= kImplicitStopRatio * c.y_norm)
        return StopDecision::stop_tol;
    if (k >= c.sparsity)
        return StopDecision::stop_sparsity;
    return StopDecision::continue_iterating;
}

inline StopFlag to_flag(StopDecision d) noexcept {
    return d == StopDecision::stop_tol ? StopFlag::tol_reached : StopFlag::completed;
}

/// Live batch slots and the input position each one came from.
class ActiveSet {
public:
    explicit ActiveSet(std::size_t batch) : original_index_(batch) {
        for (std::size_t i = 0; i < batch; ++i)
            original_index_[i] = i;
    }

    std::size_t live_count() const noexcept { return original_index_.size(); }
    std::size_t original_index(std::size_t slot) const { return original_index_.at(slot); }
    std::span<const std::size_t> original_indices() const noexcept { return original_index_; }

    template <class Payload, class Sink>
    friend void compact_active(ActiveSet& set, std::span<const std::size_t> finished,
                               std::vector<Payload>& payloads, Sink&& sink);

private:
    std::vector<std::size_t> original_index_;
};

/// Hand each finished slot's payload to `sink(original_index, Payload&&)`,
/// then repack the survivors contiguously, keeping their relative order.
/// `finished` must hold distinct live slots.
template <class Payload, class Sink>
void compact_active(ActiveSet& set, std::span<const std::size_t> finished,
                    std::vector<Payload>& payloads, Sink&& sink) {
    if (finished.empty())
        return;
    const std::size_t live = set.live_count();
    if (payloads.size() != live)
        throw LogicError("payload count does not match live slots");
    std::vector<char> done(live, 0);
    for (std::size_t slot : finished) {
        if (slot >= live || done[slot])
            throw LogicError("finished slot " + std::to_string(slot) + " is not a distinct live slot");
        done[slot] = 1;
    }
    std::size_t write = 0;
    for (std::size_t slot = 0; slot < live; ++slot) {
        if (done[slot]) {
            sink(set.original_index_[slot], std::move(payloads[slot]));
            continue;
        }
        if (write != slot) {
            payloads[write] = std::move(payloads[slot]);
            set.original_index_[write] = set.original_index_[slot];
        }
        ++write;
    }
    payloads.resize(write);
    set.original_index_.resize(write);
}

/// Write-once result table indexed by original batch position.
class ResultCapture {
public:
    explicit ResultCapture(std::size_t batch) : results_(batch) {}

    void capture(std::size_t index, RecoveryResult result) {
        if (index >= results_.size())
            throw LogicError("capture index " + std::to_string(index) + " out of range");
        if (results_[index])
            throw LogicError("result for batch element " + std::to_string(index) +
                             " captured twice");
        results_[index] = std::move(result);
    }

    bool captured(std::size_t index) const { return results_.at(index).has_value(); }
    const RecoveryResult& at(std::size_t index) const { return results_.at(index).value(); }

    std::size_t pending() const noexcept {
        std::size_t n = 0;
        for (const auto& r : results_)
            n += r ? 0 : 1;
        return n;
    }

    /// All B results in input order; every element must have been captured.
    std::vector<RecoveryResult> release() && {
        std::vector<RecoveryResult> out;
        out.reserve(results_.size());
        for (std::size_t i = 0; i < results_.size(); ++i) {
            if (!results_[i])
                throw LogicError("batch element " + std::to_string(i) + " produced no result");
            out.push_back(std::move(*results_[i]));
        }
        return out;
    }

private:
    std::vector<std::optional<RecoveryResult>> results_;
};

/// Dictionary as seen by the solver cores: row-major, unit-norm columns.
struct PreparedDictionary {
    DenseMatrix matrix;
    NormalizationRecord record;
};

inline constexpr double kUnitNormTolerance = 1e-8;

inline PreparedDictionary prepare_dictionary(const DenseMatrix& dict, bool normalize) {
    if (normalize) {
        auto [m, rec] = normalize_columns(dict.with_layout(Layout::row_major));
        return {std::move(m), std::move(rec)};
    }
    NormalizationRecord rec{column_norms(dict), false};
    for (std::size_t j = 0; j < rec.column_norms.size(); ++j)
        if (std::fabs(rec.column_norms[j] - 1.0) > kUnitNormTolerance)
            throw InputError("dictionary column " + std::to_string(j) + " has norm " +
                             std::to_string(rec.column_norms[j]) +
                             "; normalization is disabled so columns must be unit-norm");
    return {dict.with_layout(Layout::row_major), std::move(rec)};
}

/// Read-only dictionary state shared by every element of a batch and
/// reusable across batches: the prepared dictionary and, optionally, A^T A.
struct SharedDictionary {
    PreparedDictionary prepared;
    std::optional<DenseMatrix> gram;

    std::size_t rows() const noexcept { return prepared.matrix.rows(); }
    std::size_t atoms() const noexcept { return prepared.matrix.cols(); }
    const DenseMatrix& matrix() const noexcept { return prepared.matrix; }
    const NormalizationRecord& record() const noexcept { return prepared.record; }

    void ensure_gram() {
        if (!gram)
            gram = gram_matrix(prepared.matrix);
    }
};

inline SharedDictionary share_dictionary(const DenseMatrix& dict, bool normalize, bool with_gram) {
    SharedDictionary shared{prepare_dictionary(dict, normalize), std::nullopt};
    if (with_gram)
        shared.ensure_gram();
    return shared;
}

/// Per-iteration trace hook; invoked serially after each batched iteration.
struct IterationEvent {
    std::size_t element = 0; ///< original batch index
    std::size_t k = 0;       ///< iterations completed
    std::size_t atom = 0;    ///< atom selected in this iteration
    double residual_norm = 0.0;
};

/// Scatter support coefficients into a length-N vector and undo normalization.
inline RecoveryResult make_result(std::size_t n_atoms, std::span<const std::size_t> support,
                                  std::span<const double> support_coefficients, double residual_norm,
                                  StopFlag flag, const NormalizationRecord& record) {
    RecoveryResult r;
    r.coefficients.assign(n_atoms, 0.0);
    for (std::size_t j = 0; j < support.size(); ++j)
        r.coefficients[support[j]] = support_coefficients[j];
    record.rescale(r.coefficients);
    r.support.assign(support.begin(), support.end());
    r.residual_norm = residual_norm;
    r.iterations = support.size();
    r.flag = flag;
    return r;
}

using IterationObserver = std::function<void(const IterationEvent&)>;

} // namespace batchomp
