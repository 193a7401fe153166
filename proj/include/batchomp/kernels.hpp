#pragma once

#include <batchomp/dense.hpp>
#include <batchomp/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace batchomp {

/// Index of the largest |value|, lowest index on ties. One pass, no
/// temporary buffer. NaN anywhere is an error.
inline std::size_t abs_argmax(std::span<const double> values) {
    if (values.empty())
        throw InputError("argmax of an empty row");
    std::size_t best = 0;
    double best_abs = -1.0;
    for (std::size_t n = 0; n < values.size(); ++n) {
        const double a = std::fabs(values[n]);
        if (std::isnan(a))
            throw NumericalError("NaN in correlation values at index " + std::to_string(n));
        if (a > best_abs) {
            best_abs = a;
            best = n;
        }
    }
    return best;
}

/// Row-wise abs_argmax over a B x N row-major block.
inline std::vector<std::size_t> batched_abs_argmax(const MatrixView& values) {
    if (values.cols() == 0)
        throw InputError("batched argmax needs at least one column");
    std::vector<std::size_t> out(values.rows());
    if (values.layout() == Layout::row_major) {
        for (std::size_t b = 0; b < values.rows(); ++b)
            out[b] = abs_argmax(values.line(b));
    } else {
        std::vector<double> row(values.cols());
        for (std::size_t b = 0; b < values.rows(); ++b) {
            for (std::size_t n = 0; n < values.cols(); ++n)
                row[n] = values(b, n);
            out[b] = abs_argmax(row);
        }
    }
    return out;
}

namespace detail {

// R output rows updated together so each loaded column chunk of matT is
// reused R times. Every output element accumulates over m in order 0..M-1.
template <std::size_t R>
inline void axpy_panel(const double* mat_t, std::size_t n_total, std::size_t m_total,
                       const double* const* vecs, double* const* out, std::size_t n0,
                       std::size_t nb) {
    for (std::size_t r = 0; r < R; ++r)
        std::fill(out[r] + n0, out[r] + n0 + nb, 0.0);
    for (std::size_t m = 0; m < m_total; ++m) {
        const double* __restrict a = mat_t + m * n_total + n0;
        if constexpr (R == 4) {
            const double v0 = vecs[0][m], v1 = vecs[1][m], v2 = vecs[2][m], v3 = vecs[3][m];
            double* __restrict c0 = out[0] + n0;
            double* __restrict c1 = out[1] + n0;
            double* __restrict c2 = out[2] + n0;
            double* __restrict c3 = out[3] + n0;
            for (std::size_t n = 0; n < nb; ++n) {
                const double x = a[n];
                c0[n] += v0 * x;
                c1[n] += v1 * x;
                c2[n] += v2 * x;
                c3[n] += v3 * x;
            }
        } else {
            for (std::size_t r = 0; r < R; ++r) {
                const double v = vecs[r][m];
                double* __restrict c = out[r] + n0;
                for (std::size_t n = 0; n < nb; ++n)
                    c[n] += v * a[n];
            }
        }
    }
}

inline constexpr std::size_t kPanelWidth = 512;

} // namespace detail

/// Computes row b of the result as matT * v_b for every batch vector, as one
/// matrix-matrix product: [matT v_1 ... matT v_B] = matT [v_1 ... v_B].
///
/// `mat_t` is N x M. `vectors` is B x M with each vector a contiguous row,
/// i.e. the M x B matrix of stacked vectors viewed through its transpose.
/// The result is B x N, row-major. When `mat_t` is column-contiguous (the
/// transpose of a row-major dictionary, obtained without copying) the
/// product runs as cache-blocked axpy panels; otherwise as dot products.
inline DenseMatrix flatten_batched_product(const MatrixView& mat_t, const MatrixView& vectors) {
    const std::size_t n_total = mat_t.rows();
    const std::size_t m_total = mat_t.cols();
    const std::size_t batch = vectors.rows();
    if (vectors.cols() != m_total)
        throw InputError("batched product: matrix has " + std::to_string(m_total) +
                         " columns but vectors have length " + std::to_string(vectors.cols()));

    DenseMatrix packed_vectors;
    MatrixView vecs = vectors;
    if (vectors.layout() != Layout::row_major && batch > 1 && m_total > 1) {
        packed_vectors = DenseMatrix(batch, m_total);
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t m = 0; m < m_total; ++m)
                packed_vectors(b, m) = vectors(b, m);
        vecs = packed_vectors.view();
    }
    auto vec_ptr = [&](std::size_t b) {
        return vecs.layout() == Layout::row_major ? vecs.data() + b * m_total
                                                  : vecs.data() + b;  // degenerate 1-wide case
    };

    DenseMatrix result(batch, n_total);
    if (n_total == 0 || batch == 0)
        return result;

    if (mat_t.layout() == Layout::col_major || m_total == 1) {
        const std::size_t panels = (n_total + detail::kPanelWidth - 1) / detail::kPanelWidth;
        const std::size_t groups = (batch + 3) / 4;
        const long long work = static_cast<long long>(groups * panels);
#pragma omp parallel for schedule(static)
        for (long long w = 0; w < work; ++w) {
            const std::size_t g = static_cast<std::size_t>(w) / panels;
            const std::size_t p = static_cast<std::size_t>(w) % panels;
            const std::size_t b0 = g * 4;
            const std::size_t rows = std::min<std::size_t>(4, batch - b0);
            const std::size_t n0 = p * detail::kPanelWidth;
            const std::size_t nb = std::min(detail::kPanelWidth, n_total - n0);
            const double* v[4];
            double* c[4];
            for (std::size_t r = 0; r < rows; ++r) {
                v[r] = vec_ptr(b0 + r);
                c[r] = result.data() + (b0 + r) * n_total;
            }
            switch (rows) {
            case 4: detail::axpy_panel<4>(mat_t.data(), n_total, m_total, v, c, n0, nb); break;
            case 3: detail::axpy_panel<3>(mat_t.data(), n_total, m_total, v, c, n0, nb); break;
            case 2: detail::axpy_panel<2>(mat_t.data(), n_total, m_total, v, c, n0, nb); break;
            default: detail::axpy_panel<1>(mat_t.data(), n_total, m_total, v, c, n0, nb); break;
            }
        }
    } else {
        const long long total = static_cast<long long>(batch);
#pragma omp parallel for schedule(static)
        for (long long bb = 0; bb < total; ++bb) {
            const auto b = static_cast<std::size_t>(bb);
            const std::span<const double> v(vec_ptr(b), m_total);
            double* out = result.data() + b * n_total;
            for (std::size_t n = 0; n < n_total; ++n)
                out[n] = dot(mat_t.line(n), v);
        }
    }
    return result;
}

/// A^T A for an M x N dictionary, N x N row-major and exactly symmetric.
/// Only panels touching the upper triangle are computed; the rest is
/// mirrored.
inline DenseMatrix gram_matrix(const DenseMatrix& dict) {
    const std::size_t m_total = dict.rows();
    const std::size_t n_total = dict.cols();
    const DenseMatrix row_major = dict.with_layout(Layout::row_major);
    const DenseMatrix columns = dict.with_layout(Layout::col_major); // column n contiguous
    DenseMatrix gram(n_total, n_total);
    if (n_total == 0)
        return gram;

    const std::size_t panels = (n_total + detail::kPanelWidth - 1) / detail::kPanelWidth;
    const std::size_t groups = (n_total + 3) / 4;
    const long long work = static_cast<long long>(groups * panels);
#pragma omp parallel for schedule(dynamic)
    for (long long w = 0; w < work; ++w) {
        const std::size_t g = static_cast<std::size_t>(w) / panels;
        const std::size_t p = static_cast<std::size_t>(w) % panels;
        const std::size_t b0 = g * 4;
        const std::size_t n0 = p * detail::kPanelWidth;
        const std::size_t nb = std::min(detail::kPanelWidth, n_total - n0);
        if (n0 + nb <= b0)
            continue; // strictly below the diagonal
        const std::size_t rows = std::min<std::size_t>(4, n_total - b0);
        const double* v[4];
        double* c[4];
        for (std::size_t r = 0; r < rows; ++r) {
            v[r] = columns.data() + (b0 + r) * m_total;
            c[r] = gram.data() + (b0 + r) * n_total;
        }
        switch (rows) {
        case 4: detail::axpy_panel<4>(row_major.data(), n_total, m_total, v, c, n0, nb); break;
        case 3: detail::axpy_panel<3>(row_major.data(), n_total, m_total, v, c, n0, nb); break;
        case 2: detail::axpy_panel<2>(row_major.data(), n_total, m_total, v, c, n0, nb); break;
        default: detail::axpy_panel<1>(row_major.data(), n_total, m_total, v, c, n0, nb); break;
        }
    }
    for (std::size_t i = 0; i < n_total; ++i)
        for (std::size_t j = 0; j < i; ++j)
            gram(i, j) = gram(j, i);
    return gram;
}

/// Original column norms, used to map coefficients solved against the
/// normalized dictionary back to the caller's scaling.
struct NormalizationRecord {
    std::vector<double> column_norms;
    bool was_normalized = false;

    /// x_original[n] = x_normalized[n] / norm[n].
    void rescale(std::span<double> coefficients) const {
        if (!was_normalized)
            return;
        for (std::size_t n = 0; n < coefficients.size(); ++n)
            coefficients[n] /= column_norms[n];
    }
};

inline std::vector<double> column_norms(const DenseMatrix& dict) {
    std::vector<double> norms(dict.cols(), 0.0);
    for (std::size_t i = 0; i < dict.rows(); ++i)
        for (std::size_t j = 0; j < dict.cols(); ++j)
            norms[j] += dict(i, j) * dict(i, j);
    for (double& v : norms)
        v = std::sqrt(v);
    return norms;
}

/// Scale each column to unit Euclidean norm. Layout is preserved.
inline std::pair<DenseMatrix, NormalizationRecord> normalize_columns(const DenseMatrix& dict) {
    NormalizationRecord record{column_norms(dict), true};
    for (std::size_t j = 0; j < dict.cols(); ++j) {
        const double nrm = record.column_norms[j];
        if (!(nrm > 0.0) || !std::isfinite(nrm))
            throw InputError("dictionary column " + std::to_string(j) +
                             " has zero or non-finite norm");
    }
    DenseMatrix out = dict;
    for (std::size_t i = 0; i < dict.rows(); ++i)
        for (std::size_t j = 0; j < dict.cols(); ++j)
            out(i, j) = dict(i, j) / record.column_norms[j];
    return {std::move(out), std::move(record)};
}

} // namespace batchomp
