#pragma once

#include <batchomp/errors.hpp>

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace batchomp {

/// Which index runs contiguously in memory.
enum class Layout { row_major, col_major };

inline Layout flipped(Layout l) noexcept {
    return l == Layout::row_major ? Layout::col_major : Layout::row_major;
}

/// Non-owning view of a dense matrix. Transposing only swaps metadata.
class MatrixView {
public:
    MatrixView() = default;
    MatrixView(const double* data, std::size_t rows, std::size_t cols, Layout layout)
        : data_(data), rows_(rows), cols_(cols), layout_(layout) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    Layout layout() const noexcept { return layout_; }
    const double* data() const noexcept { return data_; }
    std::size_t size() const noexcept { return rows_ * cols_; }

    double operator()(std::size_t i, std::size_t j) const noexcept {
        return layout_ == Layout::row_major ? data_[i * cols_ + j] : data_[j * rows_ + i];
    }

    MatrixView transposed() const noexcept { return {data_, cols_, rows_, flipped(layout_)}; }

    /// Contiguous line i: a row for row-major, a column for column-major.
    std::span<const double> line(std::size_t i) const noexcept {
        const std::size_t len = layout_ == Layout::row_major ? cols_ : rows_;
        return {data_ + i * len, len};
    }

private:
    const double* data_ = nullptr;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Layout layout_ = Layout::row_major;
};

/// Owning dense matrix of doubles. Element addressing follows `layout()`.
class DenseMatrix {
public:
    DenseMatrix() = default;

    DenseMatrix(std::size_t rows, std::size_t cols, Layout layout = Layout::row_major)
        : rows_(rows), cols_(cols), layout_(layout), data_(rows * cols, 0.0) {}

    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                Layout layout = Layout::row_major)
        : rows_(rows), cols_(cols), layout_(layout), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_)
            throw InputError("matrix data length " + std::to_string(data_.size()) +
                             " does not match " + std::to_string(rows_) + "x" +
                             std::to_string(cols_));
    }

    /// Single precision input is widened at the boundary.
    DenseMatrix(std::size_t rows, std::size_t cols, std::span<const float> data,
                Layout layout = Layout::row_major)
        : DenseMatrix(rows, cols, std::vector<double>(data.begin(), data.end()), layout) {}

    /// Row-major from nested initializer lists; rows must agree in length.
    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        const std::size_t r = rows.size();
        const std::size_t c = r == 0 ? 0 : rows.begin()->size();
        std::vector<double> data;
        data.reserve(r * c);
        for (const auto& row : rows) {
            if (row.size() != c)
                throw InputError("ragged initializer for DenseMatrix");
            data.insert(data.end(), row.begin(), row.end());
        }
        return {r, c, std::move(data)};
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    Layout layout() const noexcept { return layout_; }
    std::size_t size() const noexcept { return data_.size(); }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[offset(i, j)]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[offset(i, j)]; }

    MatrixView view() const noexcept { return {data_.data(), rows_, cols_, layout_}; }
    operator MatrixView() const noexcept { return view(); }

    /// Transpose by relabelling; the data buffer is moved, not rearranged.
    DenseMatrix transposed() && {
        DenseMatrix t;
        t.rows_ = cols_;
        t.cols_ = rows_;
        t.layout_ = flipped(layout_);
        t.data_ = std::move(data_);
        return t;
    }

    std::span<double> line(std::size_t i) noexcept {
        const std::size_t len = layout_ == Layout::row_major ? cols_ : rows_;
        return {data_.data() + i * len, len};
    }
    std::span<const double> line(std::size_t i) const noexcept { return view().line(i); }

    /// Copy with the requested physical layout (same logical matrix).
    DenseMatrix with_layout(Layout target) const {
        if (target == layout_)
            return *this;
        DenseMatrix out(rows_, cols_, target);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j)
                out(i, j) = (*this)(i, j);
        return out;
    }

    friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
            return false;
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t j = 0; j < a.cols_; ++j)
                if (a(i, j) != b(i, j))
                    return false;
        return true;
    }

private:
    std::size_t offset(std::size_t i, std::size_t j) const noexcept {
        return layout_ == Layout::row_major ? i * cols_ + j : j * rows_ + i;
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Layout layout_ = Layout::row_major;
    std::vector<double> data_;
};

// Small vector helpers shared by the solver cores.

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

inline double squared_norm(std::span<const double> a) noexcept { return dot(a, a); }

inline double norm2(std::span<const double> a) noexcept { return std::sqrt(squared_norm(a)); }

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] += alpha * x[i];
}

} // namespace batchomp
