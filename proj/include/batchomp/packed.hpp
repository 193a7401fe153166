#pragma once

#include <batchomp/dense.hpp>
#include <batchomp/errors.hpp>

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace batchomp {

/// Offset of upper-triangle element (i, j), i <= j, in column-grouped packed
/// storage. Column j starts at j(j+1)/2, so the leading k x k triangle is the
/// first k(k+1)/2 scalars.
constexpr std::size_t pack_index(std::size_t i, std::size_t j) {
    if (i > j)
        throw AddressingError("packed index (" + std::to_string(i) + "," + std::to_string(j) +
                              ") lies below the diagonal");
    return j * (j + 1) / 2 + i;
}

constexpr std::size_t packed_size(std::size_t order) noexcept { return order * (order + 1) / 2; }

/// Upper triangle of a symmetric (or triangular) matrix of growing order.
///
/// Storage for `capacity` is allocated once; `order` tracks the active
/// leading block, which is always a contiguous prefix of the buffer.
class PackedUpperTriangular {
public:
    PackedUpperTriangular() = default;
    explicit PackedUpperTriangular(std::size_t capacity)
        : capacity_(capacity), data_(packed_size(capacity), 0.0) {}

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t order() const noexcept { return order_; }

    double operator()(std::size_t i, std::size_t j) const { return data_[pack_index(i, j)]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[pack_index(i, j)]; }

    /// Bounds-checked against the active order.
    double at(std::size_t i, std::size_t j) const {
        if (j >= order_)
            throw AddressingError("packed column " + std::to_string(j) + " outside order " +
                                  std::to_string(order_));
        return data_[pack_index(i, j)];
    }

    /// Column j of the upper triangle: entries (0..j, j).
    std::span<const double> column(std::size_t j) const noexcept {
        return {data_.data() + packed_size(j), j + 1};
    }
    std::span<double> column(std::size_t j) noexcept { return {data_.data() + packed_size(j), j + 1}; }

    /// The active k(k+1)/2 prefix.
    std::span<const double> active() const noexcept { return {data_.data(), packed_size(order_)}; }

    /// Append column `col` (length order()+1) and grow the order by one.
    void append_column(std::span<const double> col) {
        if (order_ >= capacity_)
            throw AddressingError("packed triangle is full at order " + std::to_string(capacity_));
        if (col.size() != order_ + 1)
            throw InputError("appended column has length " + std::to_string(col.size()) +
                             ", expected " + std::to_string(order_ + 1));
        std::copy(col.begin(), col.end(), data_.begin() + packed_size(order_));
        ++order_;
    }

    /// Shrink (or regrow, exposing stale data) the active order.
    void set_order(std::size_t k) {
        if (k > capacity_)
            throw AddressingError("order " + std::to_string(k) + " exceeds capacity " +
                                  std::to_string(capacity_));
        order_ = k;
    }

    /// Pack the upper triangle of a dense square matrix.
    static PackedUpperTriangular from_dense(const MatrixView& m, std::size_t capacity = 0) {
        if (m.rows() != m.cols())
            throw InputError("packing requires a square matrix");
        const std::size_t k = m.rows();
        PackedUpperTriangular p(capacity == 0 ? k : capacity);
        if (p.capacity_ < k)
            throw AddressingError("capacity smaller than matrix order");
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t i = 0; i <= j; ++i)
                p.data_[pack_index(i, j)] = m(i, j);
        p.order_ = k;
        return p;
    }

    /// Dense symmetric matrix whose upper triangle is the active block.
    DenseMatrix to_dense_symmetric() const {
        DenseMatrix out(order_, order_);
        for (std::size_t j = 0; j < order_; ++j)
            for (std::size_t i = 0; i <= j; ++i)
                out(i, j) = out(j, i) = data_[pack_index(i, j)];
        return out;
    }

    /// Dense upper-triangular matrix (zeros below the diagonal).
    DenseMatrix to_dense_upper() const {
        DenseMatrix out(order_, order_);
        for (std::size_t j = 0; j < order_; ++j)
            for (std::size_t i = 0; i <= j; ++i)
                out(i, j) = data_[pack_index(i, j)];
        return out;
    }

private:
    std::size_t capacity_ = 0;
    std::size_t order_ = 0;
    std::vector<double> data_;
};

} // namespace batchomp
