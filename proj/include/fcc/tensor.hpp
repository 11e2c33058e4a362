#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fcc/errors.hpp"

namespace fcc {

// Dense row-major float32 array of rank 1 or 2. This is the only numeric
// container the library trades in; collections of samples are
// std::vector<Tensor>. Entries are expected finite at public boundaries;
// callers that need the check use all_finite().
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::size_t n) { return Tensor(n, 1, 1, std::vector<float>(n, 0.0f)); }

    static Tensor zeros(std::size_t rows, std::size_t cols) {
        return Tensor(rows, cols, 2, std::vector<float>(rows * cols, 0.0f));
    }

    static Tensor vec(std::vector<float> v) {
        const std::size_t n = v.size();
        return Tensor(n, 1, 1, std::move(v));
    }

    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<float> v) {
        if (v.size() != rows * cols) {
            throw contract_error("Tensor::matrix: data length " + std::to_string(v.size()) +
                                 " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
        }
        return Tensor(rows, cols, 2, std::move(v));
    }

    int rank() const noexcept { return rank_; }
    std::size_t numel() const noexcept { return data_.size(); }
    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    // Length of a rank-1 tensor.
    std::size_t size() const {
        if (rank_ != 1) throw contract_error("Tensor::size: rank-1 only");
        return rows_;
    }

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    float& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    float at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    float* data() noexcept { return data_.data(); }
    const float* data() const noexcept { return data_.data(); }

    bool same_shape(const Tensor& o) const noexcept {
        return rank_ == o.rank_ && rows_ == o.rows_ && cols_ == o.cols_;
    }

    bool all_finite() const noexcept {
        for (float v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    std::string shape_string() const {
        if (rank_ == 0) return "()";
        if (rank_ == 1) return "(" + std::to_string(rows_) + ")";
        return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
    }

private:
    Tensor(std::size_t r, std::size_t c, int rank, std::vector<float> v)
        : rows_(r), cols_(c), rank_(rank), data_(std::move(v)) {}

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    int rank_ = 0;
    std::vector<float> data_;
};

// Deterministic dense kernels shared by the tape and everything downstream.
// Accumulation order is fixed (row-major, ascending index) so repeated runs
// and the serial/parallel execution paths agree bit-for-bit.

// y = W x, W rank-2 (m x n), x rank-1 (n).
Tensor matvec(const Tensor& W, const Tensor& x);

// dx += W^T g, accumulated row by row of W.
void matvec_transpose_add(const Tensor& W, const Tensor& g, Tensor& dx);

// dW += g x^T.
void outer_add(const Tensor& g, const Tensor& x, Tensor& dW);

// y += alpha * x (elementwise, shapes must match).
void axpy(float alpha, const Tensor& x, Tensor& y);

} // namespace fcc
