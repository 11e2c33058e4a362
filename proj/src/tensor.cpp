#include "fcc/tensor.hpp"

namespace fcc {

Tensor matvec(const Tensor& W, const Tensor& x) {
    if (W.rank() != 2 || x.rank() != 1 || W.cols() != x.size()) {
        throw contract_error("matvec: shape mismatch " + W.shape_string() + " * " + x.shape_string());
    }
    const std::size_t m = W.rows(), n = W.cols();
    Tensor y = Tensor::zeros(m);
    const float* w = W.data();
    const float* xv = x.data();
    for (std::size_t i = 0; i < m; ++i) {
        float acc = 0.0f;
        const float* row = w + i * n;
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * xv[j];
        y[i] = acc;
    }
    return y;
}

void matvec_transpose_add(const Tensor& W, const Tensor& g, Tensor& dx) {
    if (W.rank() != 2 || g.rank() != 1 || dx.rank() != 1 || W.rows() != g.size() || W.cols() != dx.size()) {
        throw contract_error("matvec_transpose_add: shape mismatch");
    }
    const std::size_t m = W.rows(), n = W.cols();
    const float* w = W.data();
    for (std::size_t i = 0; i < m; ++i) {
        const float gi = g[i];
        const float* row = w + i * n;
        for (std::size_t j = 0; j < n; ++j) dx[j] += gi * row[j];
    }
}

void outer_add(const Tensor& g, const Tensor& x, Tensor& dW) {
    if (g.rank() != 1 || x.rank() != 1 || dW.rank() != 2 || dW.rows() != g.size() || dW.cols() != x.size()) {
        throw contract_error("outer_add: shape mismatch");
    }
    const std::size_t m = g.size(), n = x.size();
    float* w = dW.data();
    for (std::size_t i = 0; i < m; ++i) {
        const float gi = g[i];
        float* row = w + i * n;
        for (std::size_t j = 0; j < n; ++j) row[j] += gi * x[j];
    }
}

void axpy(float alpha, const Tensor& x, Tensor& y) {
    if (!x.same_shape(y)) throw contract_error("axpy: shape mismatch");
    const std::size_t n = x.numel();
    const float* xv = x.data();
    float* yv = y.data();
    for (std::size_t i = 0; i < n; ++i) yv[i] += alpha * xv[i];
}

} // namespace fcc
