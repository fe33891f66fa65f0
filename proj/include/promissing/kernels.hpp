#pragma once

// Data-parallel inner loops. Each kernel has a plain serial reference
// (`*_serial`) and an OpenMP version; tests pin the two against each other
// and bench/ times them. Both produce bit-identical results: the OpenMP
// versions only split work along an axis whose elements are computed
// independently, never inside a reduction.

#include <cstddef>
#include <span>

#include "promissing/matrix.hpp"

namespace promissing::kernels {

// Weights are s x p (one row per neuron).

// pre(i,k) = sum_{j observed} x(i,j) W(k,j) + b(k) * q_i/p + wc(k) * r_i/p.
// `wc` may be empty (PROMISSING).
void nan_dense_preactivation_serial(const MaskedMatrix& x, const Matrix& w,
                                    std::span<const double> b, std::span<const double> wc,
                                    Matrix& pre);
void nan_dense_preactivation(const MaskedMatrix& x, const Matrix& w, std::span<const double> b,
                             std::span<const double> wc, Matrix& pre);

// pre(i,k) = sum_j x(i,j) W(k,j) + b(k).
void dense_preactivation_serial(const Matrix& x, const Matrix& w, std::span<const double> b,
                                Matrix& pre);
void dense_preactivation(const Matrix& x, const Matrix& w, std::span<const double> b,
                         Matrix& pre);

// Parameter gradients of a nan_dense layer from dL/dpre (n x s):
//   dW(k,j) = sum_i dpre(i,k) x(i,j) [j observed in row i]
//   db(k)   = sum_i dpre(i,k) q_i/p
//   dwc(k)  = sum_i dpre(i,k) r_i/p   (skipped when dwc is empty)
void nan_dense_param_grad_serial(const MaskedMatrix& x, const Matrix& dpre, Matrix& dw,
                                 std::span<double> db, std::span<double> dwc);
void nan_dense_param_grad(const MaskedMatrix& x, const Matrix& dpre, Matrix& dw,
                          std::span<double> db, std::span<double> dwc);

void dense_param_grad_serial(const Matrix& x, const Matrix& dpre, Matrix& dw, std::span<double> db);
void dense_param_grad(const Matrix& x, const Matrix& dpre, Matrix& dw, std::span<double> db);

// dx(i,j) = sum_k dpre(i,k) W(k,j); with a mask, missing cells get 0.
void input_grad_serial(const Matrix& dpre, const Matrix& w, Matrix& dx);
void input_grad(const Matrix& dpre, const Matrix& w, Matrix& dx);
void masked_input_grad(const MaskedMatrix& x, const Matrix& dpre, const Matrix& w, Matrix& dx);

// Squared "nan-Euclidean" distance: p / c * sum over the c co-observed
// columns of (a - b)^2. Returns +inf when c = 0.
double nan_euclidean_sq(std::span<const double> a, std::span<const std::uint8_t> ma,
                        std::span<const double> b, std::span<const std::uint8_t> mb);

// Fills every missing cell of `x` with the mean of column j over the k
// nearest `donors` rows that observe j (ties by lower donor index). Throws
// ImputeError when a missing cell has no usable donor.
void knn_fill_serial(const MaskedMatrix& donors, const MaskedMatrix& x, std::size_t k,
                     Matrix& out);
void knn_fill(const MaskedMatrix& donors, const MaskedMatrix& x, std::size_t k, Matrix& out);

}  // namespace promissing::kernels
