#pragma once

#include <cstddef>
#include <span>

// Raw row-major kernels shared by the differentiable ops and the KV-cache
// decoder. Every kernel accumulates in a fixed order that depends only on
// the row being computed, so row i of a batched call is bit-identical to a
// single-row call on the same inputs.
namespace engorgio::ad::kernels {

// c[m x n] += a[m x k] * b[k x n]
void matmul_acc(std::span<const double> a, std::span<const double> b, std::span<double> c,
                std::size_t m, std::size_t k, std::size_t n);

// c[m x n] += a[m x k] * b[n x k]^T
void matmul_nt_acc(std::span<const double> a, std::span<const double> b, std::span<double> c,
                   std::size_t m, std::size_t k, std::size_t n);

// c[m x n] += a[k x m]^T * b[k x n]
void matmul_tn_acc(std::span<const double> a, std::span<const double> b, std::span<double> c,
                   std::size_t k, std::size_t m, std::size_t n);

// Max-subtracted softmax of one row.
void softmax_row(std::span<const double> in, std::span<double> out);

// Log-softmax of one row via log-sum-exp.
void log_softmax_row(std::span<const double> in, std::span<double> out);

inline constexpr double kLayerNormEps = 1e-5;

// y = (x - mean) / sqrt(var + eps) * gain + bias. Writes the normalized
// (pre-affine) row to xhat and returns 1/sqrt(var + eps).
double layer_norm_row(std::span<const double> x, std::span<const double> gain, std::span<const double> bias,
                      std::span<double> xhat, std::span<double> y);

// tanh-approximated GELU and its derivative.
double gelu(double x);
double gelu_grad(double x);

// Causal self-attention for query row `pos` of one head. q/k/v point at the
// packed [n x 3H] projection; the head occupies columns [h*d, (h+1)*d) of each
// of the Q, K and V blocks. probs receives the pos+1 attention weights and out
// the d-dimensional result (overwritten).
void attend_row(std::span<const double> qkv, std::size_t hidden, std::size_t head, std::size_t head_dim,
                std::size_t pos, std::span<double> probs, std::span<double> out);

} // namespace engorgio::ad::kernels
