#pragma once

#include "engorgio/autodiff/graph.hpp"
#include "engorgio/dims.hpp"

#include <span>

// Differentiable operations. Shapes must match exactly except for the
// row-wise (matrix op vector) and scalar cases spelled out per op; anything
// else throws ShapeError.
namespace engorgio::ad {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);

// a[r x c] op b[c], broadcast over rows.
Var add_row(Var a, Var b);
Var mul_row(Var a, Var b);

Var matmul(Var a, Var b);     // [m x k] * [k x n]
Var matmul_nt(Var a, Var b);  // [m x k] * [n x k]^T

Var softmax_rows(Var x);
Var log_softmax_rows(Var x);
Var layer_norm_rows(Var x, Var gain, Var bias);
Var gelu(Var x);

// Multi-head causal self-attention over a packed [n x 3H] Q|K|V projection.
Var causal_attention(Var qkv, std::size_t heads);

Var gather_rows(Var table, std::span<const Token> rows);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var concat_rows(std::span<const Var> parts);

Var select_column(Var a, std::size_t col);             // -> [rows]
Var pick_rows(Var a, std::span<const Token> columns);  // a[i, columns[i]] -> [rows]

Var sum(Var a);
Var dot(Var a, Var b);

} // namespace engorgio::ad
