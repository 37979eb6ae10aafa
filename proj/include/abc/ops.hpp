#pragma once

#include <vector>

#include "abc/graph.hpp"
#include "abc/tensor.hpp"

namespace abc {

enum class ActivationKind { Sigmoid, Tanh, ScaledTanh };

// Scaled hyperbolic tangent used by the fusion layer: 1.7159 * tanh(2x/3).
inline constexpr Scalar kScaledTanhGain = 1.7159;
inline constexpr Scalar kScaledTanhSlope = 2.0 / 3.0;

// Probability floor applied inside pick_neg_log.
inline constexpr Scalar kProbFloor = 1e-12;

// All ops validate shapes (DimensionError), compute the output, verify it is
// finite (NumericError), and record a local-gradient closure on the graph
// whenever any input requires a gradient.

// W[o x i] * x[i] + b[o].
Tensor affine(Graph& g, const Tensor& W, const Tensor& x, const Tensor& b);

// W[o x i] * x[i].
Tensor matvec(Graph& g, const Tensor& W, const Tensor& x);

// Elementwise a + b, a * b (same shape), and c * x.
Tensor add(Graph& g, const Tensor& a, const Tensor& b);
Tensor mul(Graph& g, const Tensor& a, const Tensor& b);
Tensor scale(Graph& g, const Tensor& x, Scalar c);

Tensor activation(Graph& g, ActivationKind kind, const Tensor& x);
inline Tensor sigmoid(Graph& g, const Tensor& x) {
  return activation(g, ActivationKind::Sigmoid, x);
}
inline Tensor tanh_op(Graph& g, const Tensor& x) {
  return activation(g, ActivationKind::Tanh, x);
}
inline Tensor scaled_tanh(Graph& g, const Tensor& x) {
  return activation(g, ActivationKind::ScaledTanh, x);
}

// Zero-padded same-size correlation: input [C x H x W], kernel
// [K x C x kh x kw] with odd kh, kw, output [K x H x W].
Tensor conv2d_same(Graph& g, const Tensor& input, const Tensor& kernel);

// Softmax over all H*W positions of a rank-2 map, max-subtracted.
Tensor softmax_spatial(Graph& g, const Tensor& z);

// Softmax over a rank-1 logit vector.
Tensor softmax(Graph& g, const Tensor& logits);

// Every channel of I [C x H x W] multiplied elementwise by m [H x W].
Tensor channel_scale(Graph& g, const Tensor& I, const Tensor& m);

// Same data, new shape (sizes must agree). flatten() is reshape to rank 1.
Tensor reshape(Graph& g, const Tensor& x, Shape shape);
Tensor flatten(Graph& g, const Tensor& x);

// Row `row` of a [V x d] table as a d-vector.
Tensor embed(Graph& g, const Tensor& table, std::size_t row);

// Elementwise mean of same-shape tensors.
Tensor mean(Graph& g, const std::vector<Tensor>& xs);

// Sum of all entries as a scalar tensor.
Tensor sum(Graph& g, const Tensor& x);

// -log(max(p[index], floor)) as a scalar tensor.
Tensor pick_neg_log(Graph& g, const Tensor& p, std::size_t index);

}  // namespace abc
