#pragma once

#include <functional>

#include "abc/graph.hpp"
#include "abc/ops.hpp"

namespace abc {

// Scalar-valued function of one tensor. The tensor argument is the one being
// perturbed; functions closing over a model may ignore it and read the shared
// handle directly.
using TensorFn = std::function<Tensor(Graph&, const Tensor&)>;

// Compares the analytic gradient of f at x against central finite
// differences with step h. Returns the maximum over coordinates of
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8). x must require a
// gradient; its values are restored before returning. The numeric side uses
// only forward evaluations of f, never the backward pass it is checking.
double grad_check(const TensorFn& f, Tensor x, double h = 1e-4);

}  // namespace abc
