#include "abc/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace abc {

double grad_check(const TensorFn& f, Tensor x, double h) {
  if (!x.requires_grad())
    throw ContractError("grad_check: x must require a gradient");
  if (h <= 0.0) throw ContractError("grad_check: step must be positive");

  x.zero_grad();
  std::vector<Scalar> analytic(x.size());
  {
    Graph g;
    Tensor y = f(g, x);
    if (y.size() != 1)
      throw ContractError("grad_check: f must be scalar-valued");
    g.backward(y);
    for (std::size_t i = 0; i < x.size(); ++i) analytic[i] = x.grad_data()[i];
  }

  auto eval = [&]() {
    Graph g;
    Tensor y = f(g, x);
    if (y.size() != 1)
      throw ContractError("grad_check: f must be scalar-valued");
    return y.value();
  };

  double max_rel = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Scalar saved = x.data()[i];
    x.data()[i] = saved + h;
    const double plus = eval();
    x.data()[i] = saved - h;
    const double minus = eval();
    x.data()[i] = saved;
    const double numeric = (plus - minus) / (2.0 * h);
    const double denom =
        std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    max_rel = std::max(max_rel, std::abs(analytic[i] - numeric) / denom);
  }
  return max_rel;
}

}  // namespace abc
