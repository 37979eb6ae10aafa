#include "abc/graph.hpp"

namespace abc {

void Graph::record(Tensor output, std::function<void()> backward_fn) {
  records_.push_back({std::move(output), std::move(backward_fn)});
}

void Graph::backward(const Tensor& loss) {
  if (!loss.valid() || loss.size() != 1)
    throw ContractError("backward requires a scalar loss");
  bool produced = false;
  for (const Record& r : records_) {
    if (r.output.same_storage(loss)) {
      produced = true;
      break;
    }
  }
  if (!produced)
    throw ContractError("backward: loss was not produced by this graph");

  // Intermediate gradients are scratch space for this pass; leaves keep
  // whatever they have accumulated so far.
  for (Record& r : records_) r.output.zero_grad();
  Tensor seed = loss;
  seed.grad()(0) = 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it)
    it->backward_fn();
}

}  // namespace abc
