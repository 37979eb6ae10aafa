#pragma once

#include <functional>
#include <vector>

#include "abc/tensor.hpp"

namespace abc {

// Tape of executed op records. Ops append a record (output handle plus a
// local-gradient closure) in execution order; backward() replays the closures
// exactly once in reverse. A Graph and the tensors flowing through it belong
// to a single thread; independent graphs may run in parallel over shared
// read-only parameters.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  // Called by ops after computing their output.
  void record(Tensor output, std::function<void()> backward_fn);

  // Seeds d(loss)/d(loss) = 1 and accumulates d(loss)/d(t) into the grad
  // buffer of every requires_grad tensor reachable from the tape. Gradients
  // of intermediate (op-produced) tensors are reset at the start of each
  // call; leaf gradients accumulate across calls until explicitly cleared.
  void backward(const Tensor& loss);

  void clear() { records_.clear(); }
  std::size_t size() const { return records_.size(); }

 private:
  struct Record {
    Tensor output;
    std::function<void()> backward_fn;
  };

  std::vector<Record> records_;
};

}  // namespace abc
