#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <memory>
#include <vector>

#include "abc/errors.hpp"

namespace abc {

using Scalar = double;
using Shape = std::vector<std::size_t>;

using ArrayMap = Eigen::Map<Eigen::ArrayXd>;
using ConstArrayMap = Eigen::Map<const Eigen::ArrayXd>;
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

std::size_t shape_size(const Shape& shape);

// Dense n-dimensional array of doubles in row-major order, with an optional
// gradient buffer of the same extent. Copies are shallow: all copies of a
// Tensor alias the same storage, so a parameter handed to an op and the
// parameter held by the model see the same values and gradient.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Scalar value, bool requires_grad = false);
  static Tensor scalar(Scalar value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<Scalar> values,
                     bool requires_grad = false);

  bool valid() const { return storage_ != nullptr; }
  const Shape& shape() const { return storage_->shape; }
  std::size_t rank() const { return storage_->shape.size(); }
  std::size_t size() const {
    return static_cast<std::size_t>(storage_->values.size());
  }
  std::size_t extent(std::size_t axis) const;
  bool requires_grad() const { return storage_->requires_grad; }

  Scalar* data() { return storage_->values.data(); }
  const Scalar* data() const { return storage_->values.data(); }
  Scalar* grad_data();
  const Scalar* grad_data() const;

  // Flat Eigen views over the values and the gradient.
  ArrayMap array() { return {data(), storage_->values.size()}; }
  ConstArrayMap array() const { return {data(), storage_->values.size()}; }
  ArrayMap grad();
  ConstArrayMap grad() const;

  // Rank-2 tensors viewed as row-major matrices, rank-1 as column vectors.
  MatrixMap matrix();
  ConstMatrixMap matrix() const;
  VectorMap vector();
  ConstVectorMap vector() const;

  // Element access by multi-index; bounds are the caller's responsibility.
  Scalar& at(std::size_t i) { return data()[i]; }
  Scalar at(std::size_t i) const { return data()[i]; }
  Scalar& at(std::size_t i, std::size_t j);
  Scalar at(std::size_t i, std::size_t j) const;
  Scalar& at(std::size_t i, std::size_t j, std::size_t k);
  Scalar at(std::size_t i, std::size_t j, std::size_t k) const;
  Scalar& at(std::size_t i, std::size_t j, std::size_t k, std::size_t l);
  Scalar at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const;

  // Value of a one-element tensor.
  Scalar value() const;

  void zero_grad();
  bool all_finite() const;

  // Identity of the underlying storage, not value equality.
  bool same_storage(const Tensor& other) const {
    return storage_ == other.storage_;
  }
  const void* storage_id() const { return storage_.get(); }

 private:
  struct Storage {
    Shape shape;
    Eigen::ArrayXd values;
    Eigen::ArrayXd grad;
    bool requires_grad = false;
  };

  explicit Tensor(std::shared_ptr<Storage> s) : storage_(std::move(s)) {}

  std::shared_ptr<Storage> storage_;
};

// Checkpoint serialization: little-endian u32 rank, u32 extents, f64 values.
void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in, bool requires_grad = false);

}  // namespace abc
