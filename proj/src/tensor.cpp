#include "abc/tensor.hpp"

#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace abc {

namespace {

void check_extents(const Shape& shape) {
  for (std::size_t e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive");
  }
}

std::size_t stride_product(const Shape& shape, std::size_t from) {
  std::size_t p = 1;
  for (std::size_t a = from; a < shape.size(); ++a) p *= shape[a];
  return p;
}

template <typename T>
void write_le(std::ostream& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  // Host is little-endian on every platform this builds for; memcpy order is
  // the wire order.
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in) throw IoError("unexpected end of tensor stream");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

std::size_t shape_size(const Shape& shape) { return stride_product(shape, 0); }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  check_extents(shape);
  auto s = std::make_shared<Storage>();
  const std::size_t n = shape_size(shape);
  s->shape = std::move(shape);
  s->values = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(n));
  s->requires_grad = requires_grad;
  if (requires_grad)
    s->grad = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(n));
  return Tensor(std::move(s));
}

Tensor Tensor::full(Shape shape, Scalar value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  t.array() = value;
  return t;
}

Tensor Tensor::scalar(Scalar value, bool requires_grad) {
  return full({1}, value, requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<Scalar> values,
                    bool requires_grad) {
  if (shape_size(shape) != values.size()) {
    std::ostringstream msg;
    msg << "value count " << values.size() << " does not match shape size "
        << shape_size(shape);
    throw DimensionError(msg.str());
  }
  Tensor t = zeros(std::move(shape), requires_grad);
  std::memcpy(t.data(), values.data(), values.size() * sizeof(Scalar));
  return t;
}

std::size_t Tensor::extent(std::size_t axis) const {
  if (axis >= rank()) throw DimensionError("axis out of range");
  return storage_->shape[axis];
}

Scalar* Tensor::grad_data() {
  if (!storage_->requires_grad)
    throw ContractError("tensor has no gradient buffer");
  return storage_->grad.data();
}

const Scalar* Tensor::grad_data() const {
  if (!storage_->requires_grad)
    throw ContractError("tensor has no gradient buffer");
  return storage_->grad.data();
}

ArrayMap Tensor::grad() {
  return {grad_data(), static_cast<Eigen::Index>(size())};
}

ConstArrayMap Tensor::grad() const {
  return {grad_data(), static_cast<Eigen::Index>(size())};
}

MatrixMap Tensor::matrix() {
  if (rank() != 2) throw DimensionError("matrix view requires rank 2");
  return {data(), static_cast<Eigen::Index>(extent(0)),
          static_cast<Eigen::Index>(extent(1))};
}

ConstMatrixMap Tensor::matrix() const {
  if (rank() != 2) throw DimensionError("matrix view requires rank 2");
  return {data(), static_cast<Eigen::Index>(extent(0)),
          static_cast<Eigen::Index>(extent(1))};
}

VectorMap Tensor::vector() {
  if (rank() != 1) throw DimensionError("vector view requires rank 1");
  return {data(), static_cast<Eigen::Index>(size())};
}

ConstVectorMap Tensor::vector() const {
  if (rank() != 1) throw DimensionError("vector view requires rank 1");
  return {data(), static_cast<Eigen::Index>(size())};
}

Scalar& Tensor::at(std::size_t i, std::size_t j) {
  return data()[i * stride_product(shape(), 1) + j];
}

Scalar Tensor::at(std::size_t i, std::size_t j) const {
  return data()[i * stride_product(shape(), 1) + j];
}

Scalar& Tensor::at(std::size_t i, std::size_t j, std::size_t k) {
  const Shape& s = shape();
  return data()[(i * s[1] + j) * s[2] + k];
}

Scalar Tensor::at(std::size_t i, std::size_t j, std::size_t k) const {
  const Shape& s = shape();
  return data()[(i * s[1] + j) * s[2] + k];
}

Scalar& Tensor::at(std::size_t i, std::size_t j, std::size_t k,
                   std::size_t l) {
  const Shape& s = shape();
  return data()[((i * s[1] + j) * s[2] + k) * s[3] + l];
}

Scalar Tensor::at(std::size_t i, std::size_t j, std::size_t k,
                  std::size_t l) const {
  const Shape& s = shape();
  return data()[((i * s[1] + j) * s[2] + k) * s[3] + l];
}

Scalar Tensor::value() const {
  if (size() != 1) throw ContractError("value() requires a one-element tensor");
  return data()[0];
}

void Tensor::zero_grad() {
  if (storage_->requires_grad) storage_->grad.setZero();
}

bool Tensor::all_finite() const { return array().allFinite(); }

void write_tensor(std::ostream& out, const Tensor& t) {
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t a = 0; a < t.rank(); ++a)
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.extent(a)));
  for (std::size_t i = 0; i < t.size(); ++i)
    write_le<double>(out, t.data()[i]);
  if (!out) throw IoError("failed to write tensor");
}

Tensor read_tensor(std::istream& in, bool requires_grad) {
  const auto rank = read_le<std::uint32_t>(in);
  if (rank == 0 || rank > 8) throw IoError("implausible tensor rank");
  Shape shape(rank);
  for (auto& e : shape) {
    e = read_le<std::uint32_t>(in);
    if (e == 0) throw IoError("zero tensor extent");
  }
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = read_le<double>(in);
  return t;
}

}  // namespace abc
