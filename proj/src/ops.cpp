#include "abc/ops.hpp"

#include <cmath>
#include <sstream>

namespace abc {

namespace {

void check_finite(const Tensor& out, const char* op) {
  if (!out.all_finite()) {
    std::ostringstream msg;
    msg << op << ": non-finite values in output";
    throw NumericError(msg.str());
  }
}

VectorMap grad_vec(Tensor& t) {
  return {t.grad_data(), static_cast<Eigen::Index>(t.size())};
}

MatrixMap grad_mat(Tensor& t) {
  return {t.grad_data(), static_cast<Eigen::Index>(t.extent(0)),
          static_cast<Eigen::Index>(t.extent(1))};
}

bool any_grad(std::initializer_list<const Tensor*> ts) {
  for (const Tensor* t : ts)
    if (t->requires_grad()) return true;
  return false;
}

}  // namespace

Tensor affine(Graph& g, const Tensor& W, const Tensor& x, const Tensor& b) {
  if (W.rank() != 2 || x.rank() != 1 || b.rank() != 1)
    throw DimensionError("affine: expected W[o x i], x[i], b[o]");
  const std::size_t o = W.extent(0);
  const std::size_t i = W.extent(1);
  if (x.size() != i || b.size() != o) {
    std::ostringstream msg;
    msg << "affine: W is " << o << "x" << i << " but x has " << x.size()
        << " and b has " << b.size();
    throw DimensionError(msg.str());
  }
  const bool rg = any_grad({&W, &x, &b});
  Tensor out = Tensor::zeros({o}, rg);
  out.vector().noalias() = W.matrix() * x.vector() + b.vector();
  check_finite(out, "affine");
  if (rg) {
    g.record(out, [W = W, x = x, b = b, out]() mutable {
      ConstVectorMap go(out.grad_data(), static_cast<Eigen::Index>(out.size()));
      if (W.requires_grad())
        grad_mat(W).noalias() += go * x.vector().transpose();
      if (x.requires_grad())
        grad_vec(x).noalias() += W.matrix().transpose() * go;
      if (b.requires_grad()) grad_vec(b) += go;
    });
  }
  return out;
}

Tensor matvec(Graph& g, const Tensor& W, const Tensor& x) {
  if (W.rank() != 2 || x.rank() != 1)
    throw DimensionError("matvec: expected W[o x i], x[i]");
  if (x.size() != W.extent(1))
    throw DimensionError("matvec: inner extents differ");
  const bool rg = any_grad({&W, &x});
  Tensor out = Tensor::zeros({W.extent(0)}, rg);
  out.vector().noalias() = W.matrix() * x.vector();
  check_finite(out, "matvec");
  if (rg) {
    g.record(out, [W = W, x = x, out]() mutable {
      ConstVectorMap go(out.grad_data(),
                        static_cast<Eigen::Index>(out.size()));
      if (W.requires_grad())
        grad_mat(W).noalias() += go * x.vector().transpose();
      if (x.requires_grad())
        grad_vec(x).noalias() += W.matrix().transpose() * go;
    });
  }
  return out;
}

Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw DimensionError("add: shapes differ");
  const bool rg = any_grad({&a, &b});
  Tensor out = Tensor::zeros(a.shape(), rg);
  out.array() = a.array() + b.array();
  check_finite(out, "add");
  if (rg) {
    g.record(out, [a = a, b = b, out]() mutable {
      if (a.requires_grad()) a.grad() += out.grad();
      if (b.requires_grad()) b.grad() += out.grad();
    });
  }
  return out;
}

Tensor mul(Graph& g, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw DimensionError("mul: shapes differ");
  const bool rg = any_grad({&a, &b});
  Tensor out = Tensor::zeros(a.shape(), rg);
  out.array() = a.array() * b.array();
  check_finite(out, "mul");
  if (rg) {
    g.record(out, [a = a, b = b, out]() mutable {
      if (a.requires_grad()) a.grad() += out.grad() * b.array();
      if (b.requires_grad()) b.grad() += out.grad() * a.array();
    });
  }
  return out;
}

Tensor scale(Graph& g, const Tensor& x, Scalar c) {
  const bool rg = x.requires_grad();
  Tensor out = Tensor::zeros(x.shape(), rg);
  out.array() = x.array() * c;
  check_finite(out, "scale");
  if (rg) {
    g.record(out, [x = x, out, c]() mutable { x.grad() += out.grad() * c; });
  }
  return out;
}

Tensor activation(Graph& g, ActivationKind kind, const Tensor& x) {
  const bool rg = x.requires_grad();
  Tensor out = Tensor::zeros(x.shape(), rg);
  switch (kind) {
    case ActivationKind::Sigmoid:
      out.array() = 1.0 / (1.0 + (-x.array()).exp());
      break;
    case ActivationKind::Tanh:
      out.array() = x.array().tanh();
      break;
    case ActivationKind::ScaledTanh:
      out.array() = kScaledTanhGain * (kScaledTanhSlope * x.array()).tanh();
      break;
    default:
      throw ConfigError("activation: unknown kind");
  }
  check_finite(out, "activation");
  if (rg) {
    g.record(out, [x = x, out, kind]() mutable {
      const auto y = out.array();
      switch (kind) {
        case ActivationKind::Sigmoid:
          x.grad() += out.grad() * y * (1.0 - y);
          break;
        case ActivationKind::Tanh:
          x.grad() += out.grad() * (1.0 - y.square());
          break;
        case ActivationKind::ScaledTanh:
          x.grad() += out.grad() * kScaledTanhGain * kScaledTanhSlope *
                      (1.0 - (y / kScaledTanhGain).square());
          break;
      }
    });
  }
  return out;
}

Tensor conv2d_same(Graph& g, const Tensor& input, const Tensor& kernel) {
  if (input.rank() != 3 || kernel.rank() != 4)
    throw DimensionError("conv2d_same: expected input[CxHxW], kernel[KxCxkhxkw]");
  const std::size_t C = input.extent(0);
  const std::size_t H = input.extent(1);
  const std::size_t W = input.extent(2);
  const std::size_t K = kernel.extent(0);
  const std::size_t kh = kernel.extent(2);
  const std::size_t kw = kernel.extent(3);
  if (kernel.extent(1) != C)
    throw DimensionError("conv2d_same: kernel channels do not match input");
  if (kh % 2 == 0 || kw % 2 == 0)
    throw ConfigError("conv2d_same: kernel extents must be odd");
  const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(kh / 2);
  const std::ptrdiff_t pw = static_cast<std::ptrdiff_t>(kw / 2);

  const bool rg = any_grad({&input, &kernel});
  Tensor out = Tensor::zeros({K, H, W}, rg);
  const Scalar* in = input.data();
  const Scalar* ker = kernel.data();
  Scalar* o = out.data();
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t y = 0; y < H; ++y) {
      for (std::size_t x = 0; x < W; ++x) {
        Scalar acc = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t dy = 0; dy < kh; ++dy) {
            const std::ptrdiff_t iy =
                static_cast<std::ptrdiff_t>(y + dy) - ph;
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
            for (std::size_t dx = 0; dx < kw; ++dx) {
              const std::ptrdiff_t ix =
                  static_cast<std::ptrdiff_t>(x + dx) - pw;
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
              acc += in[(c * H + static_cast<std::size_t>(iy)) * W +
                        static_cast<std::size_t>(ix)] *
                     ker[((k * C + c) * kh + dy) * kw + dx];
            }
          }
        }
        o[(k * H + y) * W + x] = acc;
      }
    }
  }
  check_finite(out, "conv2d_same");
  if (rg) {
    g.record(out, [input = input, kernel = kernel, out, C, H, W, K, kh, kw, ph, pw]() mutable {
      const Scalar* go = out.grad_data();
      const Scalar* in = input.data();
      const Scalar* ker = kernel.data();
      Scalar* din = input.requires_grad() ? input.grad_data() : nullptr;
      Scalar* dker = kernel.requires_grad() ? kernel.grad_data() : nullptr;
      for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t y = 0; y < H; ++y) {
          for (std::size_t x = 0; x < W; ++x) {
            const Scalar gout = go[(k * H + y) * W + x];
            if (gout == 0.0) continue;
            for (std::size_t c = 0; c < C; ++c) {
              for (std::size_t dy = 0; dy < kh; ++dy) {
                const std::ptrdiff_t iy =
                    static_cast<std::ptrdiff_t>(y + dy) - ph;
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
                for (std::size_t dx = 0; dx < kw; ++dx) {
                  const std::ptrdiff_t ix =
                      static_cast<std::ptrdiff_t>(x + dx) - pw;
                  if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
                  const std::size_t in_idx =
                      (c * H + static_cast<std::size_t>(iy)) * W +
                      static_cast<std::size_t>(ix);
                  const std::size_t ker_idx = ((k * C + c) * kh + dy) * kw + dx;
                  if (din) din[in_idx] += gout * ker[ker_idx];
                  if (dker) dker[ker_idx] += gout * in[in_idx];
                }
              }
            }
          }
        }
      }
    });
  }
  return out;
}

namespace {

Tensor softmax_impl(Graph& g, const Tensor& z, const char* op) {
  const bool rg = z.requires_grad();
  Tensor out = Tensor::zeros(z.shape(), rg);
  const Scalar zmax = z.array().maxCoeff();
  out.array() = (z.array() - zmax).exp();
  const Scalar total = out.array().sum();
  out.array() /= total;
  check_finite(out, op);
  if (rg) {
    g.record(out, [z = z, out]() mutable {
      const Scalar dot = (out.grad() * out.array()).sum();
      z.grad() += out.array() * (out.grad() - dot);
    });
  }
  return out;
}

}  // namespace

Tensor softmax_spatial(Graph& g, const Tensor& z) {
  if (z.rank() != 2)
    throw DimensionError("softmax_spatial: expected a rank-2 map");
  return softmax_impl(g, z, "softmax_spatial");
}

Tensor softmax(Graph& g, const Tensor& logits) {
  if (logits.rank() != 1)
    throw DimensionError("softmax: expected a rank-1 vector");
  return softmax_impl(g, logits, "softmax");
}

Tensor channel_scale(Graph& g, const Tensor& I, const Tensor& m) {
  if (I.rank() != 3 || m.rank() != 2)
    throw DimensionError("channel_scale: expected I[CxHxW], m[HxW]");
  const std::size_t C = I.extent(0);
  const std::size_t H = I.extent(1);
  const std::size_t W = I.extent(2);
  if (m.extent(0) != H || m.extent(1) != W)
    throw DimensionError("channel_scale: spatial extents differ");
  const bool rg = any_grad({&I, &m});
  Tensor out = Tensor::zeros({C, H, W}, rg);
  const std::size_t plane = H * W;
  for (std::size_t c = 0; c < C; ++c) {
    ConstArrayMap src(I.data() + c * plane, static_cast<Eigen::Index>(plane));
    ArrayMap dst(out.data() + c * plane, static_cast<Eigen::Index>(plane));
    dst = src * m.array();
  }
  check_finite(out, "channel_scale");
  if (rg) {
    g.record(out, [I = I, m = m, out, C, plane]() mutable {
      for (std::size_t c = 0; c < C; ++c) {
        ConstArrayMap go(out.grad_data() + c * plane,
                         static_cast<Eigen::Index>(plane));
        if (I.requires_grad()) {
          ArrayMap di(I.grad_data() + c * plane,
                      static_cast<Eigen::Index>(plane));
          di += go * m.array();
        }
        if (m.requires_grad()) {
          ConstArrayMap src(I.data() + c * plane,
                            static_cast<Eigen::Index>(plane));
          m.grad() += go * src;
        }
      }
    });
  }
  return out;
}

Tensor reshape(Graph& g, const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size())
    throw DimensionError("reshape: sizes differ");
  const bool rg = x.requires_grad();
  Tensor out = Tensor::zeros(std::move(shape), rg);
  out.array() = x.array();
  if (rg) {
    g.record(out, [x = x, out]() mutable { x.grad() += out.grad(); });
  }
  return out;
}

Tensor flatten(Graph& g, const Tensor& x) { return reshape(g, x, {x.size()}); }

Tensor embed(Graph& g, const Tensor& table, std::size_t row) {
  if (table.rank() != 2) throw DimensionError("embed: expected a [V x d] table");
  if (row >= table.extent(0)) throw ContractError("embed: row out of range");
  const std::size_t d = table.extent(1);
  const bool rg = table.requires_grad();
  Tensor out = Tensor::zeros({d}, rg);
  ConstArrayMap src(table.data() + row * d, static_cast<Eigen::Index>(d));
  out.array() = src;
  check_finite(out, "embed");
  if (rg) {
    g.record(out, [table = table, out, row, d]() mutable {
      ArrayMap dst(table.grad_data() + row * d, static_cast<Eigen::Index>(d));
      dst += out.grad();
    });
  }
  return out;
}

Tensor mean(Graph& g, const std::vector<Tensor>& xs) {
  if (xs.empty()) throw ContractError("mean: empty input list");
  for (const Tensor& x : xs)
    if (x.shape() != xs.front().shape())
      throw DimensionError("mean: shapes differ");
  bool rg = false;
  for (const Tensor& x : xs) rg = rg || x.requires_grad();
  Tensor out = Tensor::zeros(xs.front().shape(), rg);
  for (const Tensor& x : xs) out.array() += x.array();
  const Scalar inv = 1.0 / static_cast<Scalar>(xs.size());
  out.array() *= inv;
  check_finite(out, "mean");
  if (rg) {
    g.record(out, [xs = xs, out, inv]() mutable {
      for (Tensor x : xs)
        if (x.requires_grad()) x.grad() += out.grad() * inv;
    });
  }
  return out;
}

Tensor sum(Graph& g, const Tensor& x) {
  const bool rg = x.requires_grad();
  Tensor out = Tensor::zeros({1}, rg);
  out.at(0) = x.array().sum();
  check_finite(out, "sum");
  if (rg) {
    g.record(out, [x = x, out]() mutable { x.grad() += out.grad()(0); });
  }
  return out;
}

Tensor pick_neg_log(Graph& g, const Tensor& p, std::size_t index) {
  if (p.rank() != 1)
    throw DimensionError("pick_neg_log: expected a rank-1 vector");
  if (index >= p.size()) throw ContractError("pick_neg_log: index out of range");
  const bool rg = p.requires_grad();
  Tensor out = Tensor::zeros({1}, rg);
  const Scalar clamped = std::max(p.at(index), kProbFloor);
  out.at(0) = -std::log(clamped);
  check_finite(out, "pick_neg_log");
  if (rg) {
    g.record(out, [p = p, out, index]() mutable {
      const Scalar v = p.at(index);
      if (v > kProbFloor) p.grad()(static_cast<Eigen::Index>(index)) -=
          out.grad()(0) / v;
    });
  }
  return out;
}

}  // namespace abc
