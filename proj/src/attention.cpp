#include "abc/attention.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace abc {

AttentionParams AttentionParams::zeros(std::size_t channels,
                                       std::size_t reduced,
                                       std::size_t question_dim,
                                       std::size_t kh, std::size_t kw,
                                       bool requires_grad, bool with_kernel) {
  if (kh % 2 == 0 || kw % 2 == 0)
    throw ConfigError("attention kernel extents must be odd");
  if (reduced > channels)
    throw ConfigError("reduced channel count exceeds feature channels");
  AttentionParams p;
  p.kernel_h = kh;
  p.kernel_w = kw;
  if (with_kernel) {
    p.W_sk = Tensor::zeros({channels * kh * kw, question_dim}, requires_grad);
    p.b_k = Tensor::zeros({channels * kh * kw}, requires_grad);
  }
  p.W_reduce = Tensor::zeros({reduced, channels, 1, 1}, requires_grad);
  return p;
}

Tensor configure_kernel(Graph& g, const Tensor& s, const AttentionParams& p,
                        Tensor* preactivation) {
  if (!p.W_sk.valid())
    throw ConfigError("configure_kernel: attention parameters have no kernel projection");
  const std::size_t rows = p.W_sk.extent(0);
  const std::size_t channels = rows / (p.kernel_h * p.kernel_w);
  Tensor pre = affine(g, p.W_sk, s, p.b_k);
  if (preactivation) *preactivation = pre;
  Tensor k = sigmoid(g, pre);
  return reshape(g, k, {1, channels, p.kernel_h, p.kernel_w});
}

Tensor attention_map(Graph& g, const Tensor& cck, const Tensor& features) {
  Tensor z = conv2d_same(g, features, cck);
  Tensor plane = reshape(g, z, {features.extent(1), features.extent(2)});
  return softmax_spatial(g, plane);
}

Tensor weight_features(Graph& g, const Tensor& features, const Tensor& map) {
  return channel_scale(g, features, map);
}

Tensor reduce_channels(Graph& g, const Tensor& weighted,
                       const AttentionParams& p) {
  return conv2d_same(g, weighted, p.W_reduce);
}

void write_attention_csv(const Tensor& m, const std::filesystem::path& path) {
  if (m.rank() != 2) throw DimensionError("attention map must be rank 2");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string());
  char buf[64];
  for (std::size_t r = 0; r < m.extent(0); ++r) {
    for (std::size_t c = 0; c < m.extent(1); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", m.at(r, c));
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_attention_pgm(const Tensor& m, const std::filesystem::path& path) {
  if (m.rank() != 2) throw DimensionError("attention map must be rank 2");
  const double peak = m.array().maxCoeff();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string());
  out << "P5\n" << m.extent(1) << ' ' << m.extent(0) << "\n255\n";
  for (std::size_t r = 0; r < m.extent(0); ++r) {
    for (std::size_t c = 0; c < m.extent(1); ++c) {
      const double v = peak > 0.0 ? m.at(r, c) / peak : 0.0;
      const int byte = static_cast<int>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
      out.put(static_cast<char>(byte));
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace abc
