#pragma once

#include <filesystem>

#include "abc/ops.hpp"

namespace abc {

// Parameters of the attention extraction path: the projection that turns a
// question embedding into a configurable convolutional kernel, and the 1x1
// channel-reduction kernel applied to the attention-weighted feature map.
struct AttentionParams {
  Tensor W_sk;       // [(C * kh * kw) x d_s]
  Tensor b_k;        // [C * kh * kw]
  Tensor W_reduce;   // [C_r x C x 1 x 1]
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;

  static AttentionParams zeros(std::size_t channels, std::size_t reduced,
                               std::size_t question_dim, std::size_t kh = 1,
                               std::size_t kw = 1, bool requires_grad = true,
                               bool with_kernel = true);
  std::size_t channels() const { return W_reduce.extent(1); }
  std::size_t reduced_channels() const { return W_reduce.extent(0); }
};

// k = sigmoid(W_sk s + b_k), reshaped to a [1 x C x kh x kw] kernel. When
// preactivation is given it receives W_sk s + b_k before the sigmoid.
Tensor configure_kernel(Graph& g, const Tensor& s, const AttentionParams& p,
                        Tensor* preactivation = nullptr);

// m = softmax over all positions of the padded correlation of the kernel with
// the feature map; same spatial size as the feature map.
Tensor attention_map(Graph& g, const Tensor& cck, const Tensor& features);

// I'_c = I_c (.) m for every channel.
Tensor weight_features(Graph& g, const Tensor& features, const Tensor& map);

// 1x1 convolution reducing C channels to C_r.
Tensor reduce_channels(Graph& g, const Tensor& weighted,
                       const AttentionParams& p);

// Export formats for attention maps: N x N CSV, and 8-bit grayscale PGM with
// values scaled by the map maximum.
void write_attention_csv(const Tensor& m, const std::filesystem::path& path);
void write_attention_pgm(const Tensor& m, const std::filesystem::path& path);

}  // namespace abc
