#pragma once

#include <string>

#include "abc/ops.hpp"
#include "abc/vocab.hpp"

namespace abc {

// Fusion and classification parameters.
struct AnswerParams {
  Tensor W_ih;  // [d_h x (C * N * N)]
  Tensor W_rh;  // [d_h x (C_r * N * N)]
  Tensor W_sh;  // [d_h x d_s]
  Tensor b_h;   // [d_h]
  Tensor W_ha;  // [A x d_h]
  Tensor b_a;   // [A]

  static AnswerParams zeros(std::size_t hidden_dim, std::size_t feature_size,
                            std::size_t reduced_size, std::size_t question_dim,
                            std::size_t answer_count,
                            bool requires_grad = true);
  std::size_t hidden_dim() const { return W_ih.extent(0); }
  std::size_t answer_count() const { return W_ha.extent(0); }
};

// h = scaled_tanh(W_ih flat(I) + W_rh flat(I_r) + W_sh s + b_h). Feature maps
// are flattened channel-major, matching the tensor's row-major layout. When
// preactivation is given it receives the sum before the nonlinearity.
Tensor fuse(Graph& g, const Tensor& features, const Tensor& reduced,
            const Tensor& s, const AnswerParams& p,
            Tensor* preactivation = nullptr);

// Logits before softmax: W_ha h + b_a.
Tensor answer_logits(Graph& g, const Tensor& h, const AnswerParams& p);

struct Prediction {
  std::size_t index = 0;
  std::string word;
  Tensor probabilities;
};

// Softmax over the logits; the answer is the highest-probability word, lowest
// index winning ties.
Prediction predict(Graph& g, const Tensor& h, const AnswerParams& p,
                   const AnswerVocabulary& vocab);

std::size_t argmax_lowest(const Tensor& probabilities);

// -log p[target], with p clamped at 1e-12.
Tensor cross_entropy_loss(Graph& g, const Tensor& probabilities,
                          std::size_t target);

}  // namespace abc
