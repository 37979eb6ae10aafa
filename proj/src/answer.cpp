#include "abc/answer.hpp"

namespace abc {

AnswerParams AnswerParams::zeros(std::size_t hidden_dim,
                                 std::size_t feature_size,
                                 std::size_t reduced_size,
                                 std::size_t question_dim,
                                 std::size_t answer_count,
                                 bool requires_grad) {
  if (answer_count < 2) throw ConfigError("answer dictionary needs at least two words");
  AnswerParams p;
  p.W_ih = Tensor::zeros({hidden_dim, feature_size}, requires_grad);
  p.W_rh = Tensor::zeros({hidden_dim, reduced_size}, requires_grad);
  p.W_sh = Tensor::zeros({hidden_dim, question_dim}, requires_grad);
  p.b_h = Tensor::zeros({hidden_dim}, requires_grad);
  p.W_ha = Tensor::zeros({answer_count, hidden_dim}, requires_grad);
  p.b_a = Tensor::zeros({answer_count}, requires_grad);
  return p;
}

Tensor fuse(Graph& g, const Tensor& features, const Tensor& reduced,
            const Tensor& s, const AnswerParams& p, Tensor* preactivation) {
  Tensor flat_i = flatten(g, features);
  Tensor flat_r = flatten(g, reduced);
  Tensor pre = add(g, add(g, matvec(g, p.W_ih, flat_i), matvec(g, p.W_rh, flat_r)),
                   affine(g, p.W_sh, s, p.b_h));
  if (preactivation) *preactivation = pre;
  return scaled_tanh(g, pre);
}

Tensor answer_logits(Graph& g, const Tensor& h, const AnswerParams& p) {
  return affine(g, p.W_ha, h, p.b_a);
}

std::size_t argmax_lowest(const Tensor& probabilities) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probabilities.size(); ++i)
    if (probabilities.at(i) > probabilities.at(best)) best = i;
  return best;
}

Prediction predict(Graph& g, const Tensor& h, const AnswerParams& p,
                   const AnswerVocabulary& vocab) {
  if (vocab.size() != p.answer_count())
    throw DimensionError("answer vocabulary size does not match classifier");
  Tensor probs = softmax(g, answer_logits(g, h, p));
  Prediction out;
  out.index = argmax_lowest(probs);
  out.word = vocab.word(out.index);
  out.probabilities = probs;
  return out;
}

Tensor cross_entropy_loss(Graph& g, const Tensor& probabilities,
                          std::size_t target) {
  return pick_neg_log(g, probabilities, target);
}

}  // namespace abc
