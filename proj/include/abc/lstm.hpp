#pragma once

#include <functional>

#include "abc/ops.hpp"
#include "abc/vocab.hpp"

namespace abc {

// Gate parameters for one LSTM cell. Each gate has an input projection
// [d_h x d_e], a recurrent projection [d_h x d_h], and a bias [d_h].
struct LstmParams {
  Tensor W_vi, W_hi, b_i;
  Tensor W_vf, W_hf, b_f;
  Tensor W_vo, W_ho, b_o;
  Tensor W_vg, W_hg, b_g;

  static LstmParams zeros(std::size_t embed_dim, std::size_t hidden_dim,
                          bool requires_grad = true);

  std::size_t embed_dim() const { return W_vi.extent(1); }
  std::size_t hidden_dim() const { return W_vi.extent(0); }
  void validate() const;
};

struct LstmState {
  Tensor h;
  Tensor c;
};

// Gate pre-activations of one step, exposed for activation statistics.
struct LstmStepTrace {
  Tensor z_i, z_f, z_o, z_g;
};

using LstmTraceFn = std::function<void(const LstmStepTrace&)>;

// One step of the question LSTM:
//   i = sigmoid(W_vi v + W_hi h + b_i)      f = sigmoid(W_vf v + W_hf h + b_f)
//   o = sigmoid(W_vo v + W_ho h + b_o)      g = tanh(W_vg v + W_hg h + b_g)
//   c' = f (.) c + i (.) g                  h' = o (.) tanh(c')
LstmState lstm_step(Graph& g, const Tensor& v, const LstmState& prev,
                    const LstmParams& p, LstmStepTrace* trace = nullptr);

// Dense question embedding: mean of the LSTM hidden states over all token
// positions, starting from h = c = 0.
Tensor encode_question(Graph& g, const std::vector<std::size_t>& token_ids,
                       const Tensor& embedding_table, const LstmParams& p,
                       const LstmTraceFn& on_step = {});

// Convenience overload working from raw tokens via the vocabulary.
Tensor encode_question(Graph& g, const std::vector<std::string>& tokens,
                       const Vocabulary& vocab, const Tensor& embedding_table,
                       const LstmParams& p);

}  // namespace abc
