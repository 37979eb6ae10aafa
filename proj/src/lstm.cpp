#include "abc/lstm.hpp"

namespace abc {

LstmParams LstmParams::zeros(std::size_t embed_dim, std::size_t hidden_dim,
                             bool requires_grad) {
  LstmParams p;
  auto w_in = [&] {
    return Tensor::zeros({hidden_dim, embed_dim}, requires_grad);
  };
  auto w_rec = [&] {
    return Tensor::zeros({hidden_dim, hidden_dim}, requires_grad);
  };
  auto bias = [&] { return Tensor::zeros({hidden_dim}, requires_grad); };
  p.W_vi = w_in();
  p.W_hi = w_rec();
  p.b_i = bias();
  p.W_vf = w_in();
  p.W_hf = w_rec();
  p.b_f = bias();
  p.W_vo = w_in();
  p.W_ho = w_rec();
  p.b_o = bias();
  p.W_vg = w_in();
  p.W_hg = w_rec();
  p.b_g = bias();
  return p;
}

void LstmParams::validate() const {
  const std::size_t dh = hidden_dim();
  const std::size_t de = embed_dim();
  const Tensor* input_proj[] = {&W_vi, &W_vf, &W_vo, &W_vg};
  const Tensor* rec_proj[] = {&W_hi, &W_hf, &W_ho, &W_hg};
  const Tensor* biases[] = {&b_i, &b_f, &b_o, &b_g};
  for (const Tensor* t : input_proj)
    if (t->shape() != Shape{dh, de})
      throw DimensionError("lstm: inconsistent input projection shape");
  for (const Tensor* t : rec_proj)
    if (t->shape() != Shape{dh, dh})
      throw DimensionError("lstm: inconsistent recurrent projection shape");
  for (const Tensor* t : biases)
    if (t->shape() != Shape{dh})
      throw DimensionError("lstm: inconsistent bias shape");
}

namespace {

Tensor gate_preactivation(Graph& g, const Tensor& Wv, const Tensor& v,
                          const Tensor& Wh, const Tensor& h, const Tensor& b) {
  return add(g, affine(g, Wv, v, b), matvec(g, Wh, h));
}

}  // namespace

LstmState lstm_step(Graph& g, const Tensor& v, const LstmState& prev,
                    const LstmParams& p, LstmStepTrace* trace) {
  Tensor z_i = gate_preactivation(g, p.W_vi, v, p.W_hi, prev.h, p.b_i);
  Tensor z_f = gate_preactivation(g, p.W_vf, v, p.W_hf, prev.h, p.b_f);
  Tensor z_o = gate_preactivation(g, p.W_vo, v, p.W_ho, prev.h, p.b_o);
  Tensor z_g = gate_preactivation(g, p.W_vg, v, p.W_hg, prev.h, p.b_g);
  if (trace) *trace = {z_i, z_f, z_o, z_g};
  Tensor i = sigmoid(g, z_i);
  Tensor f = sigmoid(g, z_f);
  Tensor o = sigmoid(g, z_o);
  Tensor cand = tanh_op(g, z_g);
  Tensor c = add(g, mul(g, f, prev.c), mul(g, i, cand));
  Tensor h = mul(g, o, tanh_op(g, c));
  return {h, c};
}

Tensor encode_question(Graph& g, const std::vector<std::size_t>& token_ids,
                       const Tensor& embedding_table, const LstmParams& p,
                       const LstmTraceFn& on_step) {
  if (token_ids.empty()) throw ConfigError("encode_question: no tokens");
  const std::size_t dh = p.hidden_dim();
  LstmState state{Tensor::zeros({dh}), Tensor::zeros({dh})};
  std::vector<Tensor> hidden;
  hidden.reserve(token_ids.size());
  for (std::size_t id : token_ids) {
    Tensor v = embed(g, embedding_table, id);
    LstmStepTrace trace;
    state = lstm_step(g, v, state, p, on_step ? &trace : nullptr);
    if (on_step) on_step(trace);
    hidden.push_back(state.h);
  }
  return mean(g, hidden);
}

Tensor encode_question(Graph& g, const std::vector<std::string>& tokens,
                       const Vocabulary& vocab, const Tensor& embedding_table,
                       const LstmParams& p) {
  return encode_question(g, vocab.encode(tokens), embedding_table, p);
}

}  // namespace abc
