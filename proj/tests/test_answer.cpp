#include <doctest.h>

#include <cmath>

#include "abc/answer.hpp"
#include "abc/grad_check.hpp"
#include "abc/rng.hpp"

using namespace abc;

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0,
                     bool requires_grad = false) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = rng.uniform(lo, hi);
  return t;
}

AnswerVocabulary tiny_answers() {
  return AnswerVocabulary::build({"red", "blue", "circle", "two"});
}

}  // namespace

TEST_CASE("fuse with zero parameters is the zero vector") {
  Graph g;
  AnswerParams p = AnswerParams::zeros(3, 2 * 2 * 2, 1 * 2 * 2, 4, 2);
  Tensor h = fuse(g, Tensor::zeros({2, 2, 2}), Tensor::zeros({1, 2, 2}),
                  Tensor::zeros({4}), p);
  for (std::size_t i = 0; i < h.size(); ++i) CHECK(h.at(i) == 0.0);
}

TEST_CASE("fuse with only a bias applies the scaled tanh to it") {
  Graph g;
  AnswerParams p = AnswerParams::zeros(3, 8, 4, 4, 2);
  p.b_h.at(0) = 0.5;
  p.b_h.at(1) = -2.0;
  Tensor h = fuse(g, Tensor::zeros({2, 2, 2}), Tensor::zeros({1, 2, 2}),
                  Tensor::zeros({4}), p);
  CHECK(h.at(0) == doctest::Approx(1.7159 * std::tanh(0.5 * 2.0 / 3.0)).epsilon(1e-15));
  CHECK(h.at(1) == doctest::Approx(1.7159 * std::tanh(-2.0 * 2.0 / 3.0)).epsilon(1e-15));
  CHECK(h.at(2) == 0.0);
  for (std::size_t i = 0; i < h.size(); ++i)
    CHECK(std::abs(h.at(i)) < 1.7159);
}

TEST_CASE("fuse matches a two-dimensional hand trace") {
  Graph g;
  // d_h = 2, I is 1x1x2 (flattens to two entries), I_r is 1x1x1, d_s = 1.
  AnswerParams p = AnswerParams::zeros(2, 2, 1, 1, 2);
  p.W_ih.at(0, 0) = 0.3;
  p.W_ih.at(0, 1) = -0.2;
  p.W_ih.at(1, 0) = 0.1;
  p.W_ih.at(1, 1) = 0.4;
  p.W_rh.at(0, 0) = 0.7;
  p.W_rh.at(1, 0) = -0.5;
  p.W_sh.at(0, 0) = -0.9;
  p.W_sh.at(1, 0) = 0.6;
  p.b_h.at(0) = 0.05;
  p.b_h.at(1) = -0.15;
  Tensor I = Tensor::from({1, 1, 2}, {1.5, -0.8});
  Tensor Ir = Tensor::from({1, 1, 1}, {0.4});
  Tensor s = Tensor::from({1}, {-1.2});
  Tensor h = fuse(g, I, Ir, s, p);

  const double pre0 = 0.3 * 1.5 + (-0.2) * (-0.8) + 0.7 * 0.4 + (-0.9) * (-1.2) + 0.05;
  const double pre1 = 0.1 * 1.5 + 0.4 * (-0.8) + (-0.5) * 0.4 + 0.6 * (-1.2) + (-0.15);
  CHECK(h.at(0) == doctest::Approx(1.7159 * std::tanh(pre0 * 2.0 / 3.0)).epsilon(1e-12));
  CHECK(h.at(1) == doctest::Approx(1.7159 * std::tanh(pre1 * 2.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("predict breaks ties toward the lowest index") {
  Graph g;
  AnswerParams p = AnswerParams::zeros(3, 8, 4, 4, 4);
  AnswerVocabulary vocab = tiny_answers();
  Prediction pred = predict(g, Tensor::zeros({3}), p, vocab);
  CHECK(pred.index == 0);
  CHECK(pred.word == "red");
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(pred.probabilities.at(i) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("predict follows a dominant bias") {
  Graph g;
  AnswerParams p = AnswerParams::zeros(3, 8, 4, 4, 4);
  p.b_a.at(2) = 30.0;
  Prediction pred = predict(g, Tensor::zeros({3}), p, tiny_answers());
  CHECK(pred.index == 2);
  CHECK(pred.word == "circle");
  CHECK(pred.probabilities.at(2) > 0.999);
}

TEST_CASE("predict argmax matches a brute-force scan on random logits") {
  Rng rng(51);
  Graph g;
  AnswerParams p = AnswerParams::zeros(4, 8, 4, 4, 6);
  for (std::size_t i = 0; i < p.W_ha.size(); ++i)
    p.W_ha.at(i) = rng.uniform(-1.0, 1.0);
  AnswerVocabulary vocab =
      AnswerVocabulary::build({"a", "b", "c", "d", "e", "f"});
  for (int trial = 0; trial < 50; ++trial) {
    Tensor h = random_tensor(rng, {4}, -2.0, 2.0);
    Prediction pred = predict(g, h, p, vocab);
    std::size_t best = 0;
    for (std::size_t i = 1; i < 6; ++i)
      if (pred.probabilities.at(i) > pred.probabilities.at(best)) best = i;
    CHECK(pred.index == best);
    g.clear();
  }
}

TEST_CASE("argmax is invariant to adding a constant to all logits") {
  Rng rng(52);
  Graph g;
  Tensor logits = random_tensor(rng, {5}, -2.0, 2.0);
  Tensor shifted = Tensor::zeros({5});
  shifted.array() = logits.array() + 41.5;
  CHECK(argmax_lowest(softmax(g, logits)) == argmax_lowest(softmax(g, shifted)));
}

TEST_CASE("cross entropy of a uniform distribution is log A") {
  Graph g;
  Tensor p = Tensor::full({4}, 0.25);
  CHECK(cross_entropy_loss(g, p, 2).value() ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(cross_entropy_loss(g, p, 2).value() ==
        doctest::Approx(1.3863).epsilon(1e-4));
}

TEST_CASE("cross entropy vanishes exactly when the target is certain") {
  Graph g;
  Tensor p = Tensor::from({3}, {0.0, 1.0, 0.0});
  CHECK(cross_entropy_loss(g, p, 1).value() == 0.0);
  CHECK(cross_entropy_loss(g, p, 0).value() > 0.0);  // clamped, not infinite
  CHECK(cross_entropy_loss(g, p, 0).value() ==
        doctest::Approx(-std::log(1e-12)).epsilon(1e-12));
  CHECK_THROWS_AS(cross_entropy_loss(g, p, 3), ContractError);
}

TEST_CASE("loss gradient w.r.t. logits is probabilities minus one-hot") {
  Rng rng(53);
  Tensor logits = random_tensor(rng, {5}, -2.0, 2.0, true);
  auto f = [&](Graph& g, const Tensor& t) {
    return cross_entropy_loss(g, softmax(g, t), 4);
  };
  CHECK(grad_check(f, logits, 1e-4) < 1e-5);

  Graph g;
  Tensor probs = softmax(g, logits);
  Tensor loss = cross_entropy_loss(g, probs, 4);
  logits.zero_grad();
  g.backward(loss);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(logits.grad()(static_cast<Eigen::Index>(i)) ==
          doctest::Approx(probs.at(i) - (i == 4 ? 1.0 : 0.0)).epsilon(1e-12));
}

TEST_CASE("loss is nonnegative for any probability vector") {
  Rng rng(54);
  Graph g;
  for (int trial = 0; trial < 50; ++trial) {
    Tensor probs = softmax(g, random_tensor(rng, {6}, -5.0, 5.0));
    for (std::size_t t = 0; t < 6; ++t)
      CHECK(cross_entropy_loss(g, probs, t).value() >= 0.0);
    g.clear();
  }
}
