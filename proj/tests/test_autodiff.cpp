#include <doctest.h>

#include <cmath>

#include "abc/grad_check.hpp"
#include "abc/rng.hpp"

using namespace abc;

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo, double hi,
                     bool requires_grad) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = rng.uniform(lo, hi);
  return t;
}

// Reduces any op output to a scalar through a fixed random weighting so the
// upstream gradient is non-trivial at every coordinate.
Tensor weighted_total(Graph& g, const Tensor& y, Rng& rng) {
  Tensor w = random_tensor(rng, y.shape(), -1.0, 1.0, false);
  return sum(g, mul(g, y, w));
}

}  // namespace

TEST_CASE("grad_check on a sum of squares is tight") {
  Rng rng(1);
  Tensor x = random_tensor(rng, {6}, -2.0, 2.0, true);
  auto f = [](Graph& g, const Tensor& t) { return sum(g, mul(g, t, t)); };
  CHECK(grad_check(f, x, 1e-4) < 1e-7);
}

TEST_CASE("grad_check on a linear map is exact up to rounding") {
  Rng rng(2);
  Tensor x = random_tensor(rng, {5}, -1.0, 1.0, true);
  Tensor w = random_tensor(rng, {5}, -1.0, 1.0, false);
  auto f = [w](Graph& g, const Tensor& t) { return sum(g, mul(g, t, w)); };
  CHECK(grad_check(f, x, 1e-4) < 1e-10);
}

TEST_CASE("grad_check enforces its contract") {
  Tensor x = Tensor::zeros({2}, true);
  auto vector_valued = [](Graph& g, const Tensor& t) { return mul(g, t, t); };
  CHECK_THROWS_AS(grad_check(vector_valued, x, 1e-4), ContractError);
  Tensor frozen = Tensor::zeros({2}, false);
  auto fine = [](Graph& g, const Tensor& t) { return sum(g, t); };
  CHECK_THROWS_AS(grad_check(fine, frozen, 1e-4), ContractError);
}

TEST_CASE("every primitive passes grad_check on random small shapes") {
  Rng rng(3);
  constexpr double kTol = 1e-5;
  constexpr double kStep = 1e-4;

  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + rng.below(4);
    const std::size_t m = 2 + rng.below(4);

    {
      // affine: gradients w.r.t. x, W, and b. The weighting rng is reseeded
      // inside each closure so every evaluation sees the same function.
      Tensor W = random_tensor(rng, {m, n}, -1.0, 1.0, true);
      Tensor x = random_tensor(rng, {n}, -1.0, 1.0, true);
      Tensor b = random_tensor(rng, {m}, -1.0, 1.0, true);
      auto via_x = [&, W, b](Graph& g, const Tensor& t) {
        Rng r(100 + trial);
        return weighted_total(g, affine(g, W, t, b), r);
      };
      CHECK(grad_check(via_x, x, kStep) < kTol);
      auto via_W = [&, x, b](Graph& g, const Tensor& t) {
        Rng r(100 + trial);
        return weighted_total(g, affine(g, t, x, b), r);
      };
      CHECK(grad_check(via_W, W, kStep) < kTol);
      auto via_b = [&, W, x](Graph& g, const Tensor& t) {
        Rng r(100 + trial);
        return weighted_total(g, affine(g, W, x, t), r);
      };
      CHECK(grad_check(via_b, b, kStep) < kTol);
    }
    {
      // matvec
      Tensor W = random_tensor(rng, {m, n}, -1.0, 1.0, true);
      Tensor x = random_tensor(rng, {n}, -1.0, 1.0, true);
      auto via_x = [&, W](Graph& g, const Tensor& t) {
        Rng r(200 + trial);
        return weighted_total(g, matvec(g, W, t), r);
      };
      CHECK(grad_check(via_x, x, kStep) < kTol);
    }
    {
      // add, mul, scale
      Tensor a = random_tensor(rng, {n}, -1.0, 1.0, true);
      Tensor b = random_tensor(rng, {n}, -1.0, 1.0, true);
      auto via_add = [&, b](Graph& g, const Tensor& t) {
        Rng r(300 + trial);
        return weighted_total(g, add(g, t, b), r);
      };
      CHECK(grad_check(via_add, a, kStep) < kTol);
      auto via_mul = [&, b](Graph& g, const Tensor& t) {
        Rng r(301 + trial);
        return weighted_total(g, mul(g, t, b), r);
      };
      CHECK(grad_check(via_mul, a, kStep) < kTol);
      auto via_scale = [&](Graph& g, const Tensor& t) {
        Rng r(302 + trial);
        return weighted_total(g, scale(g, t, -2.5), r);
      };
      CHECK(grad_check(via_scale, a, kStep) < kTol);
    }
    {
      // activations
      Tensor x = random_tensor(rng, {n}, -2.0, 2.0, true);
      for (ActivationKind kind : {ActivationKind::Sigmoid, ActivationKind::Tanh,
                                  ActivationKind::ScaledTanh}) {
        auto f = [&, kind](Graph& g, const Tensor& t) {
          Rng r(400 + trial);
          return weighted_total(g, activation(g, kind, t), r);
        };
        CHECK(grad_check(f, x, kStep) < kTol);
      }
    }
    {
      // conv2d_same: input and kernel sides.
      Tensor input = random_tensor(rng, {2, 3, 3}, -1.0, 1.0, true);
      Tensor kernel = random_tensor(rng, {2, 2, 3, 3}, -1.0, 1.0, true);
      auto via_input = [&, kernel](Graph& g, const Tensor& t) {
        Rng r(500 + trial);
        return weighted_total(g, conv2d_same(g, t, kernel), r);
      };
      CHECK(grad_check(via_input, input, kStep) < kTol);
      auto via_kernel = [&, input](Graph& g, const Tensor& t) {
        Rng r(501 + trial);
        return weighted_total(g, conv2d_same(g, input, t), r);
      };
      CHECK(grad_check(via_kernel, kernel, kStep) < kTol);
    }
    {
      // softmax_spatial and softmax
      Tensor z = random_tensor(rng, {3, 3}, -3.0, 3.0, true);
      auto via_map = [&](Graph& g, const Tensor& t) {
        Rng r(600 + trial);
        return weighted_total(g, softmax_spatial(g, t), r);
      };
      CHECK(grad_check(via_map, z, kStep) < kTol);
      Tensor logits = random_tensor(rng, {n}, -3.0, 3.0, true);
      auto via_vec = [&](Graph& g, const Tensor& t) {
        Rng r(601 + trial);
        return weighted_total(g, softmax(g, t), r);
      };
      CHECK(grad_check(via_vec, logits, kStep) < kTol);
    }
    {
      // channel_scale: both sides.
      Tensor I = random_tensor(rng, {3, 2, 2}, -1.0, 1.0, true);
      Tensor map = random_tensor(rng, {2, 2}, -1.0, 1.0, true);
      auto via_I = [&, map](Graph& g, const Tensor& t) {
        Rng r(700 + trial);
        return weighted_total(g, channel_scale(g, t, map), r);
      };
      CHECK(grad_check(via_I, I, kStep) < kTol);
      auto via_map = [&, I](Graph& g, const Tensor& t) {
        Rng r(701 + trial);
        return weighted_total(g, channel_scale(g, I, t), r);
      };
      CHECK(grad_check(via_map, map, kStep) < kTol);
    }
    {
      // reshape, embed, mean, pick_neg_log
      Tensor x = random_tensor(rng, {2, 3}, -1.0, 1.0, true);
      auto via_reshape = [&](Graph& g, const Tensor& t) {
        Rng r(800 + trial);
        return weighted_total(g, reshape(g, t, {3, 2}), r);
      };
      CHECK(grad_check(via_reshape, x, kStep) < kTol);

      Tensor table = random_tensor(rng, {4, n}, -1.0, 1.0, true);
      auto via_embed = [&](Graph& g, const Tensor& t) {
        Rng r(801 + trial);
        Tensor a = embed(g, t, 1);
        Tensor b = embed(g, t, 3);
        return weighted_total(g, add(g, a, b), r);
      };
      CHECK(grad_check(via_embed, table, kStep) < kTol);

      Tensor other = random_tensor(rng, {n}, -1.0, 1.0, false);
      auto via_mean = [&, other](Graph& g, const Tensor& t) {
        Rng r(802 + trial);
        return weighted_total(g, mean(g, {t, other, t}), r);
      };
      Tensor x1 = random_tensor(rng, {n}, -1.0, 1.0, true);
      CHECK(grad_check(via_mean, x1, kStep) < kTol);

      Tensor logits = random_tensor(rng, {4}, -2.0, 2.0, true);
      auto via_xent = [&](Graph& g, const Tensor& t) {
        return pick_neg_log(g, softmax(g, t), 2);
      };
      CHECK(grad_check(via_xent, logits, kStep) < kTol);
    }
  }
}

TEST_CASE("softmax plus negative log pick gives probs minus one-hot") {
  Rng rng(9);
  Tensor logits = random_tensor(rng, {6}, -2.0, 2.0, true);
  Graph g;
  Tensor probs = softmax(g, logits);
  Tensor loss = pick_neg_log(g, probs, 3);
  g.backward(loss);
  for (std::size_t i = 0; i < 6; ++i) {
    const double expected = probs.at(i) - (i == 3 ? 1.0 : 0.0);
    CHECK(logits.grad()(static_cast<Eigen::Index>(i)) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}
