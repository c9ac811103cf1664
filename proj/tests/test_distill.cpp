#include <cmath>

#include "doctest.h"
#include "mvkt/distill.hpp"
#include "mvkt/errors.hpp"
#include "support/oracles.hpp"
#include "support/test_support.hpp"

using namespace mvkt;
using namespace mvkt::testing;

namespace {

double cd_value(const std::vector<Tensor>& z, const DistillParams& p) {
  Tape tape;
  ParamBinding bind(tape, false);
  std::vector<Var> vars;
  for (const auto& t : z) vars.push_back(tape.constant(t));
  return cd_loss(vars, p, bind).value().item();
}

}  // namespace

TEST_CASE("edge_strength: zero scorer, range and direction") {
  Rng rng(1);
  DistillParams p = DistillParams::xavier(2, 3, 4, rng);
  Tape tape;
  ParamBinding bind(tape, false);
  Var z0 = tape.constant(random_tensor({5, 3}, rng)), z1 = tape.constant(random_tensor({5, 3}, rng));
  DistillParams zero = p;
  zero.scorer.fill(0.0);
  Tensor half = edge_strength(z0, z1, 0, 1, zero, bind).value();
  for (double v : half.values()) CHECK(v == 0.5);

  for (int t = 0; t < 20; ++t) {
    DistillParams q = DistillParams::xavier(2, 3, 4, rng);
    Var a = tape.constant(random_tensor({3, 3}, rng, -5, 5)), b = tape.constant(random_tensor({3, 3}, rng, -5, 5));
    for (double v : edge_strength(a, b, 0, 1, q, bind).value().values()) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
  Tensor fwd = edge_strength(z0, z1, 0, 1, p, bind).value();
  Tensor rev = edge_strength(z1, z0, 1, 0, p, bind).value();
  CHECK(max_abs_diff(fwd, rev) > 1e-6);
}

TEST_CASE("pairwise_logit_loss: examples and loop oracle") {
  Tape tape;
  Var a = tape.constant(Tensor::from_rows({{1, 0}})), b = tape.constant(Tensor::from_rows({{0, 1}}));
  CHECK(pairwise_logit_loss(a, a).value()(0, 0) == 0.0);
  CHECK(pairwise_logit_loss(a, b).value()(0, 0) == 2.0);
  Rng rng(2);
  Tensor x = random_tensor({4, 3}, rng), y = random_tensor({4, 3}, rng);
  Tensor l = pairwise_logit_loss(tape.constant(x), tape.constant(y)).value();
  for (std::size_t i = 0; i < 4; ++i) {
    double s = 0.0;
    for (std::size_t q = 0; q < 3; ++q) s += std::abs(x(i, q) - y(i, q));
    CHECK(l(i, 0) == doctest::Approx(s).epsilon(1e-15));
  }
  CHECK_THROWS_AS(pairwise_logit_loss(a, tape.constant(x)), DimensionError);
}

TEST_CASE("pairwise_logit_loss: gradient reaches only the target unless symmetric") {
  Tape tape;
  Var src = tape.variable(Tensor::from_rows({{1.0, -1.0}}));
  Var dst = tape.variable(Tensor::from_rows({{0.0, 0.5}}));
  tape.backward(sum(pairwise_logit_loss(src, dst)));
  CHECK((!tape.has_grad(src) || tape.grad(src)[0] == 0.0));
  CHECK(tape.grad(dst)[0] == -1.0);
  CHECK(tape.grad(dst)[1] == 1.0);

  Tape t2;
  Var s2 = t2.variable(Tensor::from_rows({{1.0, -1.0}}));
  Var d2 = t2.variable(Tensor::from_rows({{0.0, 0.5}}));
  t2.backward(sum(pairwise_logit_loss(s2, d2, true)));
  CHECK(t2.grad(s2)[0] == 1.0);
}

TEST_CASE("cd_loss: hand value 2.0 with a zero scorer") {
  Rng rng(3);
  DistillParams p = DistillParams::xavier(2, 2, 16, rng);
  p.scorer.fill(0.0);
  std::vector<Tensor> z{Tensor::from_rows({{1, 0}}), Tensor::from_rows({{0, 1}})};
  CHECK(std::abs(cd_value(z, p) - 2.0) < 1e-10);
  CHECK(std::abs(cd_oracle(z, p) - 2.0) < 1e-10);
}

TEST_CASE("cd_loss: triple-loop oracle for M in {2,3}, n in {1,2}") {
  Rng rng(4);
  for (std::size_t m : {2u, 3u}) {
    for (std::size_t n : {1u, 2u}) {
      for (int t = 0; t < 10; ++t) {
        DistillParams p = DistillParams::xavier(m, 3, 5, rng);
        std::vector<Tensor> z;
        for (std::size_t k = 0; k < m; ++k) z.push_back(random_tensor({n, 3}, rng));
        CHECK(std::abs(cd_value(z, p) - cd_oracle(z, p)) < 1e-10);
        CHECK(cd_value(z, p) >= 0.0);
      }
    }
  }
}

TEST_CASE("cd_loss: zero iff logits agree, and M < 2 rejected") {
  Rng rng(5);
  DistillParams p = DistillParams::xavier(3, 2, 4, rng);
  Tensor same = random_tensor({3, 2}, rng);
  CHECK(cd_value({same, same, same}, p) == 0.0);
  Tensor other = same;
  other(1, 1) += 0.1;
  CHECK(cd_value({same, other, same}, p) > 0.0);
  CHECK_THROWS_AS(cd_value({same}, p), DimensionError);
}

TEST_CASE("cd_loss: a gradient step on the target pulls it toward a frozen source") {
  Rng rng(6);
  DistillParams p = DistillParams::xavier(2, 3, 4, rng);
  Tensor src = random_tensor({2, 3}, rng);
  Tensor dst = random_tensor({2, 3}, rng);
  auto gap = [&](const Tensor& d) {
    double s = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) s += std::abs(src[i] - d[i]);
    return s;
  };
  Tape tape;
  ParamBinding bind(tape, false);
  Var vs = tape.constant(src);
  Var vd = tape.variable(dst);
  std::vector<EdgeRecord> edges;
  Var loss = cd_loss({vs, vd}, p, bind, false, &edges);
  CHECK(edges.size() == 2);
  tape.backward(loss);
  Tensor stepped = dst;
  for (std::size_t i = 0; i < dst.size(); ++i) stepped[i] -= 0.01 * tape.grad(vd)[i];
  CHECK(gap(stepped) < gap(dst));
}

TEST_CASE("cd_loss: gradient check over logits and parameters") {
  Rng rng(7);
  DistillParams p = DistillParams::xavier(3, 3, 4, rng);
  std::vector<Tensor> z;
  for (int k = 0; k < 3; ++k) z.push_back(random_tensor({2, 3}, rng));
  // With symmetric gradients the analytic derivative is the full derivative.
  CHECK(gradient_error(
            [&](Tape& t, const std::vector<Var>& v) {
              ParamBinding b(t, false);
              return cd_loss(v, p, b, true);
            },
            z) < 1e-4);
  std::vector<Tensor*> params;
  p.visit("d", [&](const std::string&, Tensor& t) { params.push_back(&t); });
  CHECK(parameter_gradient_error(
            [&](Tape& t, ParamBinding& b) {
              std::vector<Var> vars;
              for (const auto& x : z) vars.push_back(t.constant(x));
              return cd_loss(vars, p, b);
            },
            params) < 1e-4);
}
