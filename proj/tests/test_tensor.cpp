#include <cmath>
#include <cstring>
#include <limits>

#include "doctest.h"
#include "mvkt/errors.hpp"
#include "mvkt/tensor.hpp"
#include "support/test_support.hpp"

using namespace mvkt;
using namespace mvkt::testing;

TEST_CASE("matmul: identity, scalar and naive oracle") {
  Rng rng(1);
  Tensor a = random_tensor({3, 3}, rng);
  Tape tape;
  CHECK(max_abs_diff(matmul(tape.constant(Tensor::identity(3)), tape.constant(a)).value(), a) == 0.0);

  Var six = matmul(tape.constant(Tensor::from_rows({{2}})), tape.constant(Tensor::from_rows({{3}})));
  CHECK(six.value()(0, 0) == 6.0);

  for (int trial = 0; trial < 20; ++trial) {
    Tensor x = random_tensor({3, 4}, rng), y = random_tensor({4, 2}, rng);
    CHECK(max_abs_diff(kernels::matmul(x, y), naive_matmul(x, y)) < 1e-12);
    CHECK(max_abs_diff(kernels::matmul_nt(x, kernels::transpose(y)), naive_matmul(x, y)) < 1e-12);
    CHECK(max_abs_diff(kernels::matmul_tn(kernels::transpose(x), y), naive_matmul(x, y)) < 1e-12);
  }
}

TEST_CASE("matmul: large product matches oracle and is bit-stable") {
  Rng rng(2);
  Tensor x = random_tensor({300, 150}, rng), y = random_tensor({150, 120}, rng);
  Tensor c1 = kernels::matmul(x, y);
  Tensor c2 = kernels::matmul(x, y);
  CHECK(max_abs_diff(c1, naive_matmul(x, y)) < 1e-10);
  CHECK(std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(double)) == 0);
}

TEST_CASE("matmul: shape mismatch names both shapes") {
  Tape tape;
  Var a = tape.constant(Tensor::matrix(2, 3));
  Var b = tape.constant(Tensor::matrix(2, 3));
  try {
    matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
  }
}

TEST_CASE("row_softmax: examples") {
  Tape tape;
  Var s = row_softmax(tape.constant(Tensor::from_rows({{0, 0}, {0, std::log(3.0)}})));
  CHECK(s.value()(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.value()(1, 0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(s.value()(1, 1) == doctest::Approx(0.75).epsilon(1e-14));

  Rng rng(3);
  Tensor x = random_tensor({4, 5}, rng);
  Tensor shifted = x;
  for (std::size_t j = 0; j < 5; ++j) shifted(2, j) += 123.5;
  Tensor a = row_softmax(tape.constant(x)).value();
  Tensor b = row_softmax(tape.constant(shifted)).value();
  CHECK(max_abs_diff(a, b) < 1e-14);

  Tensor huge = Tensor::from_rows({{1000, 1001}});
  CHECK(row_softmax(tape.constant(huge)).value().all_finite());
}

TEST_CASE("row_softmax: mask zeros entries and rejects a fully masked row") {
  Tape tape;
  BoolMatrix mask(2, 3, true);
  mask.set(0, 1, false);
  Var s = row_softmax(tape.constant(Tensor::from_rows({{1, 5, 1}, {0, 0, 0}})), &mask);
  CHECK(s.value()(0, 1) == 0.0);
  CHECK(s.value()(0, 0) == doctest::Approx(0.5));
  CHECK(s.value()(1, 2) == doctest::Approx(1.0 / 3));

  BoolMatrix dead(1, 2, false);
  CHECK_THROWS_AS(row_softmax(tape.constant(Tensor::matrix(1, 2)), &dead), DomainError);
}

TEST_CASE("leaky_relu, sigmoid, elu: pointwise values") {
  Tape tape;
  Tensor x = Tensor::from_rows({{1.0, -1.0, 0.0}});
  Tensor l = leaky_relu(tape.constant(x), 0.2).value();
  CHECK(l[0] == 1.0);
  CHECK(l[1] == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK_THROWS_AS(leaky_relu(tape.constant(x), 1.5), DomainError);

  Tensor s = sigmoid(tape.constant(Tensor::from_rows({{0.0, 50.0, -50.0}}))).value();
  CHECK(s[0] == 0.5);
  CHECK(std::abs(s[1] - 1.0) < 1e-9);
  CHECK(s[2] > 0.0);

  Tensor e = elu(tape.constant(Tensor::from_rows({{2.0, -1.0}}))).value();
  CHECK(e[0] == 2.0);
  CHECK(e[1] == doctest::Approx(std::exp(-1.0) - 1.0));
}

TEST_CASE("sigmoid derivative equals s(1 - s)") {
  Tape tape;
  Tensor x = Tensor::from_rows({{-1.3, 0.2, 2.5}});
  Var v = tape.variable(x);
  Var s = sigmoid(v);
  tape.backward(sum(s));
  for (std::size_t i = 0; i < 3; ++i) {
    const double y = s.value()[i];
    CHECK(tape.grad(v)[i] == doctest::Approx(y * (1.0 - y)).epsilon(1e-14));
  }
}

TEST_CASE("l1_distance: examples and loop oracle") {
  Tape tape;
  Tensor a = Tensor::from_rows({{1, 0}}), b = Tensor::from_rows({{0, 1}});
  CHECK(l1_distance(tape.constant(a), tape.constant(a)).value().item() == 0.0);
  CHECK(l1_distance(tape.constant(a), tape.constant(b)).value().item() == 2.0);
  Rng rng(4);
  Tensor x = random_tensor({3, 5}, rng), y = random_tensor({3, 5}, rng);
  double oracle = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) oracle += std::abs(x[i] - y[i]);
  CHECK(l1_distance(tape.constant(x), tape.constant(y)).value().item() == doctest::Approx(oracle).epsilon(1e-14));
  Tensor rows = row_l1_distance(tape.constant(x), tape.constant(y)).value();
  for (std::size_t r = 0; r < 3; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 5; ++c) s += std::abs(x(r, c) - y(r, c));
    CHECK(rows(r, 0) == doctest::Approx(s).epsilon(1e-14));
  }
  CHECK_THROWS_AS(l1_distance(tape.constant(x), tape.constant(a)), DimensionError);
}

TEST_CASE("l1_distance: subgradient at ties is zero") {
  Tape tape;
  Var a = tape.variable(Tensor::from_rows({{1.0, 2.0}}));
  Var b = tape.variable(Tensor::from_rows({{1.0, 0.0}}));
  tape.backward(l1_distance(a, b));
  CHECK(tape.grad(a)[0] == 0.0);
  CHECK(tape.grad(a)[1] == 1.0);
  CHECK(tape.grad(b)[1] == -1.0);
}

TEST_CASE("cross_entropy_logits: examples") {
  Tape tape;
  const std::vector<int> labels{0, 2, 1};
  CHECK(cross_entropy_logits(tape.constant(Tensor::matrix(3, 4)), labels).value().item() ==
        doctest::Approx(std::log(4.0)).epsilon(1e-15));
  Tensor sat = Tensor::matrix(3, 4);
  for (std::size_t i = 0; i < 3; ++i) sat(i, static_cast<std::size_t>(labels[i])) = 50.0;
  CHECK(cross_entropy_logits(tape.constant(sat), labels).value().item() < 1e-9);
  const std::vector<int> bad{0, 4, 1};
  CHECK_THROWS_AS(cross_entropy_logits(tape.constant(sat), bad), DomainError);

  Rng rng(5);
  Tensor logits = random_tensor({3, 4}, rng);
  Var v = tape.variable(logits);
  tape.backward(cross_entropy_logits(v, labels));
  for (std::size_t i = 0; i < 3; ++i) {
    double z = 0.0;
    for (std::size_t c = 0; c < 4; ++c) z += std::exp(logits(i, c));
    for (std::size_t c = 0; c < 4; ++c) {
      const double expected = (std::exp(logits(i, c)) / z - (int(c) == labels[i] ? 1.0 : 0.0)) / 3.0;
      CHECK(tape.grad(v)(i, c) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("backward: analytic cases and error handling") {
  Tape tape;
  Tensor x = Tensor::from_rows({{1.5}, {-2.0}, {0.25}});
  Var w = tape.variable(Tensor::from_rows({{0.3, -0.7, 1.1}}));
  Var p = tape.variable(Tensor::from_rows({{4.0}}));
  Var loss = sum(matmul(w, tape.constant(x)));
  tape.backward(loss);
  for (std::size_t i = 0; i < 3; ++i) CHECK(tape.grad(w)[i] == x[i]);
  CHECK_FALSE(tape.has_grad(p));

  Tensor param = Tensor::from_rows({{1.0, 2.0}});
  Tensor unused = Tensor::from_rows({{3.0}});
  Tape t2;
  ParamBinding bind(t2);
  bind(unused);
  t2.backward(sum(bind(param)));
  CHECK(bind.gradient(unused)[0] == 0.0);
  CHECK(bind.gradient(param)[1] == 1.0);

  CHECK_THROWS_AS(tape.backward(w), DimensionError);
}

TEST_CASE("backward: constants receive no gradient") {
  Tape tape;
  Var c = tape.constant(Tensor::from_rows({{2.0}}));
  Var v = tape.variable(Tensor::from_rows({{3.0}}));
  tape.backward(sum(mul(c, v)));
  CHECK_FALSE(tape.has_grad(c));
  CHECK(tape.grad(v)[0] == 2.0);
}

TEST_CASE("backward: gradients accumulate over shared inputs") {
  Tape tape;
  Var v = tape.variable(Tensor::from_rows({{3.0}}));
  tape.backward(sum(add(mul(v, v), scale(v, 2.0))));
  CHECK(tape.grad(v)[0] == 8.0);
}

TEST_CASE("tape linearity: grad of a sum equals sum of grads") {
  Rng rng(6);
  Tensor x = random_tensor({3, 4}, rng);
  auto loss_a = [](Var v) { return sum(sigmoid(v)); };
  auto loss_b = [](Var v) { return sum(mul(v, v)); };
  Tape t1, t2, t3;
  Var v1 = t1.variable(x), v2 = t2.variable(x), v3 = t3.variable(x);
  t1.backward(loss_a(v1));
  t2.backward(loss_b(v2));
  t3.backward(add(loss_a(v3), loss_b(v3)));
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(t3.grad(v3)[i] == doctest::Approx(t1.grad(v1)[i] + t2.grad(v2)[i]).epsilon(1e-14));
}

TEST_CASE("determinism: identical inputs give bit-identical values and gradients") {
  auto run = [] {
    Rng rng(7);
    Tape tape;
    Var a = tape.variable(random_tensor({5, 6}, rng));
    Var b = tape.variable(random_tensor({6, 3}, rng));
    Var loss = sum(row_softmax(elu(matmul(a, b))));
    tape.backward(sum(mul(row_softmax(matmul(a, b)), row_softmax(matmul(a, b)))));
    std::vector<double> out(tape.grad(a).values().begin(), tape.grad(a).values().end());
    out.push_back(loss.value().item());
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("gradient check: every differentiable op") {
  Rng rng(8);
  constexpr double kTol = 1e-4;
  auto T = [&](Shape s) { return random_tensor(s, rng); };

  CHECK(gradient_error([](Tape&, const std::vector<Var>& v) { return weighted_sum(matmul(v[0], v[1])); },
                       {T({3, 4}), T({4, 2})}) < kTol);
  CHECK(gradient_error([](Tape&, const std::vector<Var>& v) { return weighted_sum(transpose(v[0])); },
                       {T({3, 4})}) < kTol);
  CHECK(gradient_error([](Tape&, const std::vector<Var>& v) { return weighted_sum(add(v[0], v[1])); },
                       {T({2, 3}), T({2, 3})}) < kTol);
  CHECK(gradient_error([](Tape&, const std::vector<Var>& v) { return weighted_sum(sub(v[0], v[1])); },
                       {T({2, 3}), T({2, 3})}) < kTol);
  CHECK(gradient_error([](Tape&, const std::vector<Var>& v) { return weighted_sum(mul(v[0], v[1])); },
                       {T({2, 3}), T({2, 3})}) < kTol);
  CHECK(gradient_error([](Tape&, const std::vector<Var>& v) { return weighted_sum(scale(v[0], -1.7)); },
                       {T({2, 3})}) < kTol);
  CHECK(gradient_error([](Tape&, const std::vector<Var>& v) { return weighted_sum(add_row(v[0], v[1])); },
                       {T({4, 3}), T({1, 3})}) < kTol);
  CHECK(gradient_error([](Tape&, const std::vector<Var>& v) { return weighted_sum(outer_add(v[0], v[1])); },
                       {T({4, 1}), T({1, 3})}) < kTol);
  CHECK(gradient_error([](Tape&, const std::vector<Var>& v) { return weighted_sum(leaky_relu(v[0], 0.2)); },
                       {T({3, 4})}) < kTol);
  CHECK(gradient_error([](Tape&, const std::vector<Var>& v) { return weighted_sum(elu(v[0])); },
                       {T({3, 4})}) < kTol);
  CHECK(gradient_error([](Tape&, const std::vector<Var>& v) { return weighted_sum(sigmoid(v[0])); },
                       {T({3, 4})}) < kTol);
  CHECK(gradient_error([](Tape&, const std::vector<Var>& v) { return weighted_sum(row_softmax(v[0])); },
                       {T({3, 4})}) < kTol);
  BoolMatrix mask(3, 4, true);
  mask.set(0, 2, false);
  mask.set(2, 0, false);
  mask.set(2, 3, false);
  CHECK(gradient_error([&](Tape&, const std::vector<Var>& v) { return weighted_sum(row_softmax(v[0], &mask)); },
                       {T({3, 4})}) < kTol);
  CHECK(gradient_error([&](Tape&, const std::vector<Var>& v) { return weighted_sum(row_logsumexp(v[0], &mask)); },
                       {T({3, 4})}) < kTol);
  CHECK(gradient_error([](Tape&, const std::vector<Var>& v) { return weighted_sum(row_l2_normalize(v[0])); },
                       {T({3, 4})}) < kTol);
  CHECK(gradient_error([](Tape&, const std::vector<Var>& v) { return weighted_sum(diagonal(v[0])); },
                       {T({3, 3})}) < kTol);
  CHECK(gradient_error([](Tape&, const std::vector<Var>& v) { return weighted_sum(slice_cols(v[0], 1, 2)); },
                       {T({3, 4})}) < kTol);
  CHECK(gradient_error([](Tape&, const std::vector<Var>& v) { return weighted_sum(concat_cols({v[0], v[1]})); },
                       {T({3, 2}), T({3, 3})}) < kTol);
  const std::vector<std::size_t> rows{2, 0, 2};
  CHECK(gradient_error([&](Tape&, const std::vector<Var>& v) { return weighted_sum(select_rows(v[0], rows)); },
                       {T({3, 2})}) < kTol);
  CHECK(gradient_error([](Tape&, const std::vector<Var>& v) { return sum(v[0]); }, {T({3, 2})}) < kTol);
  CHECK(gradient_error([](Tape&, const std::vector<Var>& v) { return mean(v[0]); }, {T({3, 2})}) < kTol);
  CHECK(gradient_error([](Tape&, const std::vector<Var>& v) { return l1_distance(v[0], v[1]); },
                       {T({3, 2}), T({3, 2})}) < kTol);
  CHECK(gradient_error([](Tape&, const std::vector<Var>& v) { return weighted_sum(row_l1_distance(v[0], v[1])); },
                       {T({3, 2}), T({3, 2})}) < kTol);
  const std::vector<int> labels{1, 0, 2};
  CHECK(gradient_error([&](Tape&, const std::vector<Var>& v) { return cross_entropy_logits(v[0], labels); },
                       {T({3, 3})}) < kTol);
}

TEST_CASE("detach blocks gradient flow") {
  Tape tape;
  Var a = tape.variable(Tensor::from_rows({{2.0}}));
  Var b = tape.variable(Tensor::from_rows({{5.0}}));
  tape.backward(sum(mul(detach(a), b)));
  CHECK((!tape.has_grad(a) || tape.grad(a)[0] == 0.0));
  CHECK(tape.grad(b)[0] == 2.0);
}
