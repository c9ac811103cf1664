#include <cmath>

#include "doctest.h"
#include "mvkt/attention.hpp"
#include "mvkt/errors.hpp"
#include "support/test_support.hpp"

using namespace mvkt;
using namespace mvkt::testing;

namespace {

// softmax(Q K^T / sqrt(d)) V written out row by row.
Tensor attention_oracle(const Tensor& q, const Tensor& k, const Tensor& v) {
  const std::size_t n = q.rows(), m = k.rows();
  Tensor out = Tensor::matrix(n, v.cols());
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> s(m);
    double mx = -1e300;
    for (std::size_t j = 0; j < m; ++j) {
      double dot = 0.0;
      for (std::size_t c = 0; c < q.cols(); ++c) dot += q(i, c) * k(j, c);
      s[j] = dot / std::sqrt(double(q.cols()));
      mx = std::max(mx, s[j]);
    }
    double z = 0.0;
    for (auto& x : s) z += (x = std::exp(x - mx));
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t c = 0; c < v.cols(); ++c) out(i, c) += s[j] / z * v(j, c);
  }
  return out;
}

Tensor attend(const Tensor& q, const Tensor& k, const Tensor& v) {
  Tape tape;
  return scaled_dot_attention(tape.constant(q), tape.constant(k), tape.constant(v)).value();
}

}  // namespace

TEST_CASE("scaled_dot_attention: examples") {
  Rng rng(1);
  Tensor v1 = random_tensor({1, 3}, rng);
  CHECK(max_abs_diff(attend(random_tensor({1, 2}, rng), random_tensor({1, 2}, rng), v1), v1) < 1e-15);

  Tensor k_same = Tensor::matrix(4, 2, 0.7);
  Tensor v = random_tensor({4, 3}, rng);
  Tensor out = attend(random_tensor({2, 2}, rng), k_same, v);
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (std::size_t j = 0; j < 4; ++j) mean += v(j, c) / 4.0;
    CHECK(out(0, c) == doctest::Approx(mean).epsilon(1e-13));
    CHECK(out(1, c) == doctest::Approx(mean).epsilon(1e-13));
  }

  for (int t = 0; t < 10; ++t) {
    Tensor q = random_tensor({3, 2}, rng), k = random_tensor({3, 2}, rng), vv = random_tensor({3, 2}, rng);
    CHECK(max_abs_diff(attend(q, k, vv), attention_oracle(q, k, vv)) < 1e-12);
  }
  CHECK_THROWS_AS(attend(random_tensor({2, 3}, rng), random_tensor({2, 2}, rng), v), DimensionError);
  CHECK_THROWS_AS(attend(random_tensor({2, 2}, rng), random_tensor({3, 2}, rng), v), DimensionError);
}

TEST_CASE("scaled_dot_attention: key mask restricts keys") {
  Rng rng(2);
  Tensor q = random_tensor({3, 2}, rng), k = random_tensor({3, 2}, rng), v = random_tensor({3, 2}, rng);
  BoolMatrix mask(3, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    mask.set(i, 0, true);
    mask.set(i, 2, true);
  }
  Tape tape;
  Tensor masked = scaled_dot_attention(tape.constant(q), tape.constant(k), tape.constant(v), &mask).value();
  Tensor k2 = Tensor::from_rows({{k(0, 0), k(0, 1)}, {k(2, 0), k(2, 1)}});
  Tensor v2 = Tensor::from_rows({{v(0, 0), v(0, 1)}, {v(2, 0), v(2, 1)}});
  CHECK(max_abs_diff(masked, attention_oracle(q, k2, v2)) < 1e-12);
}

TEST_CASE("self_attend: examples and gradient check") {
  Rng rng(3);
  AttentionParams p = AttentionParams::xavier(4, 3, rng);
  Tape tape;
  ParamBinding bind(tape, false);
  Tensor one = random_tensor({1, 4}, rng);
  CHECK(max_abs_diff(self_attend(tape.constant(one), p, bind).value(), naive_matmul(one, p.value)) < 1e-14);

  Tensor rep = random_tensor({1, 4}, rng);
  Tensor f = Tensor::matrix(3, 4);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t c = 0; c < 4; ++c) f(i, c) = rep(0, c);
  Tensor u = self_attend(tape.constant(f), p, bind).value();
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(u(0, c) == u(1, c));
    CHECK(u(1, c) == u(2, c));
  }

  Tensor x = random_tensor({5, 4}, rng);
  std::vector<Tensor*> params;
  p.visit("a", [&](const std::string&, Tensor& t) { params.push_back(&t); });
  CHECK(parameter_gradient_error(
            [&](Tape& t, ParamBinding& b) { return weighted_sum(self_attend(t.constant(x), p, b)); }, params) <
        1e-3);
  CHECK(gradient_error(
            [&](Tape& t, const std::vector<Var>& v) {
              ParamBinding b(t, false);
              return weighted_sum(self_attend(v[0], p, b));
            },
            {x}) < 1e-3);
}

TEST_CASE("cross_attend: per-pair loop oracle and structure") {
  Rng rng(4);
  const std::size_t n = 4, d = 3;
  std::vector<AttentionParams> params;
  std::vector<Tensor> u;
  for (int m = 0; m < 3; ++m) {
    params.push_back(AttentionParams::xavier(d, d, rng));
    u.push_back(random_tensor({n, d}, rng));
  }
  Tape tape;
  ParamBinding bind(tape, false);
  std::vector<Var> vars;
  for (const auto& t : u) vars.push_back(tape.constant(t));
  std::vector<Var> z = cross_attend(vars, params, bind);
  REQUIRE(z.size() == 3);
  for (std::size_t m = 0; m < 3; ++m) {
    CHECK(z[m].value().cols() == 2 * d);
    std::size_t block = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      if (j == m) continue;
      Tensor ref = attention_oracle(naive_matmul(u[m], params[m].query), naive_matmul(u[j], params[j].key),
                                    naive_matmul(u[j], params[j].value));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) CHECK(std::abs(z[m].value()(i, block * d + c) - ref(i, c)) < 1e-12);
      ++block;
    }
  }

  std::vector<Var> two{vars[0], vars[1]};
  std::vector<AttentionParams> p2{params[0], params[1]};
  std::vector<Var> z2 = cross_attend(two, p2, bind);
  CHECK(z2[0].value().cols() == d);
  CHECK(max_abs_diff(z2[0].value(), z2[1].value()) > 0.0);

  std::vector<Var> one{vars[0]};
  std::vector<AttentionParams> p1{params[0]};
  CHECK_THROWS_AS(cross_attend(one, p1, bind), DimensionError);
  std::vector<Var> ragged{vars[0], tape.constant(random_tensor({3, d}, rng))};
  CHECK_THROWS_AS(cross_attend(ragged, p2, bind), DimensionError);
}

TEST_CASE("cross_attend: identical-row source gives a replicated block") {
  Rng rng(5);
  std::vector<AttentionParams> params{AttentionParams::xavier(3, 2, rng), AttentionParams::xavier(3, 2, rng)};
  Tensor flat = Tensor::matrix(4, 3);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t c = 0; c < 3; ++c) flat(i, c) = 0.2 * double(c) + 0.1;
  Tape tape;
  ParamBinding bind(tape, false);
  std::vector<Var> z = cross_attend({tape.constant(random_tensor({4, 3}, rng)), tape.constant(flat)}, params, bind);
  for (std::size_t i = 1; i < 4; ++i)
    for (std::size_t c = 0; c < 2; ++c) CHECK(z[0].value()(i, c) == doctest::Approx(z[0].value()(0, c)).epsilon(1e-14));
}

TEST_CASE("cross_attend: sample permutation equivariance") {
  Rng rng(6);
  std::vector<AttentionParams> params{AttentionParams::xavier(3, 3, rng), AttentionParams::xavier(3, 3, rng)};
  Tensor a = random_tensor({5, 3}, rng), b = random_tensor({5, 3}, rng);
  const std::vector<std::size_t> perm{3, 1, 4, 0, 2};
  Tensor pa = Tensor::matrix(5, 3), pb = Tensor::matrix(5, 3);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t c = 0; c < 3; ++c) {
      pa(i, c) = a(perm[i], c);
      pb(i, c) = b(perm[i], c);
    }
  Tape tape;
  ParamBinding bind(tape, false);
  auto z = cross_attend({tape.constant(a), tape.constant(b)}, params, bind);
  auto pz = cross_attend({tape.constant(pa), tape.constant(pb)}, params, bind);
  for (std::size_t m = 0; m < 2; ++m)
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t c = 0; c < 3; ++c)
        CHECK(pz[m].value()(i, c) == doctest::Approx(z[m].value()(perm[i], c)).epsilon(1e-12));
}
