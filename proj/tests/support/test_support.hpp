#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "mvkt/random.hpp"
#include "mvkt/tensor.hpp"

namespace mvkt::testing {

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(shape);
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Largest elementwise relative error between analytic and central-difference
// gradients of a scalar function of several tensors.
using ScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

inline double gradient_error(const ScalarFn& fn, std::vector<Tensor> inputs, double h = 1e-5) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.variable(t));
    Var loss = fn(tape, vars);
    tape.backward(loss);
    for (const auto& v : vars) analytic.push_back(tape.has_grad(v) ? tape.grad(v) : Tensor(v.shape()));
  }
  auto eval = [&]() {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.constant(t));
    return fn(tape, vars).value().item();
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t e = 0; e < inputs[k].size(); ++e) {
      const double saved = inputs[k][e];
      inputs[k][e] = saved + h;
      const double up = eval();
      inputs[k][e] = saved - h;
      const double down = eval();
      inputs[k][e] = saved;
      worst = std::max(worst, relative_error(analytic[k][e], (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

// Same check for parameters held outside the tape, bound through ParamBinding.
using BoundFn = std::function<Var(Tape&, ParamBinding&)>;

inline double parameter_gradient_error(const BoundFn& fn, const std::vector<Tensor*>& params,
                                       double h = 1e-5) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    ParamBinding bind(tape);
    Var loss = fn(tape, bind);
    tape.backward(loss);
    for (const Tensor* p : params) analytic.push_back(bind.gradient(*p));
  }
  auto eval = [&]() {
    Tape tape;
    ParamBinding bind(tape, false);
    return fn(tape, bind).value().item();
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    for (std::size_t e = 0; e < p.size(); ++e) {
      const double saved = p[e];
      p[e] = saved + h;
      const double up = eval();
      p[e] = saved - h;
      const double down = eval();
      p[e] = saved;
      worst = std::max(worst, relative_error(analytic[k][e], (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

// Reduces a tensor-valued output to a scalar with fixed random weights so every
// output element contributes to the gradient.
inline Var weighted_sum(Var out, std::uint64_t seed = 99) {
  Rng rng(seed);
  Tensor w = random_tensor(out.shape(), rng, -1.0, 1.0);
  return sum(mul(out, out.tape->constant(std::move(w))));
}

inline Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  Tensor c = Tensor::matrix(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace mvkt::testing
