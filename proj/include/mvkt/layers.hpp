#pragma once

#include <string>

#include "mvkt/gat.hpp"
#include "mvkt/random.hpp"
#include "mvkt/tensor.hpp"

namespace mvkt {

// y = x W + b with W (d_in x d_out), b (1 x d_out).
struct Linear {
  Tensor weight;
  Tensor bias;

  std::size_t input_dim() const { return weight.rows(); }
  std::size_t output_dim() const { return weight.cols(); }

  static Linear xavier(std::size_t d_in, std::size_t d_out, Rng& rng);
  static Linear zeros(std::size_t d_in, std::size_t d_out);
  Var operator()(Var x, ParamBinding& bind) const;
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

// Two linear layers with ELU in between.
struct Mlp {
  Linear hidden;
  Linear output;

  static Mlp xavier(std::size_t d_in, std::size_t d_hidden, std::size_t d_out, Rng& rng);
  Var operator()(Var x, ParamBinding& bind) const;
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

}  // namespace mvkt
