#include "mvkt/layers.hpp"

namespace mvkt {

Linear Linear::xavier(std::size_t d_in, std::size_t d_out, Rng& rng) {
  return Linear{xavier_uniform(d_in, d_out, rng), Tensor::matrix(1, d_out)};
}

Linear Linear::zeros(std::size_t d_in, std::size_t d_out) {
  return Linear{Tensor::matrix(d_in, d_out), Tensor::matrix(1, d_out)};
}

Var Linear::operator()(Var x, ParamBinding& bind) const {
  if (x.value().rank() != 2 || x.value().cols() != input_dim()) {
    throw DimensionError("linear: input " + shape_string(x.shape()) + " vs weight " +
                         shape_string(weight.shape()));
  }
  return add_row(matmul(x, bind(weight)), bind(bias));
}

void Linear::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".weight", weight);
  fn(prefix + ".bias", bias);
}

Mlp Mlp::xavier(std::size_t d_in, std::size_t d_hidden, std::size_t d_out, Rng& rng) {
  Mlp m;
  m.hidden = Linear::xavier(d_in, d_hidden, rng);
  m.output = Linear::xavier(d_hidden, d_out, rng);
  return m;
}

Var Mlp::operator()(Var x, ParamBinding& bind) const { return output(elu(hidden(x, bind)), bind); }

void Mlp::visit(const std::string& prefix, const ParamVisitor& fn) {
  hidden.visit(prefix + ".hidden", fn);
  output.visit(prefix + ".output", fn);
}

}  // namespace mvkt
