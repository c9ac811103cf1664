#include "mvkt/heads.hpp"

#include <cmath>

namespace mvkt {

void HeadParams::visit(const std::string& prefix, const ParamVisitor& fn) {
  for (std::size_t m = 0; m < auxiliary.size(); ++m)
    auxiliary[m].visit(prefix + ".aux" + std::to_string(m), fn);
  for (std::size_t m = 0; m < logits.size(); ++m)
    logits[m].visit(prefix + ".logits" + std::to_string(m), fn);
  final.visit(prefix + ".final", fn);
}

Var auxiliary_loss(const std::vector<Var>& encoded, std::span<const std::size_t> rows,
                   std::span<const int> labels, const std::vector<Mlp>& heads,
                   ParamBinding& bind) {
  if (rows.empty()) throw DomainError("auxiliary_loss: empty training set");
  if (encoded.empty() || encoded.size() != heads.size()) {
    throw DimensionError("auxiliary_loss: " + std::to_string(encoded.size()) + " omics, " +
                         std::to_string(heads.size()) + " heads");
  }
  std::optional<Var> total;
  for (std::size_t m = 0; m < encoded.size(); ++m) {
    Var ce = cross_entropy_logits(heads[m](select_rows(encoded[m], rows), bind), labels);
    total = total ? add(*total, ce) : ce;
  }
  return *total;
}

Var omics_logits(Var fused, const Linear& head, ParamBinding& bind) { return head(fused, bind); }

FinalOutput final_loss(const std::vector<Var>& fused, std::span<const std::size_t> rows,
                       std::span<const int> labels, const Mlp& head, ParamBinding& bind) {
  if (fused.empty()) throw DimensionError("final_loss: no omics");
  if (rows.empty()) throw DomainError("final_loss: empty training set");
  Var joint = fused.size() == 1 ? fused.front() : concat_cols(fused);
  Var logits = head(joint, bind);
  Var loss = cross_entropy_logits(select_rows(logits, rows), labels);
  return FinalOutput{loss, logits, argmax_rows(logits.value())};
}

Var total_loss(Var aux, std::optional<Var> cd, Var final, const LossWeights& weights) {
  const auto check = [](Var v, const char* what) {
    if (v.value().size() != 1) throw DimensionError(std::string("total_loss: ") + what + " is not a scalar");
    if (!std::isfinite(v.value().item()))
      throw NumericalError(std::string("total_loss: non-finite ") + what);
  };
  check(aux, "auxiliary loss");
  check(final, "final loss");
  Var total = add(scale(aux, weights.lambda1), final);
  if (cd) {
    check(*cd, "distillation loss");
    total = add(total, scale(*cd, weights.lambda2));
  }
  return total;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  std::vector<int> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.cols(); ++j)
      if (logits(i, j) > logits(i, best)) best = j;
    out[i] = static_cast<int>(best);
  }
  return out;
}

Tensor softmax_rows(const Tensor& logits) {
  Tensor p = logits;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double mx = p(i, 0);
    for (std::size_t j = 1; j < p.cols(); ++j) mx = std::max(mx, p(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < p.cols(); ++j) z += (p(i, j) = std::exp(p(i, j) - mx));
    for (std::size_t j = 0; j < p.cols(); ++j) p(i, j) /= z;
  }
  return p;
}

}  // namespace mvkt
