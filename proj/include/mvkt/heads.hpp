#pragma once

#include <optional>
#include <span>
#include <vector>

#include "mvkt/layers.hpp"

namespace mvkt {

struct LossWeights {
  double lambda1 = 1.0;
  double lambda2 = 0.005;
};

// Classification heads of the fine-tuned model.
struct HeadParams {
  std::vector<Mlp> auxiliary;   // per omics, F^m -> C
  std::vector<Linear> logits;   // per omics, Z^m -> C (distillation logits)
  Mlp final;                    // concat(Z^1..Z^M) -> C

  void visit(const std::string& prefix, const ParamVisitor& fn);
};

// sum over omics of the mean cross-entropy of the auxiliary prediction on `rows`.
Var auxiliary_loss(const std::vector<Var>& encoded, std::span<const std::size_t> rows,
                   std::span<const int> labels, const std::vector<Mlp>& heads, ParamBinding& bind);

Var omics_logits(Var fused, const Linear& head, ParamBinding& bind);

struct FinalOutput {
  Var loss;    // mean cross-entropy over `rows`
  Var logits;  // all samples, n x C
  std::vector<int> predictions;  // argmax per sample
};

FinalOutput final_loss(const std::vector<Var>& fused, std::span<const std::size_t> rows,
                       std::span<const int> labels, const Mlp& head, ParamBinding& bind);

// lambda1 * aux + lambda2 * cd + final; `cd` may be absent (no distillation).
// Throws NumericalError when any component is non-finite.
Var total_loss(Var aux, std::optional<Var> cd, Var final, const LossWeights& weights);

std::vector<int> argmax_rows(const Tensor& logits);
Tensor softmax_rows(const Tensor& logits);

}  // namespace mvkt
