#pragma once

#include <string>
#include <vector>

#include "mvkt/gat.hpp"
#include "mvkt/random.hpp"
#include "mvkt/tensor.hpp"

namespace mvkt {

// Adaptive cross-omics distillation parameters: a per-omics projection of the
// C logits to d_e features and one scorer shared by every ordered pair.
struct DistillParams {
  std::vector<Tensor> projections;  // per omics, C x d_e
  Tensor scorer;                    // 2 d_e x 1, source half first

  std::size_t embed_dim() const { return scorer.rows() / 2; }

  static DistillParams xavier(std::size_t omics, std::size_t classes, std::size_t d_e, Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

// e_i^{dst<-src} = sigmoid([z_src P_src, z_dst P_dst] . scorer), n x 1.
Var edge_strength(Var z_src, Var z_dst, std::size_t src, std::size_t dst,
                  const DistillParams& params, ParamBinding& bind);

// ||z_src,i - z_dst,i||_1 per row, n x 1. Unless `symmetric`, the source is
// detached so the gradient moves only the target.
Var pairwise_logit_loss(Var z_src, Var z_dst, bool symmetric = false);

struct EdgeRecord {
  std::size_t src = 0;
  std::size_t dst = 0;
  Var strength;  // n x 1
};

// sum_i sum_k sum_{j != k} e_i^{k<-j} * l_i^{k<-j}. Requires >= 2 omics.
// Per-edge strengths are appended to `edges` when given.
Var cd_loss(const std::vector<Var>& logits, const DistillParams& params, ParamBinding& bind,
            bool symmetric = false, std::vector<EdgeRecord>* edges = nullptr);

}  // namespace mvkt
