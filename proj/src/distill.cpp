#include "mvkt/distill.hpp"

namespace mvkt {

DistillParams DistillParams::xavier(std::size_t omics, std::size_t classes, std::size_t d_e,
                                    Rng& rng) {
  DistillParams p;
  for (std::size_t m = 0; m < omics; ++m) p.projections.push_back(xavier_uniform(classes, d_e, rng));
  p.scorer = xavier_uniform(2 * d_e, 1, rng);
  return p;
}

void DistillParams::visit(const std::string& prefix, const ParamVisitor& fn) {
  for (std::size_t m = 0; m < projections.size(); ++m)
    fn(prefix + ".proj" + std::to_string(m), projections[m]);
  fn(prefix + ".scorer", scorer);
}

Var edge_strength(Var z_src, Var z_dst, std::size_t src, std::size_t dst,
                  const DistillParams& params, ParamBinding& bind) {
  if (src >= params.projections.size() || dst >= params.projections.size()) {
    throw DimensionError("edge_strength: omics index out of range");
  }
  const Tensor& ps = params.projections[src];
  const Tensor& pd = params.projections[dst];
  if (z_src.value().cols() != ps.rows() || z_dst.value().cols() != pd.rows() ||
      z_src.value().rows() != z_dst.value().rows()) {
    throw DimensionError("edge_strength: logits " + shape_string(z_src.shape()) + " and " +
                         shape_string(z_dst.shape()) + " vs projections " +
                         shape_string(ps.shape()));
  }
  Var joint = concat_cols({matmul(z_src, bind(ps)), matmul(z_dst, bind(pd))});
  return sigmoid(matmul(joint, bind(params.scorer)));
}

Var pairwise_logit_loss(Var z_src, Var z_dst, bool symmetric) {
  if (z_src.shape() != z_dst.shape()) {
    throw DimensionError("pairwise_logit_loss: widths " + shape_string(z_src.shape()) + " and " +
                         shape_string(z_dst.shape()));
  }
  return row_l1_distance(symmetric ? z_src : detach(z_src), z_dst);
}

Var cd_loss(const std::vector<Var>& logits, const DistillParams& params, ParamBinding& bind,
            bool symmetric, std::vector<EdgeRecord>* edges) {
  if (logits.size() < 2) {
    throw DimensionError("cd_loss: distillation needs at least 2 omics, got " +
                         std::to_string(logits.size()));
  }
  std::vector<Var> terms;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    for (std::size_t j = 0; j < logits.size(); ++j) {
      if (j == k) continue;
      Var e = edge_strength(logits[j], logits[k], j, k, params, bind);
      if (edges) edges->push_back(EdgeRecord{j, k, e});
      terms.push_back(sum(mul(e, pairwise_logit_loss(logits[j], logits[k], symmetric))));
    }
  }
  Var total = terms.front();
  for (std::size_t t = 1; t < terms.size(); ++t) total = add(total, terms[t]);
  return total;
}

}  // namespace mvkt
