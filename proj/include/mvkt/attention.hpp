#pragma once

#include <string>
#include <vector>

#include "mvkt/gat.hpp"
#include "mvkt/random.hpp"
#include "mvkt/tensor.hpp"

namespace mvkt {

// Query/key/value maps of one omics, each d_in x d_attn.
struct AttentionParams {
  Tensor query;
  Tensor key;
  Tensor value;

  std::size_t input_dim() const { return query.rows(); }
  std::size_t attn_dim() const { return query.cols(); }

  static AttentionParams xavier(std::size_t d_in, std::size_t d_attn, Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

// row_softmax(Q K^T / sqrt(width(Q))) V. Attention runs over rows (samples).
// `key_mask`, when given, is n_q x n_k and restricts which keys each query sees.
Var scaled_dot_attention(Var q, Var k, Var v, const BoolMatrix* key_mask = nullptr);

// U = Attention(F Wq, F Wk, F Wv).
Var self_attend(Var features, const AttentionParams& params, ParamBinding& bind,
                const BoolMatrix* key_mask = nullptr);

// Z^m = concat over j != m (ascending) of Attention(U^m Wq^m, U^j Wk^j, U^j Wv^j).
// Requires at least two omics.
std::vector<Var> cross_attend(const std::vector<Var>& attended,
                              const std::vector<AttentionParams>& params, ParamBinding& bind,
                              const BoolMatrix* key_mask = nullptr);

}  // namespace mvkt
