#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mvkt/graph.hpp"
#include "mvkt/random.hpp"
#include "mvkt/tensor.hpp"

namespace mvkt {

using ParamVisitor = std::function<void(const std::string& name, Tensor& param)>;

// One GAT layer. Head h projects with weights[h] (d_in x d_head) and scores
// edge (i, j) with leaky_relu(attn_src[h] . P_i + attn_dst[h] . P_j), which
// is a^T [P_i || P_j] with a = [attn_src; attn_dst].
struct GatLayerParams {
  std::vector<Tensor> weights;   // per head, d_in x d_head
  std::vector<Tensor> attn_src;  // per head, d_head x 1
  std::vector<Tensor> attn_dst;  // per head, d_head x 1
  double slope = 0.2;

  std::size_t heads() const { return weights.size(); }
  std::size_t input_dim() const { return weights.front().rows(); }
  std::size_t head_dim() const { return weights.front().cols(); }
  std::size_t output_dim() const { return heads() * head_dim(); }

  static GatLayerParams xavier(std::size_t d_in, std::size_t heads, std::size_t d_head,
                               double slope, Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

struct GatEncoderParams {
  std::vector<GatLayerParams> layers;

  std::size_t output_dim() const { return layers.back().output_dim(); }

  static GatEncoderParams xavier(std::size_t d_in, std::size_t depth, std::size_t heads,
                                 std::size_t d_head, double slope, Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

// Concatenation over heads of sum_{j in N(i)} alpha_ij W_h x_j.
Var gat_layer(Var features, const SampleGraph& graph, const GatLayerParams& params,
              ParamBinding& bind);

// Layers composed with ELU in between (not after the last).
Var encode(const SampleGraph& graph, Var features, const GatEncoderParams& params,
           ParamBinding& bind);

// Attention coefficients of one head, for inspection and tests.
Tensor gat_attention(const Tensor& features, const SampleGraph& graph, const GatLayerParams& params,
                     std::size_t head);

}  // namespace mvkt
