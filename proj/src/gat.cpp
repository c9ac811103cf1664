#include "mvkt/gat.hpp"

namespace mvkt {

GatLayerParams GatLayerParams::xavier(std::size_t d_in, std::size_t heads, std::size_t d_head,
                                      double slope, Rng& rng) {
  if (heads == 0 || d_head == 0 || d_in == 0) throw DimensionError("gat: zero-sized layer");
  GatLayerParams p;
  p.slope = slope;
  for (std::size_t h = 0; h < heads; ++h) {
    p.weights.push_back(xavier_uniform(d_in, d_head, rng));
    // Xavier bound for the 2*d_head -> 1 attention map.
    Tensor a = xavier_uniform(2 * d_head, 1, rng);
    Tensor src = Tensor::matrix(d_head, 1), dst = Tensor::matrix(d_head, 1);
    for (std::size_t k = 0; k < d_head; ++k) {
      src(k, 0) = a(k, 0);
      dst(k, 0) = a(d_head + k, 0);
    }
    p.attn_src.push_back(std::move(src));
    p.attn_dst.push_back(std::move(dst));
  }
  return p;
}

void GatLayerParams::visit(const std::string& prefix, const ParamVisitor& fn) {
  for (std::size_t h = 0; h < heads(); ++h) {
    const std::string head = prefix + ".h" + std::to_string(h);
    fn(head + ".weight", weights[h]);
    fn(head + ".attn_src", attn_src[h]);
    fn(head + ".attn_dst", attn_dst[h]);
  }
}

GatEncoderParams GatEncoderParams::xavier(std::size_t d_in, std::size_t depth, std::size_t heads,
                                          std::size_t d_head, double slope, Rng& rng) {
  if (depth == 0) throw DimensionError("gat: encoder depth must be >= 1");
  GatEncoderParams p;
  std::size_t width = d_in;
  for (std::size_t l = 0; l < depth; ++l) {
    p.layers.push_back(GatLayerParams::xavier(width, heads, d_head, slope, rng));
    width = heads * d_head;
  }
  return p;
}

void GatEncoderParams::visit(const std::string& prefix, const ParamVisitor& fn) {
  for (std::size_t l = 0; l < layers.size(); ++l) layers[l].visit(prefix + ".l" + std::to_string(l), fn);
}

namespace {

void check_layer_inputs(const Tensor& x, const SampleGraph& graph, const GatLayerParams& p) {
  if (x.rank() != 2 || x.rows() != graph.n) {
    throw DimensionError("gat_layer: features " + shape_string(x.shape()) + " vs graph of " +
                         std::to_string(graph.n) + " nodes");
  }
  if (x.cols() != p.input_dim()) {
    throw DimensionError("gat_layer: features have " + std::to_string(x.cols()) +
                         " columns, layer expects " + std::to_string(p.input_dim()));
  }
}

}  // namespace

Var gat_layer(Var features, const SampleGraph& graph, const GatLayerParams& params,
              ParamBinding& bind) {
  check_layer_inputs(features.value(), graph, params);
  std::vector<Var> heads;
  heads.reserve(params.heads());
  for (std::size_t h = 0; h < params.heads(); ++h) {
    Var proj = matmul(features, bind(params.weights[h]));
    Var src = matmul(proj, bind(params.attn_src[h]));
    Var dst = matmul(proj, bind(params.attn_dst[h]));
    Var scores = leaky_relu(outer_add(src, transpose(dst)), params.slope);
    Var alpha = row_softmax(scores, &graph.edges);
    heads.push_back(matmul(alpha, proj));
  }
  return heads.size() == 1 ? heads.front() : concat_cols(heads);
}

Var encode(const SampleGraph& graph, Var features, const GatEncoderParams& params,
           ParamBinding& bind) {
  Var h = features;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    if (l > 0) h = elu(h);
    h = gat_layer(h, graph, params.layers[l], bind);
  }
  return h;
}

Tensor gat_attention(const Tensor& features, const SampleGraph& graph, const GatLayerParams& params,
                     std::size_t head) {
  check_layer_inputs(features, graph, params);
  Tape tape;
  ParamBinding bind(tape, false);
  Var x = tape.constant(features);
  Var proj = matmul(x, bind(params.weights.at(head)));
  Var src = matmul(proj, bind(params.attn_src[head]));
  Var dst = matmul(proj, bind(params.attn_dst[head]));
  return row_softmax(leaky_relu(outer_add(src, transpose(dst)), params.slope), &graph.edges).value();
}

}  // namespace mvkt
