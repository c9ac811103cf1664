#include "mvkt/attention.hpp"

#include <cmath>

namespace mvkt {

AttentionParams AttentionParams::xavier(std::size_t d_in, std::size_t d_attn, Rng& rng) {
  AttentionParams p;
  p.query = xavier_uniform(d_in, d_attn, rng);
  p.key = xavier_uniform(d_in, d_attn, rng);
  p.value = xavier_uniform(d_in, d_attn, rng);
  return p;
}

void AttentionParams::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".query", query);
  fn(prefix + ".key", key);
  fn(prefix + ".value", value);
}

Var scaled_dot_attention(Var q, Var k, Var v, const BoolMatrix* key_mask) {
  const Tensor& qv = q.value();
  const Tensor& kv = k.value();
  const Tensor& vv = v.value();
  if (qv.rank() != 2 || kv.rank() != 2 || vv.rank() != 2 || qv.cols() != kv.cols() ||
      kv.rows() != vv.rows()) {
    throw DimensionError("attention: Q " + shape_string(qv.shape()) + ", K " +
                         shape_string(kv.shape()) + ", V " + shape_string(vv.shape()));
  }
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(qv.cols()));
  Var scores = scale(matmul(q, transpose(k)), inv_sqrt);
  return matmul(row_softmax(scores, key_mask), v);
}

namespace {

void check_input(const char* op, const Tensor& x, const AttentionParams& p) {
  if (x.rank() != 2 || x.cols() != p.input_dim()) {
    throw DimensionError(std::string(op) + ": input " + shape_string(x.shape()) +
                         " vs projection " + shape_string(p.query.shape()));
  }
}

}  // namespace

Var self_attend(Var features, const AttentionParams& params, ParamBinding& bind,
                const BoolMatrix* key_mask) {
  check_input("self_attend", features.value(), params);
  return scaled_dot_attention(matmul(features, bind(params.query)),
                              matmul(features, bind(params.key)),
                              matmul(features, bind(params.value)), key_mask);
}

std::vector<Var> cross_attend(const std::vector<Var>& attended,
                              const std::vector<AttentionParams>& params, ParamBinding& bind,
                              const BoolMatrix* key_mask) {
  const std::size_t m_count = attended.size();
  if (m_count < 2 || params.size() != m_count) {
    throw DimensionError("cross_attend: " + std::to_string(m_count) + " omics with " +
                         std::to_string(params.size()) + " parameter sets; need >= 2 and equal");
  }
  const std::size_t n = attended.front().value().rows();
  std::vector<Var> queries, keys, values;
  for (std::size_t m = 0; m < m_count; ++m) {
    if (attended[m].value().rows() != n) {
      throw DimensionError("cross_attend: omics " + std::to_string(m) + " has " +
                           std::to_string(attended[m].value().rows()) + " rows, expected " +
                           std::to_string(n));
    }
    check_input("cross_attend", attended[m].value(), params[m]);
    queries.push_back(matmul(attended[m], bind(params[m].query)));
    keys.push_back(matmul(attended[m], bind(params[m].key)));
    values.push_back(matmul(attended[m], bind(params[m].value)));
  }
  std::vector<Var> out;
  out.reserve(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    std::vector<Var> blocks;
    for (std::size_t j = 0; j < m_count; ++j) {
      if (j == m) continue;
      blocks.push_back(scaled_dot_attention(queries[m], keys[j], values[j], key_mask));
    }
    out.push_back(blocks.size() == 1 ? blocks.front() : concat_cols(blocks));
  }
  return out;
}

}  // namespace mvkt
