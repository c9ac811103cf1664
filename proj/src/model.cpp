#include "mvkt/model.hpp"

namespace mvkt {

std::size_t ModelParams::fused_dim(const TrainConfig& config) const {
  return omics() >= 2 ? (omics() - 1) * config.attn_dim : config.attn_dim;
}

void ModelParams::visit_encoders(const ParamVisitor& fn) {
  for (std::size_t m = 0; m < encoders.size(); ++m) encoders[m].visit("encoder." + omics_names[m], fn);
}

void ModelParams::visit_fusion(const ParamVisitor& fn) {
  for (std::size_t m = 0; m < self_attention.size(); ++m)
    self_attention[m].visit("self_attn." + omics_names[m], fn);
  for (std::size_t m = 0; m < cross_attention.size(); ++m)
    cross_attention[m].visit("cross_attn." + omics_names[m], fn);
  for (std::size_t m = 0; m < replacement.size(); ++m)
    replacement[m].visit("replacement." + omics_names[m], fn);
  if (distills()) distill.visit("distill", fn);
  heads.visit("heads", fn);
}

void ModelParams::visit(const ParamVisitor& fn) {
  visit_encoders(fn);
  visit_fusion(fn);
}

GatEncoderParams init_encoder(const TrainConfig& config, std::size_t input_dim,
                              const std::string& omics_name) {
  Rng rng(derive_seed(config.seed, "encoder-init", omics_name));
  return GatEncoderParams::xavier(input_dim, config.gat_layers, config.gat_heads,
                                  config.gat_head_dim, config.leaky_slope, rng);
}

ModelParams init_model(const ModelShape& shape, const TrainConfig& config) {
  const std::size_t m_count = shape.omics();
  if (m_count == 0 || shape.input_dims.size() != m_count) {
    throw DimensionError("init_model: need one input width per omics");
  }
  ModelParams p;
  p.omics_names = shape.omics_names;
  p.use_cd = shape.use_cd;
  const std::size_t f_dim = config.gat_heads * config.gat_head_dim;
  for (std::size_t m = 0; m < m_count; ++m)
    p.encoders.push_back(init_encoder(config, shape.input_dims[m], shape.omics_names[m]));

  for (std::size_t m = 0; m < m_count; ++m) {
    Rng rng(derive_seed(config.seed, "self-attn-init", shape.omics_names[m]));
    p.self_attention.push_back(AttentionParams::xavier(f_dim, config.attn_dim, rng));
  }
  if (m_count >= 2) {
    for (std::size_t m = 0; m < m_count; ++m) {
      Rng rng(derive_seed(config.seed, "cross-attn-init", shape.omics_names[m]));
      p.cross_attention.push_back(AttentionParams::xavier(config.attn_dim, config.attn_dim, rng));
    }
  }
  const std::size_t z_dim = p.fused_dim(config);
  for (std::size_t m = 0; m < m_count; ++m) {
    Rng rng(derive_seed(config.seed, "aux-head-init", shape.omics_names[m]));
    p.heads.auxiliary.push_back(Mlp::xavier(f_dim, config.aux_hidden, shape.classes, rng));
  }
  if (p.distills()) {
    for (std::size_t m = 0; m < m_count; ++m) {
      Rng rng(derive_seed(config.seed, "logit-head-init", shape.omics_names[m]));
      p.heads.logits.push_back(Linear::xavier(z_dim, shape.classes, rng));
    }
    Rng rng(derive_seed(config.seed, "distill-init"));
    p.distill = DistillParams::xavier(m_count, shape.classes, config.distill_dim, rng);
  } else if (!shape.use_cd && m_count >= 2) {
    for (std::size_t m = 0; m < m_count; ++m) {
      Rng rng(derive_seed(config.seed, "replacement-init", shape.omics_names[m]));
      p.replacement.push_back(Linear::xavier(z_dim, z_dim, rng));
    }
  }
  Rng rng(derive_seed(config.seed, "final-head-init"));
  p.heads.final = Mlp::xavier(m_count * z_dim, config.final_hidden, shape.classes, rng);
  return p;
}

namespace {

struct Representations {
  std::vector<Var> encoded;
  std::vector<Var> fused;
};

Representations represent(const ModelParams& params, const ModelInputs& inputs,
                          ParamBinding& bind) {
  const std::size_t m_count = params.omics();
  if (inputs.features.size() != m_count || inputs.graphs.size() != m_count) {
    throw DimensionError("forward: model has " + std::to_string(m_count) + " omics, inputs have " +
                         std::to_string(inputs.features.size()) + " feature sets and " +
                         std::to_string(inputs.graphs.size()) + " graphs");
  }
  Tape& tape = bind.tape();
  Representations r;
  std::vector<Var> attended;
  for (std::size_t m = 0; m < m_count; ++m) {
    Var x = tape.constant(inputs.features[m]);
    r.encoded.push_back(encode(inputs.graphs[m], x, params.encoders[m], bind));
    attended.push_back(self_attend(r.encoded[m], params.self_attention[m], bind, inputs.key_mask));
  }
  if (m_count == 1) {
    r.fused = attended;
  } else {
    r.fused = cross_attend(attended, params.cross_attention, bind, inputs.key_mask);
    if (!params.replacement.empty()) {
      for (std::size_t m = 0; m < m_count; ++m) r.fused[m] = params.replacement[m](r.fused[m], bind);
    }
  }
  return r;
}

}  // namespace

ForwardPass forward(const ModelParams& params, const ModelInputs& inputs,
                    std::span<const std::size_t> rows, std::span<const int> labels,
                    const TrainConfig& config, ParamBinding& bind) {
  Representations r = represent(params, inputs, bind);
  ForwardPass fp;
  fp.encoded = r.encoded;
  fp.fused = r.fused;
  fp.auxiliary = auxiliary_loss(r.encoded, rows, labels, params.heads.auxiliary, bind);
  if (params.distills()) {
    for (std::size_t m = 0; m < params.omics(); ++m)
      fp.logits.push_back(omics_logits(r.fused[m], params.heads.logits[m], bind));
    fp.distillation = cd_loss(fp.logits, params.distill, bind, config.symmetric_cd_grad, &fp.edges);
  }
  FinalOutput out = final_loss(r.fused, rows, labels, params.heads.final, bind);
  fp.final = out.loss;
  fp.final_logits = out.logits;
  fp.total = total_loss(fp.auxiliary, fp.distillation, fp.final,
                        LossWeights{config.lambda1, config.lambda2});
  return fp;
}

Tensor predict_logits(const ModelParams& params, const ModelInputs& inputs) {
  Tape tape;
  ParamBinding bind(tape, false);
  Representations r = represent(params, inputs, bind);
  Var joint = r.fused.size() == 1 ? r.fused.front() : concat_cols(r.fused);
  return params.heads.final(joint, bind).value();
}

}  // namespace mvkt
