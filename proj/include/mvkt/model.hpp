#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mvkt/attention.hpp"
#include "mvkt/config.hpp"
#include "mvkt/distill.hpp"
#include "mvkt/gat.hpp"
#include "mvkt/heads.hpp"

namespace mvkt {

struct ModelShape {
  std::vector<std::string> omics_names;
  std::vector<std::size_t> input_dims;
  std::size_t classes = 2;
  bool use_cd = true;

  std::size_t omics() const { return omics_names.size(); }
};

// All learnable weights of the fine-tuned model.
struct ModelParams {
  std::vector<std::string> omics_names;
  bool use_cd = true;
  std::vector<GatEncoderParams> encoders;
  std::vector<AttentionParams> self_attention;
  std::vector<AttentionParams> cross_attention;  // empty for a single omics
  std::vector<Linear> replacement;               // no-distillation arm: Z^m -> Z^m
  DistillParams distill;                         // empty unless distillation is active
  HeadParams heads;

  std::size_t omics() const { return omics_names.size(); }
  bool distills() const { return use_cd && omics() >= 2; }
  std::size_t fused_dim(const TrainConfig& config) const;

  // Encoder weights are the GAT learning-rate group; everything else is the
  // inter-omics group.
  void visit_encoders(const ParamVisitor& fn);
  void visit_fusion(const ParamVisitor& fn);
  void visit(const ParamVisitor& fn);
};

// Encoders are seeded per omics name and the remaining weights from a separate
// stream, so swapping encoder weights leaves every other initialization intact.
GatEncoderParams init_encoder(const TrainConfig& config, std::size_t input_dim,
                              const std::string& omics_name);
ModelParams init_model(const ModelShape& shape, const TrainConfig& config);

struct ModelInputs {
  std::vector<Tensor> features;      // per omics, n x d^m
  std::vector<SampleGraph> graphs;   // per omics
  const BoolMatrix* key_mask = nullptr;  // restricts attention keys (inductive inference)
};

struct ForwardPass {
  Var total;
  Var auxiliary;
  std::optional<Var> distillation;
  Var final;
  Var final_logits;
  std::vector<Var> encoded;   // F^m
  std::vector<Var> fused;     // Z^m
  std::vector<Var> logits;    // z^m, distillation only
  std::vector<EdgeRecord> edges;
};

// Full model graph on `bind`'s tape; losses use `rows` with `labels`.
ForwardPass forward(const ModelParams& params, const ModelInputs& inputs,
                    std::span<const std::size_t> rows, std::span<const int> labels,
                    const TrainConfig& config, ParamBinding& bind);

// Final logits for every sample, without gradient tracking.
Tensor predict_logits(const ModelParams& params, const ModelInputs& inputs);

}  // namespace mvkt
