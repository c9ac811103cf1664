#pragma once

#include <cstdint>
#include <vector>

#include "mvkt/gat.hpp"
#include "mvkt/layers.hpp"

namespace mvkt {

struct AugmentationConfig {
  double p1 = 0.3;
  double p2 = 0.2;
  std::uint64_t seed = 0;
};

// Samples the shared column mask: each feature is kept with probability 1 - p.
std::vector<bool> sample_feature_mask(std::size_t d, double p, Rng& rng);
// Multiplies every row by the same 0/1 column mask.
Tensor apply_feature_mask(const Tensor& features, const std::vector<bool>& keep);
Tensor augment(const Tensor& features, double p, std::uint64_t seed);

// Projection head: d_in -> d_proj -> d_proj with ELU in between.
using ProjectionHead = Mlp;
ProjectionHead make_projection_head(std::size_t d_in, std::size_t d_proj, Rng& rng);
Var project(Var embeddings, const ProjectionHead& head, ParamBinding& bind);

// Column vector of l(a_i, p_i) for every row i: anchor a_i, positive p_i, and
// the 2(n - 1) negatives {a_j, p_j : j != i}, on cosine similarity / tau.
Var nt_xent_terms(Var anchors, Var positives, double tau);

// l(mu_i, upsilon_i) for one pair, evaluated without gradients.
double nt_xent_pair(const Tensor& view1, const Tensor& view2, std::size_t i, double tau);

// sum_i l(mu_i, upsilon_i) + l(upsilon_i, mu_i).
Var contrastive_loss(Var view1, Var view2, double tau);

struct PretrainOptions {
  AugmentationConfig augmentation;
  double tau = 0.5;
  std::size_t epochs = 2000;
  double lr = 1e-3;
};

struct PretrainResult {
  GatEncoderParams encoder;
  ProjectionHead head;
  std::vector<double> losses;  // one per epoch
};

// Unsupervised contrastive training of encoder + head on two masked views
// per epoch. Throws NumericalError on a non-finite loss.
PretrainResult pretrain(const SampleGraph& graph, const Tensor& features, GatEncoderParams encoder,
                        ProjectionHead head, const PretrainOptions& options);

}  // namespace mvkt
