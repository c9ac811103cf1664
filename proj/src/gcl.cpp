#include "mvkt/gcl.hpp"

#include <cmath>

#include "mvkt/adam.hpp"

namespace mvkt {

std::vector<bool> sample_feature_mask(std::size_t d, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("augment: mask probability outside [0, 1]");
  std::bernoulli_distribution drop(p);
  std::vector<bool> keep(d);
  for (std::size_t j = 0; j < d; ++j) keep[j] = !drop(rng);
  return keep;
}

Tensor apply_feature_mask(const Tensor& features, const std::vector<bool>& keep) {
  if (features.cols() != keep.size()) {
    throw DimensionError("augment: mask of " + std::to_string(keep.size()) + " for " +
                         shape_string(features.shape()));
  }
  Tensor out = features;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j)
      if (!keep[j]) out(i, j) = 0.0;
  return out;
}

Tensor augment(const Tensor& features, double p, std::uint64_t seed) {
  Rng rng(seed);
  return apply_feature_mask(features, sample_feature_mask(features.cols(), p, rng));
}

ProjectionHead make_projection_head(std::size_t d_in, std::size_t d_proj, Rng& rng) {
  return Mlp::xavier(d_in, d_proj, d_proj, rng);
}

Var project(Var embeddings, const ProjectionHead& head, ParamBinding& bind) {
  return head(embeddings, bind);
}

Var nt_xent_terms(Var anchors, Var positives, double tau) {
  if (!(tau > 0.0)) throw DomainError("nt_xent: temperature must be positive");
  if (anchors.shape() != positives.shape()) {
    throw DimensionError("nt_xent: views " + shape_string(anchors.shape()) + " and " +
                         shape_string(positives.shape()));
  }
  const std::size_t n = anchors.value().rows();
  Var a = row_l2_normalize(anchors);
  Var p = row_l2_normalize(positives);
  Var cross = scale(matmul(a, transpose(p)), 1.0 / tau);
  Var same = scale(matmul(a, transpose(a)), 1.0 / tau);
  BoolMatrix mask(n, 2 * n, true);
  for (std::size_t i = 0; i < n; ++i) mask.set(i, n + i, false);
  return sub(row_logsumexp(concat_cols({cross, same}), &mask), diagonal(cross));
}

double nt_xent_pair(const Tensor& view1, const Tensor& view2, std::size_t i, double tau) {
  Tape tape;
  Var terms = nt_xent_terms(tape.constant(view1), tape.constant(view2), tau);
  return terms.value()(i, 0);
}

Var contrastive_loss(Var view1, Var view2, double tau) {
  return add(sum(nt_xent_terms(view1, view2, tau)), sum(nt_xent_terms(view2, view1, tau)));
}

PretrainResult pretrain(const SampleGraph& graph, const Tensor& features, GatEncoderParams encoder,
                        ProjectionHead head, const PretrainOptions& options) {
  PretrainResult result{std::move(encoder), std::move(head), {}};
  std::vector<Tensor*> params;
  const ParamVisitor collect = [&](const std::string&, Tensor& t) { params.push_back(&t); };
  result.encoder.visit("encoder", collect);
  result.head.visit("head", collect);
  AdamState adam(options.lr, params);
  Rng rng(options.augmentation.seed);

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const auto keep1 = sample_feature_mask(features.cols(), options.augmentation.p1, rng);
    const auto keep2 = sample_feature_mask(features.cols(), options.augmentation.p2, rng);
    Tape tape;
    ParamBinding bind(tape);
    Var x1 = tape.constant(apply_feature_mask(features, keep1));
    Var x2 = tape.constant(apply_feature_mask(features, keep2));
    Var k1 = project(encode(graph, x1, result.encoder, bind), result.head, bind);
    Var k2 = project(encode(graph, x2, result.encoder, bind), result.head, bind);
    Var loss = contrastive_loss(k1, k2, options.tau);
    const double value = loss.value().item();
    if (!std::isfinite(value)) {
      throw NumericalError("pretrain: non-finite contrastive loss at epoch " +
                           std::to_string(epoch + 1));
    }
    result.losses.push_back(value);
    tape.backward(loss);
    std::vector<Tensor> grads;
    grads.reserve(params.size());
    for (const Tensor* p : params) grads.push_back(bind.gradient(*p));
    adam_step(params, grads, adam);
  }
  return result;
}

}  // namespace mvkt
