#include "mvkt/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "mvkt/adam.hpp"
#include "mvkt/checkpoint.hpp"
#include "mvkt/errors.hpp"
#include "mvkt/random.hpp"

namespace mvkt {

std::vector<Tensor> PreparedData::features() const {
  std::vector<Tensor> out;
  out.reserve(standardized.size());
  for (const auto& m : standardized) out.push_back(m.values);
  return out;
}

Dataset select_omics(const Dataset& dataset, const std::vector<std::string>& names) {
  if (names.empty()) return dataset;
  Dataset out;
  out.name = dataset.name;
  out.labels = dataset.labels;
  for (std::size_t m = 0; m < dataset.omics.size(); ++m) {
    const auto& name = dataset.omics[m].name;
    if (std::find(names.begin(), names.end(), name) == names.end()) continue;
    out.omics.push_back(dataset.omics[m]);
    if (m < dataset.informative.size()) out.informative.push_back(dataset.informative[m]);
  }
  for (const auto& name : names) {
    auto hit = std::find_if(dataset.omics.begin(), dataset.omics.end(),
                            [&](const OmicsMatrix& o) { return o.name == name; });
    if (hit == dataset.omics.end()) throw ConfigError("unknown omics '" + name + "'");
  }
  if (out.omics.empty()) throw ConfigError("no omics selected");
  return out;
}

PreparedData prepare_data(const Dataset& dataset, const TrainConfig& config,
                          const AblationSwitches& switches) {
  const SplitPlan split =
      stratified_split(dataset.labels, config.test_fraction, derive_seed(config.seed, "split"));
  return prepare_data(dataset, split, config, switches);
}

PreparedData prepare_data(const Dataset& dataset, const SplitPlan& split,
                          const TrainConfig& config, const AblationSwitches& switches) {
  config.validate();
  PreparedData d;
  d.dataset = select_omics(dataset, switches.omics);
  d.split = split;
  const std::size_t n = d.dataset.samples();
  for (auto r : split.train)
    if (r >= n) throw DataError(DataErrorKind::kInvalid, "split row out of range");
  for (auto r : split.test)
    if (r >= n) throw DataError(DataErrorKind::kInvalid, "split row out of range");
  if (split.train.empty()) throw DataError(DataErrorKind::kInvalid, "empty training split");

  for (const auto& m : d.dataset.omics) {
    const FeatureStats stats = fit_feature_stats(select_samples(m, split.train));
    d.standardized.push_back(standardize_with(stats, m));
  }
  for (auto r : split.train) d.train_labels.push_back(d.dataset.labels.classes[r]);
  for (auto r : split.test) d.test_labels.push_back(d.dataset.labels.classes[r]);
  d.task = d.classes() == 2 ? TaskKind::kBinary : TaskKind::kMulticlass;
  return d;
}

TrainingView training_view(const PreparedData& data, const TrainConfig& config) {
  const GraphConfig gc{config.delta, false};
  TrainingView v;
  for (const auto& m : data.standardized) {
    if (config.inductive) {
      OmicsMatrix train = select_samples(m, data.split.train);
      v.inputs.graphs.push_back(build_graph(train, gc));
      v.inputs.features.push_back(std::move(train.values));
    } else {
      v.inputs.graphs.push_back(build_graph(m, gc));
      v.inputs.features.push_back(m.values);
    }
  }
  if (config.inductive) {
    v.rows.resize(data.split.train.size());
    std::iota(v.rows.begin(), v.rows.end(), 0);
  } else {
    v.rows = data.split.train;
  }
  return v;
}

ModelInputs evaluation_inputs(const PreparedData& data, const TrainConfig& config,
                              const std::vector<Tensor>& features, BoolMatrix* key_mask_storage) {
  if (features.size() != data.omics()) throw DimensionError("evaluation_inputs: omics count mismatch");
  const GraphConfig gc{config.delta, true};
  ModelInputs in;
  in.features = features;
  for (const auto& x : features) {
    in.graphs.push_back(config.inductive ? attach_graph(x, data.split.train, gc) : build_graph(x, gc));
  }
  if (config.inductive) {
    if (!key_mask_storage) throw DomainError("evaluation_inputs: inductive mode needs key mask storage");
    const std::size_t n = features.front().rows();
    *key_mask_storage = BoolMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (auto j : data.split.train) key_mask_storage->set(i, j, true);
    in.key_mask = key_mask_storage;
  }
  return in;
}

std::vector<PretrainedEncoder> run_pretrain(const PreparedData& data, const TrainConfig& config,
                                            const AblationSwitches& switches,
                                            const std::filesystem::path* checkpoint_dir) {
  const TrainingView view = training_view(data, config);
  std::vector<PretrainedEncoder> out;
  for (std::size_t m = 0; m < data.omics(); ++m) {
    const std::string& name = data.standardized[m].name;
    PretrainedEncoder pe;
    pe.omics = name;
    pe.encoder = init_encoder(config, data.standardized[m].features(), name);
    if (switches.use_gcl) {
      Rng rng(derive_seed(config.seed, "projection-init", name));
      const std::size_t f_dim = config.gat_heads * config.gat_head_dim;
      PretrainOptions opt;
      opt.augmentation = {config.p1, config.p2, derive_seed(config.seed, "augment", name)};
      opt.tau = config.tau;
      opt.epochs = config.pretrain_epochs;
      opt.lr = config.pretrain_lr;
      PretrainResult r = pretrain(view.inputs.graphs[m], view.inputs.features[m], pe.encoder,
                                  make_projection_head(f_dim, config.proj_dim, rng), opt);
      pe.encoder = std::move(r.encoder);
      pe.losses = std::move(r.losses);
    } else {
      pe.random = true;
    }
    if (checkpoint_dir) {
      GatEncoderParams& enc = pe.encoder;
      const Checkpoint ckpt = make_checkpoint(
          [&](const ParamVisitor& fn) { enc.visit("encoder." + name, fn); },
          config.architecture_hash(), pe.random ? "random" : "pretrained");
      save_checkpoint(*checkpoint_dir / ("pretrain_" + name + ".ckpt"), ckpt);
    }
    out.push_back(std::move(pe));
  }
  return out;
}

namespace {

std::vector<Tensor*> collect(const std::function<void(const ParamVisitor&)>& walk) {
  std::vector<Tensor*> out;
  walk([&](const std::string&, Tensor& t) { out.push_back(&t); });
  return out;
}

std::vector<Tensor> gradients(const ParamBinding& bind, const std::vector<Tensor*>& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const Tensor* p : params) out.push_back(bind.gradient(*p));
  return out;
}

nlohmann::json switches_json(const AblationSwitches& s) {
  return {{"use_gcl", s.use_gcl}, {"use_cd", s.use_cd}, {"omics", s.omics}};
}

}  // namespace

ModelShape model_shape(const PreparedData& data, const AblationSwitches& switches) {
  ModelShape shape;
  for (const auto& m : data.standardized) {
    shape.omics_names.push_back(m.name);
    shape.input_dims.push_back(m.features());
  }
  shape.classes = data.classes();
  shape.use_cd = switches.use_cd;
  return shape;
}

TrainedModel run_finetune(const PreparedData& data, const std::vector<PretrainedEncoder>& pretrained,
                          const TrainConfig& config, const AblationSwitches& switches) {
  const auto start = std::chrono::steady_clock::now();
  TrainedModel tm;
  tm.params = init_model(model_shape(data, switches), config);
  if (pretrained.size() != data.omics()) {
    throw DimensionError("run_finetune: expected " + std::to_string(data.omics()) +
                         " pretrained encoders, got " + std::to_string(pretrained.size()));
  }
  for (std::size_t m = 0; m < data.omics(); ++m) {
    const auto& pe = pretrained[m];
    const auto& fresh = tm.params.encoders[m];
    if (pe.omics != data.standardized[m].name || pe.encoder.layers.size() != fresh.layers.size() ||
        pe.encoder.layers.front().input_dim() != fresh.layers.front().input_dim() ||
        pe.encoder.layers.back().output_dim() != fresh.layers.back().output_dim()) {
      throw DimensionError("run_finetune: pretrained encoder for '" + pe.omics +
                           "' does not match the model architecture");
    }
    tm.params.encoders[m] = pe.encoder;
  }

  ModelParams& params = tm.params;
  const auto gat_params = collect([&](const ParamVisitor& fn) { params.visit_encoders(fn); });
  const auto fusion_params = collect([&](const ParamVisitor& fn) { params.visit_fusion(fn); });
  AdamState gat_state(config.gat_lr, gat_params);
  AdamState fusion_state(config.inter_omics_lr, fusion_params);

  const TrainingView view = training_view(data, config);
  RunRecord& rec = tm.record;
  rec.config = config;
  rec.switches = switches;
  rec.split = data.split;
  for (const auto& m : data.standardized) rec.omics.push_back(m.name);
  for (const auto& pe : pretrained) rec.pretrain_final_losses.push_back(pe.losses.empty() ? 0.0 : pe.losses.back());
  rec.losses.reserve(config.finetune_epochs);

  for (std::size_t epoch = 0; epoch < config.finetune_epochs; ++epoch) {
    Tape tape;
    ParamBinding bind(tape);
    ForwardPass fp;
    try {
      fp = forward(params, view.inputs, view.rows, data.train_labels, config, bind);
    } catch (const NumericalError& e) {
      throw NumericalError("fine-tune epoch " + std::to_string(epoch + 1) + ": " + e.what());
    }
    tape.backward(fp.total);
    EpochLoss l;
    l.total = fp.total.value().item();
    l.auxiliary = fp.auxiliary.value().item();
    l.distillation = fp.distillation ? fp.distillation->value().item() : 0.0;
    l.final = fp.final.value().item();
    rec.losses.push_back(l);

    const auto g_gat = gradients(bind, gat_params);
    const auto g_fusion = gradients(bind, fusion_params);
    adam_step(gat_params, g_gat, gat_state);
    adam_step(fusion_params, g_fusion, fusion_state);
  }

  rec.metrics = evaluate(params, data, config).metrics;
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return tm;
}

Evaluation evaluate(const ModelParams& params, const PreparedData& data, const TrainConfig& config,
                    const std::vector<Tensor>* features) {
  if (data.split.test.empty()) throw DataError(DataErrorKind::kInvalid, "empty test split");
  const std::vector<Tensor> own = features ? std::vector<Tensor>{} : data.features();
  BoolMatrix mask;
  const ModelInputs in = evaluation_inputs(data, config, features ? *features : own, &mask);
  Evaluation ev;
  ev.logits = predict_logits(params, in);
  const Tensor probs = softmax_rows(ev.logits);
  const std::vector<int> all_preds = argmax_rows(ev.logits);
  std::vector<int> preds;
  std::vector<double> scores;
  double true_prob = 0.0;
  for (std::size_t k = 0; k < data.split.test.size(); ++k) {
    const std::size_t r = data.split.test[k];
    preds.push_back(all_preds[r]);
    scores.push_back(probs.cols() > 1 ? probs(r, 1) : 0.0);
    true_prob += probs(r, static_cast<std::size_t>(data.test_labels[k]));
  }
  ev.true_class_probability = true_prob / double(data.split.test.size());
  ev.metrics = compute_metrics(preds, scores, data.test_labels, data.classes(), data.task);
  return ev;
}

void save_model(const ModelParams& params, const TrainConfig& config,
                const std::filesystem::path& path) {
  ModelParams copy = params;
  save_checkpoint(path, make_checkpoint([&](const ParamVisitor& fn) { copy.visit(fn); },
                                        config.architecture_hash(), "finetuned"));
}

ModelParams load_model(const PreparedData& data, const TrainConfig& config,
                       const AblationSwitches& switches, const std::filesystem::path& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.config_hash != config.architecture_hash()) {
    throw ConfigError(path.string() + ": checkpoint architecture does not match the configuration");
  }
  ModelParams params = init_model(model_shape(data, switches), config);
  restore_checkpoint([&](const ParamVisitor& fn) { params.visit(fn); }, ckpt);
  return params;
}

TrainedModel train_pipeline(const Dataset& dataset, const TrainConfig& config,
                            const AblationSwitches& switches,
                            const std::filesystem::path* checkpoint_dir) {
  const PreparedData data = prepare_data(dataset, config, switches);
  const auto encoders = run_pretrain(data, config, switches, checkpoint_dir);
  return run_finetune(data, encoders, config, switches);
}

nlohmann::json RunRecord::metrics_json() const {
  return {{"seed", config.seed},
          {"omics", omics},
          {"config", config.to_json()},
          {"switches", switches_json(switches)},
          {"metrics", metrics.to_json()}};
}

nlohmann::json RunRecord::to_json() const {
  nlohmann::json j = metrics_json();
  j["split"] = {{"seed", split.seed}, {"train", split.train}, {"test", split.test}};
  j["pretrain_final_losses"] = pretrain_final_losses;
  auto& losses_json = j["losses"] = nlohmann::json::array();
  for (const auto& l : losses) {
    losses_json.push_back({{"total", l.total},
                           {"auxiliary", l.auxiliary},
                           {"distillation", l.distillation},
                           {"final", l.final}});
  }
  j["wall_seconds"] = wall_seconds;
  return j;
}

std::vector<Tensor> perturb_test_features(const PreparedData& data, double rate, std::uint64_t seed) {
  std::vector<Tensor> out;
  for (const auto& m : data.standardized) {
    PerturbationSpec spec{rate, derive_seed(seed, "missing", m.name), data.split.test};
    out.push_back(apply_missing(m, spec).values);
  }
  return out;
}

std::vector<RobustnessRow> robustness_sweep(const Dataset& dataset, const TrainConfig& config,
                                            const AblationSwitches& switches,
                                            const std::vector<double>& rates,
                                            const std::vector<std::uint64_t>& seeds) {
  std::vector<RobustnessRow> rows;
  for (auto seed : seeds) {
    TrainConfig c = config;
    c.seed = seed;
    const PreparedData data = prepare_data(dataset, c, switches);
    const auto encoders = run_pretrain(data, c, switches);
    const TrainedModel tm = run_finetune(data, encoders, c, switches);
    for (double rate : rates) {
      const auto features = perturb_test_features(data, rate, seed);
      rows.push_back({rate, seed, evaluate(tm.params, data, c, &features).metrics});
    }
  }
  return rows;
}

MetricSummary summarize(const std::vector<double>& values) {
  // Two-sided 95% Student t critical values for 1..30 degrees of freedom.
  static constexpr double kT[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
                                  2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
                                  2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
                                  2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
  MetricSummary s;
  const std::size_t k = values.size();
  if (k == 0) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / double(k);
  if (k < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / double(k - 1));
  const double t = k - 1 <= 30 ? kT[k - 2] : 1.960;
  s.ci95 = t * s.stddev / std::sqrt(double(k));
  return s;
}

std::vector<std::vector<FeatureScore>> feature_ablation_rank(const ModelParams& params,
                                                             const PreparedData& data,
                                                             const TrainConfig& config,
                                                             const std::string& metric) {
  const std::vector<Tensor> base_features = data.features();
  const Evaluation base = evaluate(params, data, config, &base_features);
  const double base_metric = base.metrics.get(metric);
  std::vector<std::vector<FeatureScore>> out(data.omics());
  for (std::size_t m = 0; m < data.omics(); ++m) {
    const OmicsMatrix& om = data.standardized[m];
    std::vector<Tensor> features = base_features;
    for (std::size_t j = 0; j < om.features(); ++j) {
      Tensor& x = features[m];
      for (std::size_t r = 0; r < x.rows(); ++r) x(r, j) = 0.0;
      const Evaluation ev = evaluate(params, data, config, &features);
      out[m].push_back({om.name, om.feature_names[j], j, base_metric - ev.metrics.get(metric),
                        base.true_class_probability - ev.true_class_probability});
      for (std::size_t r = 0; r < x.rows(); ++r) x(r, j) = base_features[m](r, j);
    }
    std::stable_sort(out[m].begin(), out[m].end(), [](const FeatureScore& a, const FeatureScore& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.prob_drop > b.prob_drop;
    });
  }
  return out;
}

std::vector<EdgeSummary> distillation_edges(const ModelParams& params, const PreparedData& data,
                                            const TrainConfig& config) {
  if (!params.distills()) return {};
  BoolMatrix mask;
  const ModelInputs in = evaluation_inputs(data, config, data.features(), &mask);
  Tape tape;
  ParamBinding bind(tape, false);
  const ForwardPass fp = forward(params, in, data.split.train, data.train_labels, config, bind);
  std::vector<EdgeSummary> out;
  for (const auto& e : fp.edges) {
    EdgeSummary s;
    s.source = params.omics_names[e.src];
    s.target = params.omics_names[e.dst];
    const Tensor& v = e.strength.value();
    s.per_sample.assign(v.values().begin(), v.values().end());
    s.mean_strength = std::accumulate(s.per_sample.begin(), s.per_sample.end(), 0.0) /
                      double(s.per_sample.size());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace mvkt
