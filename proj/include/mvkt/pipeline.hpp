#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mvkt/config.hpp"
#include "mvkt/data_io.hpp"
#include "mvkt/gcl.hpp"
#include "mvkt/graph.hpp"
#include "mvkt/metrics.hpp"
#include "mvkt/model.hpp"

namespace mvkt {

// Dataset restricted to the selected omics, split, and standardized with
// train-row statistics. All rows are kept (test rows carry features only).
struct PreparedData {
  Dataset dataset;
  SplitPlan split;
  std::vector<OmicsMatrix> standardized;
  std::vector<int> train_labels;
  std::vector<int> test_labels;
  TaskKind task = TaskKind::kBinary;

  std::size_t omics() const { return standardized.size(); }
  std::size_t classes() const { return dataset.labels.num_classes(); }
  std::vector<Tensor> features() const;
};

// Keeps the omics named in `switches.omics` (all when empty). Throws
// ConfigError for unknown names or an empty selection.
Dataset select_omics(const Dataset& dataset, const std::vector<std::string>& names);

PreparedData prepare_data(const Dataset& dataset, const TrainConfig& config,
                          const AblationSwitches& switches);
PreparedData prepare_data(const Dataset& dataset, const SplitPlan& split,
                          const TrainConfig& config, const AblationSwitches& switches);

struct PretrainedEncoder {
  std::string omics;
  GatEncoderParams encoder;
  bool random = false;  // true when contrastive pretraining was switched off
  std::vector<double> losses;
};

// One encoder per omics. Without GCL the encoders are the fresh fine-tune
// initializations. When `checkpoint_dir` is set, writes pretrain_<omics>.ckpt.
std::vector<PretrainedEncoder> run_pretrain(const PreparedData& data, const TrainConfig& config,
                                            const AblationSwitches& switches,
                                            const std::filesystem::path* checkpoint_dir = nullptr);

struct EpochLoss {
  double total = 0.0;
  double auxiliary = 0.0;
  double distillation = 0.0;
  double final = 0.0;
};

struct RunRecord {
  TrainConfig config;
  AblationSwitches switches;
  std::vector<std::string> omics;
  SplitPlan split;
  std::vector<double> pretrain_final_losses;
  std::vector<EpochLoss> losses;
  MetricsReport metrics;
  double wall_seconds = 0.0;

  // Everything except wall time; identical across replays.
  nlohmann::json metrics_json() const;
  nlohmann::json to_json() const;
};

struct TrainedModel {
  ModelParams params;
  RunRecord record;
};

// Transductive runs see every sample's features; inductive runs only the
// train rows. `rows` indexes the train samples inside `inputs`.
struct TrainingView {
  ModelInputs inputs;
  std::vector<std::size_t> rows;
};

TrainingView training_view(const PreparedData& data, const TrainConfig& config);
// Inputs covering every sample, built from (possibly perturbed) features.
ModelInputs evaluation_inputs(const PreparedData& data, const TrainConfig& config,
                              const std::vector<Tensor>& features, BoolMatrix* key_mask_storage);

ModelShape model_shape(const PreparedData& data, const AblationSwitches& switches);

TrainedModel run_finetune(const PreparedData& data, const std::vector<PretrainedEncoder>& pretrained,
                          const TrainConfig& config, const AblationSwitches& switches);

struct Evaluation {
  MetricsReport metrics;
  Tensor logits;                 // every sample
  double true_class_probability;  // mean over test rows
};

Evaluation evaluate(const ModelParams& params, const PreparedData& data, const TrainConfig& config,
                    const std::vector<Tensor>* features = nullptr);

void save_model(const ModelParams& params, const TrainConfig& config,
                const std::filesystem::path& path);
// Rebuilds the parameter layout for `data` and fills it from `path`.
ModelParams load_model(const PreparedData& data, const TrainConfig& config,
                       const AblationSwitches& switches, const std::filesystem::path& path);

// Pretrain, fine-tune and evaluate in one call.
TrainedModel train_pipeline(const Dataset& dataset, const TrainConfig& config,
                            const AblationSwitches& switches,
                            const std::filesystem::path* checkpoint_dir = nullptr);

// Test features with `rate` of their cells zeroed, per omics.
std::vector<Tensor> perturb_test_features(const PreparedData& data, double rate, std::uint64_t seed);

struct RobustnessRow {
  double rate = 0.0;
  std::uint64_t seed = 0;
  MetricsReport metrics;
};

// For each seed: trains once on clean data, then evaluates at every rate.
std::vector<RobustnessRow> robustness_sweep(const Dataset& dataset, const TrainConfig& config,
                                            const AblationSwitches& switches,
                                            const std::vector<double>& rates,
                                            const std::vector<std::uint64_t>& seeds);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
  double ci95 = 0.0;    // half-width, Student t
};

MetricSummary summarize(const std::vector<double>& values);

struct FeatureScore {
  std::string omics;
  std::string feature;
  std::size_t index = 0;
  double score = 0.0;      // metric drop versus the unablated model
  double prob_drop = 0.0;  // drop in mean true-class probability on test rows
};

// Zeroes one feature column at a time and re-evaluates. Returns, per omics,
// every feature ranked by (score, prob_drop) descending.
std::vector<std::vector<FeatureScore>> feature_ablation_rank(const ModelParams& params,
                                                             const PreparedData& data,
                                                             const TrainConfig& config,
                                                             const std::string& metric = "acc");

// Learned distillation edge strengths per ordered omics pair. Empty when the
// model does not distill.
struct EdgeSummary {
  std::string source;
  std::string target;
  double mean_strength = 0.0;
  std::vector<double> per_sample;
};
std::vector<EdgeSummary> distillation_edges(const ModelParams& params, const PreparedData& data,
                                            const TrainConfig& config);

}  // namespace mvkt
