#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace mvkt {

struct TrainConfig {
  // Graph construction and contrastive pretraining.
  double delta = 0.05;
  double p1 = 0.3;
  double p2 = 0.2;
  double tau = 0.5;
  std::size_t pretrain_epochs = 2000;
  double pretrain_lr = 1e-3;

  // Objective and fine-tuning.
  double lambda1 = 1.0;
  double lambda2 = 0.005;
  std::size_t finetune_epochs = 5000;
  double gat_lr = 5e-3;
  double inter_omics_lr = 3e-3;

  // Architecture.
  std::size_t gat_layers = 2;
  std::size_t gat_heads = 4;
  std::size_t gat_head_dim = 64;
  double leaky_slope = 0.2;
  std::size_t attn_dim = 64;
  std::size_t distill_dim = 16;
  std::size_t aux_hidden = 64;
  std::size_t final_hidden = 64;
  std::size_t proj_dim = 128;

  // Run control.
  std::uint64_t seed = 0;
  double test_fraction = 0.3;
  bool deterministic = true;
  bool inductive = false;
  bool symmetric_cd_grad = false;

  // Applies one `key = value` assignment; throws ConfigError on unknown keys
  // or malformed values.
  void set(const std::string& key, const std::string& value);
  void validate() const;

  nlohmann::json to_json() const;
  // Hash of the fields that determine parameter shapes.
  std::uint64_t architecture_hash() const;
};

// Reads a flat `key = value` file; '#' starts a comment.
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});

struct AblationSwitches {
  bool use_gcl = true;
  bool use_cd = true;
  // Omics names to keep, in dataset order; empty keeps all.
  std::vector<std::string> omics;
};

}  // namespace mvkt
