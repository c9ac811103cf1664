#include "mvkt/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>

#include "mvkt/errors.hpp"
#include "mvkt/random.hpp"

namespace mvkt {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: '" + key + "' expects a boolean, got '" + v + "'");
}

}  // namespace

void TrainConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  using Setter = std::function<void(TrainConfig&, const std::string&)>;
#define MVKT_REAL(name) {#name, [](TrainConfig& c, const std::string& s) { c.name = to_double(#name, s); }}
#define MVKT_SIZE(name) {#name, [](TrainConfig& c, const std::string& s) { c.name = static_cast<std::size_t>(to_uint(#name, s)); }}
#define MVKT_FLAG(name) {#name, [](TrainConfig& c, const std::string& s) { c.name = to_bool(#name, s); }}
  static const std::map<std::string, Setter> setters = {
      MVKT_REAL(delta),         MVKT_REAL(p1),           MVKT_REAL(p2),
      MVKT_REAL(tau),           MVKT_SIZE(pretrain_epochs), MVKT_REAL(pretrain_lr),
      MVKT_REAL(lambda1),       MVKT_REAL(lambda2),      MVKT_SIZE(finetune_epochs),
      MVKT_REAL(gat_lr),        MVKT_REAL(inter_omics_lr), MVKT_SIZE(gat_layers),
      MVKT_SIZE(gat_heads),     MVKT_SIZE(gat_head_dim), MVKT_REAL(leaky_slope),
      MVKT_SIZE(attn_dim),      MVKT_SIZE(distill_dim),  MVKT_SIZE(aux_hidden),
      MVKT_SIZE(final_hidden),  MVKT_SIZE(proj_dim),     MVKT_REAL(test_fraction),
      MVKT_FLAG(deterministic), MVKT_FLAG(inductive),    MVKT_FLAG(symmetric_cd_grad),
      {"seed", [](TrainConfig& c, const std::string& s) { c.seed = to_uint("seed", s); }},
  };
#undef MVKT_REAL
#undef MVKT_SIZE
#undef MVKT_FLAG
  auto it = setters.find(trim(key));
  if (it == setters.end()) throw ConfigError("config: unknown key '" + trim(key) + "'");
  it->second(*this, v);
}

void TrainConfig::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("config: ") + what);
  };
  require(delta >= -1.0 && delta <= 1.0, "delta must lie in [-1, 1]");
  require(p1 >= 0.0 && p1 <= 1.0 && p2 >= 0.0 && p2 <= 1.0, "p1 and p2 must lie in [0, 1]");
  require(tau > 0.0, "tau must be positive");
  require(lambda1 >= 0.0 && lambda2 >= 0.0, "loss weights must be nonnegative");
  require(pretrain_lr > 0.0 && gat_lr > 0.0 && inter_omics_lr > 0.0, "learning rates must be positive");
  require(gat_layers >= 1 && gat_heads >= 1 && gat_head_dim >= 1, "GAT sizes must be >= 1");
  require(leaky_slope > 0.0 && leaky_slope < 1.0, "leaky_slope must lie in (0, 1)");
  require(attn_dim >= 1 && distill_dim >= 1 && aux_hidden >= 1 && final_hidden >= 1 && proj_dim >= 1,
          "layer widths must be >= 1");
  require(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction must lie in (0, 1)");
}

nlohmann::json TrainConfig::to_json() const {
  return {
      {"delta", delta},
      {"p1", p1},
      {"p2", p2},
      {"tau", tau},
      {"pretrain_epochs", pretrain_epochs},
      {"pretrain_lr", pretrain_lr},
      {"lambda1", lambda1},
      {"lambda2", lambda2},
      {"finetune_epochs", finetune_epochs},
      {"gat_lr", gat_lr},
      {"inter_omics_lr", inter_omics_lr},
      {"gat_layers", gat_layers},
      {"gat_heads", gat_heads},
      {"gat_head_dim", gat_head_dim},
      {"leaky_slope", leaky_slope},
      {"attn_dim", attn_dim},
      {"distill_dim", distill_dim},
      {"aux_hidden", aux_hidden},
      {"final_hidden", final_hidden},
      {"proj_dim", proj_dim},
      {"seed", seed},
      {"test_fraction", test_fraction},
      {"deterministic", deterministic},
      {"inductive", inductive},
      {"symmetric_cd_grad", symmetric_cd_grad},
  };
}

std::uint64_t TrainConfig::architecture_hash() const {
  const std::string text = "layers=" + std::to_string(gat_layers) +
                           ";heads=" + std::to_string(gat_heads) +
                           ";head_dim=" + std::to_string(gat_head_dim) +
                           ";attn=" + std::to_string(attn_dim) +
                           ";distill=" + std::to_string(distill_dim) +
                           ";aux=" + std::to_string(aux_hidden) +
                           ";final=" + std::to_string(final_hidden);
  return fnv1a(text);
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: " + path.string() + ":" + std::to_string(lineno) +
                        ": expected key = value");
    }
    base.set(line.substr(0, eq), line.substr(eq + 1));
  }
  base.validate();
  return base;
}

}  // namespace mvkt
