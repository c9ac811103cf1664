#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mvkt/errors.hpp"
#include "mvkt/pipeline.hpp"

namespace fs = std::filesystem;
using namespace mvkt;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct Options {
  std::string config_path;
  std::string data_dir;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  bool no_gcl = false;
  bool no_cd = false;
  std::vector<std::string> omics;
  std::string out_dir = "out";
  bool dump_edges = false;
  bool dump_graphs = false;
  bool inductive = false;
  bool symmetric_cd_grad = false;
  std::string model_path;
  std::vector<double> rates{0.0, 0.2, 0.4, 0.6, 0.8};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t top_k = 20;
  std::string metric = "acc";

  SynthSpec synth;
};

TrainConfig build_config(const Options& o) {
  TrainConfig c = o.config_path.empty() ? TrainConfig{} : load_config(o.config_path);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) c.seed = *o.seed;
  if (o.inductive) c.inductive = true;
  if (o.symmetric_cd_grad) c.symmetric_cd_grad = true;
  c.validate();
  return c;
}

AblationSwitches build_switches(const Options& o) {
  AblationSwitches s;
  s.use_gcl = !o.no_gcl;
  s.use_cd = !o.no_cd;
  s.omics = o.omics;
  return s;
}

Dataset read_data(const Options& o) {
  if (o.data_dir.empty()) throw ConfigError("--data is required");
  return load_dataset(o.data_dir);
}

std::vector<std::string> metric_names(TaskKind task) {
  if (task == TaskKind::kBinary) return {"acc", "f1", "f1_w", "f1_m", "auc"};
  return {"acc", "f1_w", "f1_m"};
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError(DataErrorKind::kMissingFile, "cannot write " + path.string());
  out << std::setprecision(10);
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void print_metrics(const MetricsReport& m) {
  std::cout << std::fixed << std::setprecision(4);
  for (const auto& name : metric_names(m.task)) std::cout << name << ' ' << m.get(name) << '\n';
  std::cout.unsetf(std::ios::fixed);
}

void write_losses(const fs::path& path, const RunRecord& record) {
  auto out = open_out(path);
  out << "epoch,total,auxiliary,distillation,final\n";
  for (std::size_t e = 0; e < record.losses.size(); ++e) {
    const auto& l = record.losses[e];
    out << e + 1 << ',' << l.total << ',' << l.auxiliary << ',' << l.distillation << ',' << l.final << '\n';
  }
}

void write_edges(const fs::path& out_dir, const std::vector<EdgeSummary>& edges, const PreparedData& data) {
  auto out = open_out(out_dir / "edges.csv");
  out << "source,target,sample,strength\n";
  for (const auto& e : edges)
    for (std::size_t i = 0; i < e.per_sample.size(); ++i)
      out << e.source << ',' << e.target << ',' << data.dataset.labels.sample_ids[i] << ',' << e.per_sample[i] << '\n';
  auto summary = open_out(out_dir / "edges_summary.csv");
  summary << "source,target,mean_strength\n";
  for (const auto& e : edges) summary << e.source << ',' << e.target << ',' << e.mean_strength << '\n';
}

void write_graphs(const fs::path& out_dir, const PreparedData& data, const TrainConfig& config) {
  const TrainingView view = training_view(data, config);
  fs::create_directories(out_dir / "graphs");
  for (std::size_t m = 0; m < data.omics(); ++m)
    write_graph_csv(view.inputs.graphs[m], out_dir / "graphs" / (data.standardized[m].name + ".csv"));
}

int cmd_synth(const Options& o) {
  const Dataset ds = synthesize_dataset(o.synth);
  save_dataset(ds, o.out_dir);
  std::cout << "wrote " << ds.samples() << " samples, " << ds.omics.size() << " omics to " << o.out_dir << '\n';
  return 0;
}

int cmd_pretrain(const Options& o) {
  const TrainConfig c = build_config(o);
  const AblationSwitches sw = build_switches(o);
  const PreparedData data = prepare_data(read_data(o), c, sw);
  const fs::path ckpt = fs::path(o.out_dir) / "checkpoints";
  const auto encoders = run_pretrain(data, c, sw, &ckpt);
  auto out = open_out(fs::path(o.out_dir) / "pretrain_losses.csv");
  out << "omics,epoch,loss\n";
  for (const auto& e : encoders) {
    for (std::size_t k = 0; k < e.losses.size(); ++k) out << e.omics << ',' << k + 1 << ',' << e.losses[k] << '\n';
    std::cout << e.omics << (e.random ? " random" : " pretrained");
    if (!e.losses.empty()) std::cout << " final loss " << e.losses.back();
    std::cout << '\n';
  }
  return 0;
}

int cmd_train(const Options& o) {
  const TrainConfig c = build_config(o);
  const AblationSwitches sw = build_switches(o);
  const PreparedData data = prepare_data(read_data(o), c, sw);
  const fs::path out_dir = o.out_dir;
  const fs::path ckpt = out_dir / "checkpoints";
  const auto encoders = run_pretrain(data, c, sw, &ckpt);
  TrainedModel tm = run_finetune(data, encoders, c, sw);
  save_model(tm.params, c, ckpt / "model.ckpt");
  write_json(out_dir / "metrics.json", tm.record.metrics_json());
  write_json(out_dir / "run_record.json", tm.record.to_json());
  write_losses(out_dir / "losses.csv", tm.record);
  if (o.dump_edges) write_edges(out_dir, distillation_edges(tm.params, data, c), data);
  if (o.dump_graphs) write_graphs(out_dir, data, c);
  print_metrics(tm.record.metrics);
  return 0;
}

int cmd_evaluate(const Options& o) {
  const TrainConfig c = build_config(o);
  const AblationSwitches sw = build_switches(o);
  const PreparedData data = prepare_data(read_data(o), c, sw);
  const fs::path model = o.model_path.empty() ? fs::path(o.out_dir) / "checkpoints" / "model.ckpt"
                                              : fs::path(o.model_path);
  const ModelParams params = load_model(data, c, sw, model);
  const Evaluation ev = evaluate(params, data, c);
  write_json(fs::path(o.out_dir) / "eval_metrics.json", ev.metrics.to_json());
  if (o.dump_edges) write_edges(o.out_dir, distillation_edges(params, data, c), data);
  print_metrics(ev.metrics);
  return 0;
}

void write_summary(std::ofstream& out, const std::string& key, const std::vector<std::string>& names,
                   const std::vector<MetricsReport>& reports) {
  for (const auto& name : names) {
    std::vector<double> v;
    for (const auto& r : reports) v.push_back(r.get(name));
    const MetricSummary s = summarize(v);
    out << key << ',' << name << ',' << s.mean << ',' << s.stddev << ',' << s.ci95 << '\n';
  }
}

int cmd_ablate(const Options& o) {
  const TrainConfig base = build_config(o);
  const Dataset ds = read_data(o);
  struct Arm {
    std::string name;
    bool gcl;
    bool cd;
  };
  const std::vector<Arm> arms{{"full", true, true}, {"no_gcl", false, true}, {"no_cd", true, false},
                              {"baseline", false, false}};
  const fs::path sweeps = fs::path(o.out_dir) / "sweeps";
  auto rows = open_out(sweeps / "ablation.csv");
  auto summary = open_out(sweeps / "ablation_summary.csv");
  summary << "arm,metric,mean,std,ci95\n";
  std::vector<std::string> names;
  for (const auto& arm : arms) {
    AblationSwitches sw;
    sw.use_gcl = arm.gcl;
    sw.use_cd = arm.cd;
    sw.omics = o.omics;
    std::vector<MetricsReport> reports;
    for (auto seed : o.seeds) {
      TrainConfig c = base;
      c.seed = seed;
      TrainedModel tm = train_pipeline(ds, c, sw);
      if (names.empty()) {
        names = metric_names(tm.record.metrics.task);
        rows << "arm,seed";
        for (const auto& n : names) rows << ',' << n;
        rows << '\n';
      }
      rows << arm.name << ',' << seed;
      for (const auto& n : names) rows << ',' << tm.record.metrics.get(n);
      rows << '\n';
      reports.push_back(tm.record.metrics);
    }
    write_summary(summary, arm.name, names, reports);
    std::vector<double> acc;
    for (const auto& r : reports) acc.push_back(r.accuracy);
    const MetricSummary s = summarize(acc);
    std::cout << arm.name << " acc " << s.mean << " +- " << s.stddev << '\n';
  }
  return 0;
}

int cmd_robustness(const Options& o) {
  const TrainConfig c = build_config(o);
  const AblationSwitches sw = build_switches(o);
  const auto rows = robustness_sweep(read_data(o), c, sw, o.rates, o.seeds);
  if (rows.empty()) return 0;
  const auto names = metric_names(rows.front().metrics.task);
  const fs::path sweeps = fs::path(o.out_dir) / "sweeps";
  auto out = open_out(sweeps / "robustness.csv");
  out << "rate,seed";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (const auto& r : rows) {
    out << r.rate << ',' << r.seed;
    for (const auto& n : names) out << ',' << r.metrics.get(n);
    out << '\n';
  }
  auto summary = open_out(sweeps / "robustness_summary.csv");
  summary << "rate,metric,mean,std,ci95\n";
  for (double rate : o.rates) {
    std::vector<MetricsReport> at;
    for (const auto& r : rows)
      if (r.rate == rate) at.push_back(r.metrics);
    std::ostringstream key;
    key << rate;
    write_summary(summary, key.str(), names, at);
    std::vector<double> acc;
    for (const auto& m : at) acc.push_back(m.accuracy);
    const MetricSummary s = summarize(acc);
    std::cout << "rate " << rate << " acc " << s.mean << " +- " << s.ci95 << '\n';
  }
  return 0;
}

int cmd_biomarkers(const Options& o) {
  const TrainConfig c = build_config(o);
  const AblationSwitches sw = build_switches(o);
  const PreparedData data = prepare_data(read_data(o), c, sw);
  ModelParams params;
  if (!o.model_path.empty()) {
    params = load_model(data, c, sw, o.model_path);
  } else {
    params = run_finetune(data, run_pretrain(data, c, sw), c, sw).params;
  }
  const auto ranked = feature_ablation_rank(params, data, c, o.metric);
  for (const auto& list : ranked) {
    if (list.empty()) continue;
    auto out = open_out(fs::path(o.out_dir) / ("biomarkers_" + list.front().omics + ".csv"));
    out << "rank,omics,feature,score,prob_drop\n";
    for (std::size_t r = 0; r < list.size() && r < o.top_k; ++r) {
      const auto& f = list[r];
      out << r + 1 << ',' << f.omics << ',' << f.feature << ',' << f.score << ',' << f.prob_drop << '\n';
    }
    std::cout << list.front().omics << ':';
    for (std::size_t r = 0; r < list.size() && r < 5; ++r) std::cout << ' ' << list[r].feature;
    std::cout << '\n';
  }
  return 0;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config_path, "key = value configuration file")->check(CLI::ExistingFile);
  sub->add_option("--data", o.data_dir, "dataset directory");
  sub->add_option("--seed", o.seed, "run seed (split and initialization)");
  sub->add_option("--set", o.overrides, "override a config field, key=value");
  sub->add_flag("--no-gcl", o.no_gcl, "skip contrastive pretraining");
  sub->add_flag("--no-cd", o.no_cd, "replace cross-omics distillation with a linear layer");
  sub->add_option("--omics", o.omics, "comma-separated omics subset")->delimiter(',');
  sub->add_option("--out", o.out_dir, "output directory");
  sub->add_flag("--inductive", o.inductive, "train on train-only graphs");
  sub->add_flag("--symmetric-cd-grad", o.symmetric_cd_grad, "let distillation gradients reach the source");
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Multiomics classification with graph contrastive pretraining and cross-omics distillation"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
  synth->add_option("--out", o.out_dir, "output directory");
  synth->add_option("--samples", o.synth.samples, "number of samples");
  synth->add_option("--dims", o.synth.dims, "features per omics")->delimiter(',');
  synth->add_option("--classes", o.synth.classes, "number of classes");
  synth->add_option("--informativeness", o.synth.informativeness, "informative fraction per omics")
      ->delimiter(',');
  synth->add_option("--separation", o.synth.separation, "class mean offset of informative features");
  synth->add_option("--seed", o.synth.seed, "generator seed");

  auto* pretrain = app.add_subcommand("pretrain", "contrastive pretraining only");
  add_common(pretrain, o);

  auto* train = app.add_subcommand("train", "pretrain, fine-tune and evaluate");
  add_common(train, o);
  train->add_flag("--dump-edges", o.dump_edges, "write per-sample distillation edge strengths");
  train->add_flag("--dump-graphs", o.dump_graphs, "write the sample graphs as edge lists");

  auto* eval = app.add_subcommand("evaluate", "evaluate a saved model");
  add_common(eval, o);
  eval->add_option("--model", o.model_path, "model checkpoint");
  eval->add_flag("--dump-edges", o.dump_edges, "write per-sample distillation edge strengths");

  auto* ablate = app.add_subcommand("ablate", "full, no-GCL, no-CD and baseline arms over seeds");
  add_common(ablate, o);
  ablate->add_option("--seeds", o.seeds, "comma-separated seeds")->delimiter(',');

  auto* robust = app.add_subcommand("robustness", "test-feature missingness sweep");
  add_common(robust, o);
  robust->add_option("--rates", o.rates, "comma-separated missing rates")->delimiter(',');
  robust->add_option("--seeds", o.seeds, "comma-separated seeds")->delimiter(',');

  auto* bio = app.add_subcommand("biomarkers", "rank features by ablation");
  add_common(bio, o);
  bio->add_option("--model", o.model_path, "model checkpoint (trains one when omitted)");
  bio->add_option("--top-k", o.top_k, "features reported per omics");
  bio->add_option("--metric", o.metric, "acc, f1, f1_w, f1_m or auc");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(o);
    if (*pretrain) return cmd_pretrain(o);
    if (*train) return cmd_train(o);
    if (*eval) return cmd_evaluate(o);
    if (*ablate) return cmd_ablate(o);
    if (*robust) return cmd_robustness(o);
    if (*bio) return cmd_biomarkers(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const DimensionError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
