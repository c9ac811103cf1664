#include "mvkt/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "mvkt/random.hpp"

namespace mvkt {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
  std::string out(s.substr(b, e - b));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
      cur.push_back(c);
    } else if (c == ',' && !quoted) {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

using CsvRows = std::vector<std::vector<std::string>>;

CsvRows read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(DataErrorKind::kMissingFile, path.string());
  CsvRows rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

double parse_number(const std::string& cell, const fs::path& path, std::size_t row,
                    std::size_t col) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw DataError(DataErrorKind::kNonNumeric, path.string() + " row " + std::to_string(row) +
                                                    " column " + std::to_string(col) + ": '" +
                                                    cell + "'");
  }
  return v;
}

bool is_id_header(const std::string& cell) {
  return cell.empty() || cell == "sample_id" || cell == "sample" || cell == "id";
}

OmicsMatrix read_omics_csv(const fs::path& path, const std::string& name) {
  CsvRows rows = read_csv(path);
  if (rows.empty()) throw DataError(DataErrorKind::kInvalid, path.string() + " is empty");
  const auto& header = rows.front();
  const bool has_ids = is_id_header(header.front());
  OmicsMatrix m;
  m.name = name;
  m.feature_names.assign(header.begin() + (has_ids ? 1 : 0), header.end());
  const std::size_t d = m.feature_names.size();
  if (d == 0) throw DataError(DataErrorKind::kInvalid, path.string() + " has no feature columns");
  const std::size_t n = rows.size() - 1;
  std::vector<double> values;
  values.reserve(n * d);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      throw DataError(DataErrorKind::kRaggedRow, path.string() + " row " + std::to_string(r) +
                                                     " has " + std::to_string(row.size()) +
                                                     " cells, header has " +
                                                     std::to_string(header.size()));
    }
    m.sample_ids.push_back(has_ids ? row.front() : "s" + std::to_string(r - 1));
    for (std::size_t c = has_ids ? 1 : 0; c < row.size(); ++c)
      values.push_back(parse_number(row[c], path, r, c));
  }
  m.values = Tensor(Shape{n, d}, std::move(values));
  return m;
}

// Headerless numeric CSV (MOGONET release files).
Tensor read_plain_matrix(const fs::path& path) {
  CsvRows rows = read_csv(path);
  if (rows.empty()) throw DataError(DataErrorKind::kInvalid, path.string() + " is empty");
  const std::size_t d = rows.front().size();
  std::vector<double> values;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != d) {
      throw DataError(DataErrorKind::kRaggedRow,
                      path.string() + " row " + std::to_string(r) + " has " +
                          std::to_string(rows[r].size()) + " cells, expected " + std::to_string(d));
    }
    for (std::size_t c = 0; c < d; ++c) values.push_back(parse_number(rows[r][c], path, r, c));
  }
  return Tensor(Shape{rows.size(), d}, std::move(values));
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

int parse_label(const std::string& cell, const std::vector<std::string>& class_names,
                const fs::path& path, std::size_t row) {
  auto it = std::find(class_names.begin(), class_names.end(), cell);
  if (it != class_names.end()) return static_cast<int>(it - class_names.begin());
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || v < 0 ||
      v != std::floor(v)) {
    throw DataError(DataErrorKind::kBadLabel,
                    path.string() + " row " + std::to_string(row) + ": '" + cell + "'");
  }
  return static_cast<int>(v);
}

Dataset load_mogonet_release(const fs::path& dir) {
  Dataset ds;
  ds.name = dir.filename().string();
  static const char* kDefaultNames[] = {"mRNA", "methy", "miRNA"};
  auto read_labels = [&](const fs::path& p) {
    std::vector<int> out;
    const Tensor t = read_plain_matrix(p);
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] < 0 || t[i] != std::floor(t[i]))
        throw DataError(DataErrorKind::kBadLabel, p.string() + " entry " + std::to_string(i));
      out.push_back(static_cast<int>(t[i]));
    }
    return out;
  };
  std::vector<int> labels = read_labels(dir / "labels_tr.csv");
  const std::size_t n_train = labels.size();
  for (int v : read_labels(dir / "labels_te.csv")) labels.push_back(v);
  const std::size_t n = labels.size();
  for (std::size_t k = 1; fs::exists(dir / (std::to_string(k) + "_tr.csv")); ++k) {
    Tensor tr = read_plain_matrix(dir / (std::to_string(k) + "_tr.csv"));
    Tensor te = read_plain_matrix(dir / (std::to_string(k) + "_te.csv"));
    if (tr.rows() != n_train || te.rows() != n - n_train) {
      throw DataError(DataErrorKind::kSampleCountMismatch,
                      "omics " + std::to_string(k) + " has " + std::to_string(tr.rows()) + "+" +
                          std::to_string(te.rows()) + " rows, labels have " +
                          std::to_string(n_train) + "+" + std::to_string(n - n_train));
    }
    if (tr.cols() != te.cols()) {
      throw DataError(DataErrorKind::kRaggedRow, "omics " + std::to_string(k) +
                                                     " train/test feature counts differ");
    }
    OmicsMatrix m;
    m.name = k <= 3 ? kDefaultNames[k - 1] : "omics_" + std::to_string(k);
    const std::size_t d = tr.cols();
    std::vector<double> v(tr.values().begin(), tr.values().end());
    v.insert(v.end(), te.values().begin(), te.values().end());
    m.values = Tensor(Shape{n, d}, std::move(v));
    const fs::path names = dir / (std::to_string(k) + "_featname.csv");
    if (fs::exists(names)) {
      for (const auto& row : read_csv(names)) m.feature_names.push_back(row.front());
    }
    if (m.feature_names.size() != d) {
      m.feature_names.clear();
      for (std::size_t j = 0; j < d; ++j) m.feature_names.push_back("f" + std::to_string(j));
    }
    for (std::size_t i = 0; i < n; ++i) m.sample_ids.push_back("s" + std::to_string(i));
    ds.omics.push_back(std::move(m));
  }
  if (ds.omics.empty()) throw DataError(DataErrorKind::kMissingFile, (dir / "omics_1.csv").string());
  const int max_label = *std::max_element(labels.begin(), labels.end());
  for (int c = 0; c <= max_label; ++c) ds.labels.class_names.push_back(std::to_string(c));
  ds.labels.classes = std::move(labels);
  for (std::size_t i = 0; i < n; ++i) ds.labels.sample_ids.push_back("s" + std::to_string(i));
  return ds;
}

}  // namespace

std::vector<std::size_t> LabelVector::class_counts() const {
  std::vector<std::size_t> counts(num_classes(), 0);
  for (int c : classes) counts.at(static_cast<std::size_t>(c))++;
  return counts;
}

void validate_dataset(const Dataset& ds) {
  if (ds.omics.size() < 2) {
    throw DataError(DataErrorKind::kInvalid,
                    "dataset needs at least 2 omics, found " + std::to_string(ds.omics.size()));
  }
  const std::size_t n = ds.labels.size();
  if (ds.labels.sample_ids.size() != n) {
    throw DataError(DataErrorKind::kSampleCountMismatch, "label ids vs label values");
  }
  for (const auto& m : ds.omics) {
    if (m.samples() != n || m.values.rows() != n) {
      throw DataError(DataErrorKind::kSampleCountMismatch,
                      "omics '" + m.name + "' has " + std::to_string(m.samples()) +
                          " samples, labels have " + std::to_string(n));
    }
    if (m.features() == 0 || m.values.cols() != m.features()) {
      throw DataError(DataErrorKind::kInvalid, "omics '" + m.name + "' has no features");
    }
    if (m.sample_ids != ds.labels.sample_ids) {
      throw DataError(DataErrorKind::kSampleIdMismatch,
                      "omics '" + m.name + "' sample order differs from labels");
    }
    if (!m.values.all_finite()) {
      throw DataError(DataErrorKind::kNonNumeric, "omics '" + m.name + "' has non-finite values");
    }
  }
  const std::size_t c = ds.labels.num_classes();
  std::vector<std::size_t> counts(c, 0);
  for (int y : ds.labels.classes) {
    if (y < 0 || static_cast<std::size_t>(y) >= c) {
      throw DataError(DataErrorKind::kBadLabel, "class index " + std::to_string(y) +
                                                    " outside [0, " + std::to_string(c) + ")");
    }
    counts[static_cast<std::size_t>(y)]++;
  }
  for (std::size_t k = 0; k < c; ++k) {
    if (counts[k] == 0) {
      throw DataError(DataErrorKind::kBadLabel, "class '" + ds.labels.class_names[k] + "' has no samples");
    }
  }
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError(DataErrorKind::kMissingFile, dir.string());
  if (!fs::exists(dir / "omics_1.csv") && fs::exists(dir / "1_tr.csv")) {
    Dataset ds = load_mogonet_release(dir);
    validate_dataset(ds);
    return ds;
  }

  Dataset ds;
  ds.name = dir.filename().string();
  std::vector<std::string> omics_names;
  const fs::path meta_path = dir / "meta.json";
  if (fs::exists(meta_path)) {
    std::ifstream in(meta_path);
    json meta;
    try {
      in >> meta;
      if (meta.contains("name")) ds.name = meta["name"].get<std::string>();
      if (meta.contains("omics")) omics_names = meta["omics"].get<std::vector<std::string>>();
      if (meta.contains("classes"))
        ds.labels.class_names = meta["classes"].get<std::vector<std::string>>();
      if (meta.contains("informative"))
        ds.informative = meta["informative"].get<std::vector<std::vector<std::size_t>>>();
    } catch (const json::exception& e) {
      throw DataError(DataErrorKind::kBadMeta, meta_path.string() + ": " + e.what());
    }
  }

  for (std::size_t k = 1;; ++k) {
    const fs::path p = dir / ("omics_" + std::to_string(k) + ".csv");
    if (!fs::exists(p)) {
      if (k <= omics_names.size() || k == 1) throw DataError(DataErrorKind::kMissingFile, p.string());
      break;
    }
    const std::string name =
        k <= omics_names.size() ? omics_names[k - 1] : "omics_" + std::to_string(k);
    ds.omics.push_back(read_omics_csv(p, name));
  }

  const fs::path label_path = dir / "labels.csv";
  CsvRows rows = read_csv(label_path);
  if (rows.empty()) throw DataError(DataErrorKind::kBadLabel, label_path.string() + " is empty");
  std::size_t first = 0;
  bool has_ids = false;
  if (rows.front().size() == 2) {
    has_ids = true;
    if (is_id_header(rows.front()[0])) first = 1;
  } else if (rows.front().size() == 1) {
    if (rows.front()[0] == "label") first = 1;
  } else {
    throw DataError(DataErrorKind::kRaggedRow, label_path.string() + " must have 1 or 2 columns");
  }
  std::vector<std::string> raw;
  for (std::size_t r = first; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size()) {
      throw DataError(DataErrorKind::kRaggedRow, label_path.string() + " row " + std::to_string(r));
    }
    ds.labels.sample_ids.push_back(has_ids ? rows[r][0] : "s" + std::to_string(r - first));
    raw.push_back(has_ids ? rows[r][1] : rows[r][0]);
  }
  int max_label = -1;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const int y = parse_label(raw[i], ds.labels.class_names, label_path, i + first);
    ds.labels.classes.push_back(y);
    max_label = std::max(max_label, y);
  }
  for (int c = static_cast<int>(ds.labels.class_names.size()); c <= max_label; ++c)
    ds.labels.class_names.push_back(std::to_string(c));

  // Files without id columns get positional ids; align them with the labels.
  for (auto& m : ds.omics) {
    if (m.samples() != ds.labels.size()) {
      throw DataError(DataErrorKind::kSampleCountMismatch,
                      "omics '" + m.name + "' has " + std::to_string(m.samples()) +
                          " samples, labels have " + std::to_string(ds.labels.size()));
    }
    if (m.sample_ids != ds.labels.sample_ids) {
      std::map<std::string, std::size_t> pos;
      for (std::size_t i = 0; i < m.samples(); ++i) pos[m.sample_ids[i]] = i;
      bool positional = m.sample_ids.front() == "s0" && pos.size() == m.samples();
      std::vector<std::size_t> order;
      for (const auto& id : ds.labels.sample_ids) {
        auto it = pos.find(id);
        if (it == pos.end()) {
          if (positional) break;
          throw DataError(DataErrorKind::kSampleIdMismatch,
                          "sample '" + id + "' missing from omics '" + m.name + "'");
        }
        order.push_back(it->second);
      }
      if (order.size() == ds.labels.size()) {
        m = select_samples(m, order);
      } else {
        m.sample_ids = ds.labels.sample_ids;
      }
    }
  }
  validate_dataset(ds);
  return ds;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t k = 0; k < ds.omics.size(); ++k) {
    const auto& m = ds.omics[k];
    std::ofstream out(dir / ("omics_" + std::to_string(k + 1) + ".csv"));
    out << "sample_id";
    for (const auto& f : m.feature_names) out << ',' << f;
    out << '\n';
    for (std::size_t i = 0; i < m.samples(); ++i) {
      out << m.sample_ids[i];
      for (std::size_t j = 0; j < m.features(); ++j) out << ',' << format_double(m.values(i, j));
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "labels.csv");
    out << "sample_id,label\n";
    for (std::size_t i = 0; i < ds.labels.size(); ++i)
      out << ds.labels.sample_ids[i] << ',' << ds.labels.classes[i] << '\n';
  }
  json meta;
  meta["name"] = ds.name;
  std::vector<std::string> names;
  for (const auto& m : ds.omics) names.push_back(m.name);
  meta["omics"] = names;
  meta["classes"] = ds.labels.class_names;
  if (!ds.informative.empty()) meta["informative"] = ds.informative;
  std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
}

Dataset synthesize_dataset(const SynthSpec& spec) {
  const std::size_t n = spec.samples, c = spec.classes;
  if (c < 2) throw DataError(DataErrorKind::kInvalid, "synthesize: need at least 2 classes");
  if (n < 2 * c) throw DataError(DataErrorKind::kInvalid, "synthesize: need n >= 2C samples");
  if (spec.dims.empty() || spec.dims.size() != spec.informativeness.size()) {
    throw DataError(DataErrorKind::kInvalid, "synthesize: dims and informativeness must align");
  }
  for (std::size_t m = 0; m < spec.dims.size(); ++m) {
    if (spec.dims[m] == 0) throw DataError(DataErrorKind::kInvalid, "synthesize: zero-width omics");
    const double r = spec.informativeness[m];
    if (!(r >= 0.0 && r <= 1.0))
      throw DataError(DataErrorKind::kInvalid, "synthesize: informativeness outside [0, 1]");
  }

  Dataset ds;
  ds.name = "synthetic";
  for (std::size_t k = 0; k < c; ++k) ds.labels.class_names.push_back("class" + std::to_string(k));
  {
    Rng rng(derive_seed(spec.seed, "synth-labels"));
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % c);
    std::shuffle(y.begin(), y.end(), rng);
    ds.labels.classes = std::move(y);
  }
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "s%04zu", i);
    ds.labels.sample_ids.emplace_back(id);
  }

  for (std::size_t m = 0; m < spec.dims.size(); ++m) {
    const std::size_t d = spec.dims[m];
    const std::string name = "omics" + std::to_string(m + 1);
    Rng rng(derive_seed(spec.seed, "synth-omics", name));
    const auto n_inf = static_cast<std::size_t>(std::lround(spec.informativeness[m] * double(d)));
    std::vector<std::size_t> idx(d);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::size_t> informative(idx.begin(), idx.begin() + static_cast<long>(n_inf));
    std::sort(informative.begin(), informative.end());

    // means[f][k]: class-k mean of feature f.
    std::vector<std::vector<double>> means(d, std::vector<double>(c, 0.0));
    std::bernoulli_distribution coin(0.5);
    for (std::size_t f : informative) {
      if (c == 2) {
        const double s = coin(rng) ? 1.0 : -1.0;
        means[f][0] = -s * spec.separation;
        means[f][1] = s * spec.separation;
      } else {
        bool all_same = true;
        while (all_same) {
          for (std::size_t k = 0; k < c; ++k)
            means[f][k] = (coin(rng) ? 1.0 : -1.0) * spec.separation;
          all_same = std::all_of(means[f].begin(), means[f].end(),
                                 [&](double v) { return v == means[f][0]; });
        }
      }
    }
    std::normal_distribution<double> noise(0.0, 1.0);
    OmicsMatrix om;
    om.name = name;
    om.sample_ids = ds.labels.sample_ids;
    for (std::size_t j = 0; j < d; ++j) om.feature_names.push_back(name + "_f" + std::to_string(j));
    om.values = Tensor::matrix(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      const auto y = static_cast<std::size_t>(ds.labels.classes[i]);
      for (std::size_t j = 0; j < d; ++j) om.values(i, j) = means[j][y] + noise(rng);
    }
    ds.omics.push_back(std::move(om));
    ds.informative.push_back(std::move(informative));
  }
  return ds;
}

FeatureStats fit_feature_stats(const OmicsMatrix& train) {
  const std::size_t n = train.values.rows(), d = train.values.cols();
  FeatureStats s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  if (n == 0) return s;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += train.values(i, j);
  for (auto& v : s.mean) v /= double(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double dv = train.values(i, j) - s.mean[j];
      s.stddev[j] += dv * dv;
    }
  for (auto& v : s.stddev) v = std::sqrt(v / double(n));
  return s;
}

OmicsMatrix standardize_with(const FeatureStats& stats, const OmicsMatrix& apply_to) {
  if (stats.mean.size() != apply_to.values.cols()) {
    throw DimensionError("standardize: " + std::to_string(stats.mean.size()) +
                         " train features vs " + std::to_string(apply_to.values.cols()));
  }
  OmicsMatrix out = apply_to;
  for (std::size_t i = 0; i < out.values.rows(); ++i)
    for (std::size_t j = 0; j < out.values.cols(); ++j) {
      out.values(i, j) = stats.stddev[j] < 1e-12
                             ? 0.0
                             : (apply_to.values(i, j) - stats.mean[j]) / stats.stddev[j];
    }
  return out;
}

OmicsMatrix standardize(const OmicsMatrix& train, const OmicsMatrix& apply_to) {
  if (train.feature_names != apply_to.feature_names) {
    throw DimensionError("standardize: feature sets of '" + train.name + "' and '" +
                         apply_to.name + "' differ");
  }
  return standardize_with(fit_feature_stats(train), apply_to);
}

OmicsMatrix select_samples(const OmicsMatrix& matrix, std::span<const std::size_t> rows) {
  OmicsMatrix out;
  out.name = matrix.name;
  out.feature_names = matrix.feature_names;
  const std::size_t d = matrix.values.cols();
  out.values = Tensor::matrix(rows.size(), d);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.sample_ids.push_back(matrix.sample_ids.at(rows[r]));
    for (std::size_t j = 0; j < d; ++j) out.values(r, j) = matrix.values(rows[r], j);
  }
  return out;
}

SplitPlan stratified_split(const LabelVector& labels, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw DataError(DataErrorKind::kInvalid, "test fraction must lie in (0, 1)");
  }
  SplitPlan plan;
  plan.seed = seed;
  Rng rng(derive_seed(seed, "split"));
  const std::size_t c = labels.num_classes();
  std::vector<std::vector<std::size_t>> by_class(c);
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class.at(static_cast<std::size_t>(labels.classes[i])).push_back(i);
  for (std::size_t k = 0; k < c; ++k) {
    auto& members = by_class[k];
    if (members.size() < 2) {
      throw DataError(DataErrorKind::kBadLabel,
                      "class '" + labels.class_names[k] + "' has " +
                          std::to_string(members.size()) + " sample(s); stratified split needs 2");
    }
    std::shuffle(members.begin(), members.end(), rng);
    auto n_test = static_cast<std::size_t>(std::lround(test_fraction * double(members.size())));
    n_test = std::clamp<std::size_t>(n_test, 1, members.size() - 1);
    plan.test.insert(plan.test.end(), members.begin(), members.begin() + static_cast<long>(n_test));
    plan.train.insert(plan.train.end(), members.begin() + static_cast<long>(n_test), members.end());
  }
  std::sort(plan.train.begin(), plan.train.end());
  std::sort(plan.test.begin(), plan.test.end());
  return plan;
}

OmicsMatrix apply_missing(const OmicsMatrix& matrix, const PerturbationSpec& spec) {
  if (!(spec.rate >= 0.0 && spec.rate <= 1.0)) {
    throw DataError(DataErrorKind::kInvalid, "missing rate outside [0, 1]");
  }
  OmicsMatrix out = matrix;
  const std::size_t n = matrix.values.rows(), d = matrix.values.cols();
  std::vector<std::size_t> rows = spec.rows;
  if (rows.empty()) {
    rows.resize(n);
    std::iota(rows.begin(), rows.end(), 0);
  }
  const std::size_t cells = rows.size() * d;
  const auto n_mask = static_cast<std::size_t>(std::lround(spec.rate * double(cells)));
  if (n_mask == 0) return out;
  std::vector<std::size_t> cell(cells);
  std::iota(cell.begin(), cell.end(), 0);
  Rng rng(derive_seed(spec.seed, "missing"));
  // Partial Fisher-Yates: the first n_mask slots become a uniform subset.
  for (std::size_t k = 0; k < n_mask; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, cells - 1);
    std::swap(cell[k], cell[pick(rng)]);
    const std::size_t r = rows[cell[k] / d];
    out.values(r, cell[k] % d) = 0.0;
  }
  return out;
}

}  // namespace mvkt
