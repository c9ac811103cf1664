#include "mvkt/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace mvkt {

namespace {

std::vector<double> row_norms(const Tensor& x) {
  std::vector<double> norms(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) s += x(i, j) * x(i, j);
    norms[i] = std::sqrt(s);
  }
  return norms;
}

std::vector<double> checked_norms(const Tensor& x, const GraphConfig& config,
                                  std::span<const std::string> ids) {
  auto norms = row_norms(x);
  if (!config.isolate_zero_rows) {
    for (std::size_t i = 0; i < norms.size(); ++i) {
      if (norms[i] == 0.0) {
        std::string who = i < ids.size() ? "sample '" + ids[i] + "'" : "row " + std::to_string(i);
        throw DataError(DataErrorKind::kZeroRow, who + " is all zeros; cosine similarity undefined");
      }
    }
  }
  return norms;
}

bool similar(const Tensor& x, const std::vector<double>& norms, std::size_t i, std::size_t j,
             double threshold) {
  if (norms[i] == 0.0 || norms[j] == 0.0) return false;
  double dot = 0.0;
  for (std::size_t k = 0; k < x.cols(); ++k) dot += x(i, k) * x(j, k);
  return dot / (norms[i] * norms[j]) >= threshold;
}

}  // namespace

SampleGraph SampleGraph::from_edges(BoolMatrix edges) {
  SampleGraph g;
  g.n = edges.rows();
  g.neighbors.resize(g.n);
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = 0; j < edges.cols(); ++j)
      if (edges(i, j)) g.neighbors[i].push_back(j);
  g.edges = std::move(edges);
  return g;
}

bool SampleGraph::symmetric() const {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (edges(i, j) != edges(j, i)) return false;
  return true;
}

double cosine_similarity(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DimensionError("cosine_similarity: lengths " + std::to_string(x.size()) + " and " +
                         std::to_string(y.size()));
  }
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    nx += x[i] * x[i];
    ny += y[i] * y[i];
  }
  if (nx == 0.0 || ny == 0.0) throw DomainError("cosine_similarity: zero vector");
  return std::clamp(dot / (std::sqrt(nx) * std::sqrt(ny)), -1.0, 1.0);
}

SampleGraph build_graph(const Tensor& x, const GraphConfig& config,
                        std::span<const std::string> ids) {
  if (std::isnan(config.threshold)) throw DomainError("build_graph: threshold is NaN");
  const std::size_t n = x.rows();
  const auto norms = checked_norms(x, config, ids);
  BoolMatrix e(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    e.set(i, i, true);
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool on = similar(x, norms, i, j, config.threshold);
      e.set(i, j, on);
      e.set(j, i, on);
    }
  }
  return SampleGraph::from_edges(std::move(e));
}

SampleGraph build_graph(const OmicsMatrix& matrix, const GraphConfig& config) {
  return build_graph(matrix.values, config, matrix.sample_ids);
}

SampleGraph attach_graph(const Tensor& x, std::span<const std::size_t> anchors,
                         const GraphConfig& config) {
  const std::size_t n = x.rows();
  const auto norms = checked_norms(x, config, {});
  for (auto a : anchors) {
    if (a >= n) throw DimensionError("attach_graph: anchor row " + std::to_string(a) + " out of range");
  }
  BoolMatrix e(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    e.set(i, i, true);
    for (std::size_t a : anchors) {
      if (a == i) continue;
      if (similar(x, norms, i, a, config.threshold)) e.set(i, a, true);
    }
  }
  return SampleGraph::from_edges(std::move(e));
}

void write_graph_csv(const SampleGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  for (std::size_t i = 0; i < graph.n; ++i) {
    for (std::size_t j = 0; j < graph.n; ++j) {
      if (j) out << ',';
      out << (graph.edges(i, j) ? 1 : 0);
    }
    out << '\n';
  }
}

}  // namespace mvkt
