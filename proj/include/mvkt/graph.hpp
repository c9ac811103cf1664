#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "mvkt/data_io.hpp"
#include "mvkt/tensor.hpp"

namespace mvkt {

struct GraphConfig {
  double threshold = 0.05;
  // Rows that are entirely zero get only a self-loop instead of raising.
  // Used when evaluating on perturbed inputs.
  bool isolate_zero_rows = false;
};

// Binary sample-similarity graph. edges(i, j) means node i aggregates from j.
struct SampleGraph {
  std::size_t n = 0;
  BoolMatrix edges;
  std::vector<std::vector<std::size_t>> neighbors;

  static SampleGraph from_edges(BoolMatrix edges);
  std::size_t edge_count() const { return edges.count(); }
  bool symmetric() const;
};

double cosine_similarity(std::span<const double> x, std::span<const double> y);

// E(i, j) = 1 iff cos(x_i, x_j) >= threshold; the diagonal is always set.
SampleGraph build_graph(const Tensor& features, const GraphConfig& config,
                        std::span<const std::string> sample_ids = {});
SampleGraph build_graph(const OmicsMatrix& matrix, const GraphConfig& config);

// Graph over all rows for inductive inference: rows in `anchors` keep the
// edges among themselves, every other row links to itself and to the anchors
// it is similar to. Non-anchor rows are never sources for anchors or for
// each other, so the result is directed.
SampleGraph attach_graph(const Tensor& features, std::span<const std::size_t> anchors,
                         const GraphConfig& config);

void write_graph_csv(const SampleGraph& graph, const std::filesystem::path& path);

}  // namespace mvkt
