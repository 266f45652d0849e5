#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "floodcast/tensor/rng.hpp"

namespace floodcast {

struct SensorNode {
  std::string id;
  double bank_height_ft = 0.0;
  double cross_section_ft2 = 0.0;
  double impermeable_pct = 0.0;
  double x = 0.0;
  double y = 0.0;
};

using Edge = std::pair<std::size_t, std::size_t>;  // predecessor -> successor

// Directed channel network. Edges point downstream; the graph is validated to
// be acyclic without self-loops or duplicate edges on construction.
class SensorGraph {
 public:
  SensorGraph() = default;
  SensorGraph(std::vector<SensorNode> nodes, std::vector<Edge> edges);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<SensorNode>& nodes() const { return nodes_; }
  const SensorNode& node(std::size_t i) const { return nodes_.at(i); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::size_t>& predecessors(std::size_t i) const { return preds_.at(i); }
  const std::vector<std::size_t>& successors(std::size_t i) const { return succs_.at(i); }
  std::optional<std::size_t> index_of(const std::string& id) const;

  // Kahn's algorithm; ties resolved by smallest index.
  std::vector<std::size_t> topological_order() const;

 private:
  std::vector<SensorNode> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> preds_;
  std::vector<std::vector<std::size_t>> succs_;
};

struct GraphRanges {
  double bank_height_min_ft = 10.0;
  double bank_height_max_ft = 30.0;
  double cross_section_min_ft2 = 500.0;
  double cross_section_max_ft2 = 6500.0;
  double impermeable_min_pct = 10.0;
  double impermeable_max_pct = 90.0;
  std::size_t max_degree = 3;
  // Chance that a node gets a second downstream channel (braiding).
  double extra_edge_probability = 0.2;
  double extent_x = 100.0;
  double extent_y = 60.0;
};

// Random drainage DAG: node 0 is the most upstream, the last node is the outlet.
// Every non-outlet node drains to at least one node further downstream; in- and
// out-degree never exceed `max_degree`.
SensorGraph generate_graph(std::size_t n_sensors, RngState& rng, const GraphRanges& ranges = {});

}  // namespace floodcast
