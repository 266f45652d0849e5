#include "floodcast/floodgen/graph.hpp"

#include <algorithm>
#include <cstdio>
#include <queue>

#include "floodcast/errors.hpp"

namespace floodcast {

SensorGraph::SensorGraph(std::vector<SensorNode> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), preds_(nodes_.size()), succs_(nodes_.size()) {
  for (const auto& n : nodes_) {
    if (!(n.bank_height_ft > 0.0)) throw ConfigError("sensor " + n.id + ": bank height must be positive");
    if (!(n.cross_section_ft2 > 0.0)) throw ConfigError("sensor " + n.id + ": cross-section area must be positive");
    if (!(n.impermeable_pct >= 0.0 && n.impermeable_pct <= 100.0)) {
      throw ConfigError("sensor " + n.id + ": impermeable percentage outside [0, 100]");
    }
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    for (std::size_t j = i + 1; j < nodes_.size(); ++j)
      if (nodes_[i].id == nodes_[j].id) throw ConfigError("duplicate sensor id " + nodes_[i].id);

  for (const auto& [from, to] : edges_) {
    if (from >= nodes_.size() || to >= nodes_.size()) throw ConfigError("edge refers to an unknown sensor");
    if (from == to) throw ConfigError("self-loop on sensor " + nodes_[from].id);
    if (std::find(succs_[from].begin(), succs_[from].end(), to) != succs_[from].end()) {
      throw ConfigError("duplicate edge " + nodes_[from].id + " -> " + nodes_[to].id);
    }
    succs_[from].push_back(to);
    preds_[to].push_back(from);
  }
  for (auto& p : preds_) std::sort(p.begin(), p.end());
  for (auto& s : succs_) std::sort(s.begin(), s.end());
  (void)topological_order();
}

std::optional<std::size_t> SensorGraph::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].id == id) return i;
  return std::nullopt;
}

std::vector<std::size_t> SensorGraph::topological_order() const {
  std::vector<std::size_t> indeg(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) indeg[i] = preds_[i].size();
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (indeg[i] == 0) ready.push(i);
  std::vector<std::size_t> order;
  order.reserve(nodes_.size());
  while (!ready.empty()) {
    const auto i = ready.top();
    ready.pop();
    order.push_back(i);
    for (auto s : succs_[i])
      if (--indeg[s] == 0) ready.push(s);
  }
  if (order.size() != nodes_.size()) throw ConfigError("sensor graph contains a cycle");
  return order;
}

SensorGraph generate_graph(std::size_t n_sensors, RngState& rng, const GraphRanges& r) {
  if (n_sensors < 2) throw ConfigError("sensor graph needs at least 2 sensors, got " + std::to_string(n_sensors));
  if (r.max_degree < 1) throw ConfigError("max_degree must be at least 1");

  std::vector<SensorNode> nodes(n_sensors);
  const int width = n_sensors > 1000 ? 4 : 3;
  for (std::size_t i = 0; i < n_sensors; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "S%0*zu", width, i);
    auto& n = nodes[i];
    n.id = id;
    n.bank_height_ft = rng.uniform(r.bank_height_min_ft, r.bank_height_max_ft);
    n.cross_section_ft2 = rng.uniform(r.cross_section_min_ft2, r.cross_section_max_ft2);
    n.impermeable_pct = rng.uniform(r.impermeable_min_pct, r.impermeable_max_pct);
    n.x = r.extent_x * (static_cast<double>(i) + rng.uniform()) / static_cast<double>(n_sensors);
    n.y = rng.uniform(0.0, r.extent_y);
  }

  std::vector<std::size_t> indeg(n_sensors, 0), outdeg(n_sensors, 0);
  std::vector<Edge> edges;
  auto available = [&](std::size_t from) {
    std::vector<std::size_t> c;
    for (std::size_t j = from + 1; j < n_sensors && c.size() < 4; ++j)
      if (indeg[j] < r.max_degree) c.push_back(j);
    return c;
  };
  // Walk upstream from the outlet so downstream capacity always remains:
  // nodes after i hold n-2-i edges against 3(n-1-i) slots.
  for (std::size_t i = n_sensors - 1; i-- > 0;) {
    auto c = available(i);
    const auto to = c[rng.below(c.size())];
    edges.emplace_back(i, to);
    ++indeg[to];
    ++outdeg[i];
    if (c.size() > 1 && outdeg[i] < r.max_degree && rng.uniform() < r.extra_edge_probability) {
      c.erase(std::find(c.begin(), c.end(), to));
      const auto extra = c[rng.below(c.size())];
      edges.emplace_back(i, extra);
      ++indeg[extra];
      ++outdeg[i];
    }
  }
  std::sort(edges.begin(), edges.end());
  return SensorGraph(std::move(nodes), std::move(edges));
}

}  // namespace floodcast
