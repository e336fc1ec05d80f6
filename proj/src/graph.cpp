#include "botgraph/graph.hpp"

#include <algorithm>

#include "botgraph/errors.hpp"

namespace botgraph {

GraphMode parse_graph_mode(const std::string& s) {
  if (s == "multi" || s == "multigraph") return GraphMode::multigraph;
  if (s == "weighted") return GraphMode::weighted;
  throw ConfigError("unknown graph mode '" + s + "' (expected multi|weighted)");
}

const char* graph_mode_name(GraphMode mode) {
  return mode == GraphMode::multigraph ? "multi" : "weighted";
}

IntervalGraph build_graph(const Interval& interval, GraphMode mode) {
  IntervalGraph g;
  g.mode = mode;

  g.nodes.reserve(interval.events.size() * 2);
  for (const auto& ev : interval.events) {
    g.nodes.push_back(ev.src);
    g.nodes.push_back(ev.dst);
  }
  std::sort(g.nodes.begin(), g.nodes.end());
  g.nodes.erase(std::unique(g.nodes.begin(), g.nodes.end()), g.nodes.end());

  const int32_t n = static_cast<int32_t>(g.nodes.size());
  auto index_of = [&](uint32_t host) {
    return static_cast<int32_t>(
        std::lower_bound(g.nodes.begin(), g.nodes.end(), host) - g.nodes.begin());
  };

  std::vector<std::pair<int32_t, int32_t>> edges;  // per packet, self-loops dropped
  edges.reserve(interval.events.size());
  for (const auto& ev : interval.events) {
    if (ev.src == ev.dst) {
      ++g.self_loops_dropped;
      continue;
    }
    edges.emplace_back(index_of(ev.src), index_of(ev.dst));
  }
  g.packet_edge_count = edges.size();

  std::sort(edges.begin(), edges.end());

  // Condensed CSR with multiplicities, shared by both modes.
  g.out_offsets.assign(n + 1, 0);
  g.in_offsets.assign(n + 1, 0);
  g.out_multiplicity.assign(n, 0.0);
  for (size_t i = 0; i < edges.size();) {
    size_t j = i;
    while (j < edges.size() && edges[j] == edges[i]) ++j;
    g.out_targets.push_back(edges[i].second);
    g.out_weights.push_back(static_cast<double>(j - i));
    ++g.out_offsets[edges[i].first + 1];
    g.out_multiplicity[edges[i].first] += static_cast<double>(j - i);
    i = j;
  }
  for (int32_t v = 0; v < n; ++v) g.out_offsets[v + 1] += g.out_offsets[v];

  // In-CSR from the unique edges, sorted by (dst, src).
  std::vector<std::pair<int32_t, int32_t>> rev;
  rev.reserve(g.out_targets.size());
  {
    for (int32_t u = 0; u < n; ++u)
      for (int32_t k = g.out_offsets[u]; k < g.out_offsets[u + 1]; ++k)
        rev.emplace_back(g.out_targets[k], u);  // rev[i] mirrors out edge i
    std::vector<size_t> order(rev.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return rev[a] < rev[b]; });
    g.in_sources.reserve(rev.size());
    g.in_weights.reserve(rev.size());
    for (size_t i : order) {
      ++g.in_offsets[rev[i].first + 1];
      g.in_sources.push_back(rev[i].second);
      g.in_weights.push_back(g.out_weights[i]);
    }
    for (int32_t v = 0; v < n; ++v) g.in_offsets[v + 1] += g.in_offsets[v];
  }

  if (mode == GraphMode::multigraph) {
    g.packet_edges_by_src = edges;  // already sorted by (src,dst)
    g.packet_edges_by_dst.reserve(edges.size());
    for (const auto& [s, d] : edges) g.packet_edges_by_dst.emplace_back(d, s);
    std::sort(g.packet_edges_by_dst.begin(), g.packet_edges_by_dst.end());
  }

  return g;
}

}  // namespace botgraph
