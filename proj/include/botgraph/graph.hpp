#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "botgraph/windowing.hpp"

namespace botgraph {

// Multigraph keeps one directed edge per packet; weighted condenses
// duplicate edges into a single edge carrying the packet count. Feature
// values are required to agree between the two within 1e-9; weighted mode
// exists purely for throughput.
enum class GraphMode { multigraph, weighted };

GraphMode parse_graph_mode(const std::string& s);  // "multi" | "weighted"
const char* graph_mode_name(GraphMode mode);

// Directed communication graph for one time window. Nodes are every host
// that sent or received a packet in the interval (self-loop packets are
// dropped at construction, but their endpoints remain as isolated nodes).
//
// Both modes carry the condensed unique-edge CSR view: path-based features
// (betweenness, clustering, neighbor counts) always run on the simple
// digraph, and degree features read multiplicities off the edge weights.
// Spectral iterations (PageRank, eigenvector, HITS) traverse per-packet
// edge lists in multigraph mode and the weighted CSR in weighted mode;
// that traversal difference is the entire cost gap between the modes.
struct IntervalGraph {
  GraphMode mode = GraphMode::weighted;
  std::vector<uint32_t> nodes;  // sorted distinct hosts

  // Unique-edge CSR, successors/predecessors sorted per node.
  std::vector<int32_t> out_offsets, out_targets;
  std::vector<double> out_weights;  // packet multiplicity per unique edge
  std::vector<int32_t> in_offsets, in_sources;
  std::vector<double> in_weights;

  // Total outgoing packet multiplicity per node (PageRank denominator).
  std::vector<double> out_multiplicity;

  // Multigraph mode only: one entry per packet, both orientations.
  std::vector<std::pair<int32_t, int32_t>> packet_edges_by_src;  // (src,dst)
  std::vector<std::pair<int32_t, int32_t>> packet_edges_by_dst;  // (dst,src)

  uint64_t packet_edge_count = 0;  // non-self-loop packets
  uint64_t self_loops_dropped = 0;

  size_t node_count() const { return nodes.size(); }
  size_t unique_edge_count() const { return out_targets.size(); }
  int32_t out_degree_unique(int32_t v) const { return out_offsets[v + 1] - out_offsets[v]; }
  int32_t in_degree_unique(int32_t v) const { return in_offsets[v + 1] - in_offsets[v]; }
};

IntervalGraph build_graph(const Interval& interval, GraphMode mode);

}  // namespace botgraph
