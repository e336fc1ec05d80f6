#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "botgraph/graph.hpp"

namespace botgraph {

struct ConvergenceConfig {
  double epsilon = 1e-6;   // iteration stopping tolerance
  int max_iters = 10000;
  double damping = 0.85;   // PageRank only

  void validate() const;
};

// Canonical feature order. Every consumer (cache files, time series, the
// classifier input layer) relies on this order.
inline constexpr int kFeatureCount = 10;
inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {
    "out_degree",  "in_degree", "out_neighbors", "in_neighbors", "pagerank",
    "betweenness", "eigenvector", "authority",   "hub",          "clustering"};

using FeatureVector = std::array<double, kFeatureCount>;

// Unnormalized per-node features for one interval, row order matching
// graph.nodes.
struct RawFeatures {
  std::vector<FeatureVector> values;
  bool eigenvector_degenerate = false;  // power iteration had no support
  bool hits_degenerate = false;
};

struct DegreeFeatures {
  std::vector<double> out_degree, in_degree;      // packet multiplicity
  std::vector<double> out_neighbors, in_neighbors;  // distinct endpoints
};

DegreeFeatures degree_features(const IntervalGraph& g);

// Damped PageRank with uniform teleport; dangling nodes spread their mass
// uniformly. Multigraph mode walks per-packet edges, weighted mode walks
// condensed edges; scores agree within rounding. Stops when the L1 change
// drops below epsilon; exceeding max_iters raises NumericError carrying
// the residual.
std::vector<double> pagerank(const IntervalGraph& g, const ConvergenceConfig& cfg);

// Brandes betweenness over unweighted shortest paths on the simple
// digraph (multiplicities ignored), normalized by (V-1)(V-2); all zeros
// for V <= 2.
std::vector<double> betweenness(const IntervalGraph& g);

struct EigHits {
  std::vector<double> eigenvector, authority, hub;
  bool eigenvector_degenerate = false;
  bool hits_degenerate = false;
};

// Eigenvector centrality: power method where score flows along edge
// direction (a node is central when central nodes point at it), L2
// normalized. HITS authority/hub by the alternating power method, each L2
// normalized. A collapsed iterate (no cycle / no edge support) yields
// all-zero vectors plus a degenerate flag instead of failing the interval.
EigHits eigenvector_hits(const IntervalGraph& g, const ConvergenceConfig& cfg);

// Local clustering on the simple digraph: directed edges among the
// distinct in/out neighbor set of v over d*(d-1); nodes with d < 2 score 0.
std::vector<double> clustering_coeff(const IntervalGraph& g);

RawFeatures raw_features(const IntervalGraph& g, const ConvergenceConfig& cfg);

// Per-interval min-max rescale of every feature into [0.05, 0.95]:
//   f_n = 0.05 + 0.9 * (f - f_min) / (f_max - f_min)
// A constant feature (f_max == f_min) maps every node to 0.05.
std::vector<FeatureVector> normalize_features(const RawFeatures& raw);

struct IntervalFeatures {
  int64_t interval_index = 0;
  std::vector<uint32_t> hosts;  // sorted, parallel to `normalized`
  std::vector<FeatureVector> normalized;
  bool eigenvector_degenerate = false;
  bool hits_degenerate = false;
};

// build_graph -> all feature ops -> normalize. Empty interval -> empty map.
IntervalFeatures extract_interval(const Interval& interval, GraphMode mode,
                                  const ConvergenceConfig& cfg);

}  // namespace botgraph
