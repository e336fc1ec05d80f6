#include "botgraph/features.hpp"

#include <algorithm>
#include <cmath>

#include "botgraph/errors.hpp"
#include "botgraph/util.hpp"

namespace botgraph {

void ConvergenceConfig::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (max_iters <= 0) throw ConfigError("max_iters must be positive");
  if (!(damping > 0.0) || !(damping < 1.0))
    throw ConfigError("damping must lie in (0,1)");
}

DegreeFeatures degree_features(const IntervalGraph& g) {
  const size_t n = g.node_count();
  DegreeFeatures d;
  d.out_degree.assign(n, 0.0);
  d.in_degree.assign(n, 0.0);
  d.out_neighbors.assign(n, 0.0);
  d.in_neighbors.assign(n, 0.0);

  if (g.mode == GraphMode::multigraph) {
    for (const auto& [src, dst] : g.packet_edges_by_src) {
      d.out_degree[src] += 1.0;
      d.in_degree[dst] += 1.0;
    }
  } else {
    for (int32_t v = 0; v < static_cast<int32_t>(n); ++v) {
      for (int32_t k = g.out_offsets[v]; k < g.out_offsets[v + 1]; ++k) {
        d.out_degree[v] += g.out_weights[k];
        d.in_degree[g.out_targets[k]] += g.out_weights[k];
      }
    }
  }
  for (int32_t v = 0; v < static_cast<int32_t>(n); ++v) {
    d.out_neighbors[v] = static_cast<double>(g.out_degree_unique(v));
    d.in_neighbors[v] = static_cast<double>(g.in_degree_unique(v));
  }
  return d;
}

std::vector<double> pagerank(const IntervalGraph& g, const ConvergenceConfig& cfg) {
  cfg.validate();
  const int32_t n = static_cast<int32_t>(g.node_count());
  if (n == 0) throw ConfigError("pagerank on empty graph");

  const double d = cfg.damping;
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> x(n, inv_n), next(n, 0.0);

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    double dangling = 0.0;
    for (int32_t v = 0; v < n; ++v)
      if (g.out_multiplicity[v] == 0.0) dangling += x[v];
    const double base = (1.0 - d) * inv_n + d * dangling * inv_n;

    std::fill(next.begin(), next.end(), base);
    if (g.mode == GraphMode::multigraph) {
      for (const auto& [dst, src] : g.packet_edges_by_dst)
        next[dst] += d * x[src] / g.out_multiplicity[src];
    } else {
      for (int32_t v = 0; v < n; ++v)
        for (int32_t k = g.in_offsets[v]; k < g.in_offsets[v + 1]; ++k) {
          int32_t u = g.in_sources[k];
          next[v] += d * x[u] * g.in_weights[k] / g.out_multiplicity[u];
        }
    }

    double l1 = 0.0;
    for (int32_t v = 0; v < n; ++v) l1 += std::fabs(next[v] - x[v]);
    x.swap(next);
    if (l1 < cfg.epsilon) return x;
  }

  double l1 = 0.0;
  for (int32_t v = 0; v < n; ++v) l1 += std::fabs(x[v] - next[v]);
  throw NumericError(strfmt("pagerank did not converge in %d iterations (L1 residual %.3e)",
                            cfg.max_iters, l1));
}

std::vector<double> betweenness(const IntervalGraph& g) {
  const int32_t n = static_cast<int32_t>(g.node_count());
  std::vector<double> score(n, 0.0);
  if (n <= 2) return score;

  // Brandes, BFS over the simple digraph.
  std::vector<int32_t> dist(n), order(n), queue(n);
  std::vector<double> sigma(n), delta(n);
  std::vector<std::vector<int32_t>> preds(n);

  for (int32_t s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto& p : preds) p.clear();

    dist[s] = 0;
    sigma[s] = 1.0;
    int32_t head = 0, tail = 0, visited = 0;
    queue[tail++] = s;
    while (head < tail) {
      int32_t v = queue[head++];
      order[visited++] = v;
      for (int32_t k = g.out_offsets[v]; k < g.out_offsets[v + 1]; ++k) {
        int32_t w = g.out_targets[k];
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue[tail++] = w;
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }
    for (int32_t i = visited - 1; i >= 0; --i) {
      int32_t w = order[i];
      for (int32_t v : preds[w])
        delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) score[w] += delta[w];
    }
  }

  const double norm = static_cast<double>(n - 1) * static_cast<double>(n - 2);
  for (auto& v : score) v /= norm;
  return score;
}

namespace {

// One multiply of the iterate by the (weighted) adjacency in the requested
// orientation. along_edges: new[dst] += w * x[src]; against: new[src] += w * x[dst].
void adjacency_apply(const IntervalGraph& g, const std::vector<double>& x,
                     std::vector<double>& next, bool along_edges) {
  std::fill(next.begin(), next.end(), 0.0);
  if (g.mode == GraphMode::multigraph) {
    if (along_edges) {
      for (const auto& [dst, src] : g.packet_edges_by_dst) next[dst] += x[src];
    } else {
      for (const auto& [src, dst] : g.packet_edges_by_src) next[src] += x[dst];
    }
  } else {
    const int32_t n = static_cast<int32_t>(g.node_count());
    if (along_edges) {
      for (int32_t v = 0; v < n; ++v)
        for (int32_t k = g.in_offsets[v]; k < g.in_offsets[v + 1]; ++k)
          next[v] += g.in_weights[k] * x[g.in_sources[k]];
    } else {
      for (int32_t v = 0; v < n; ++v)
        for (int32_t k = g.out_offsets[v]; k < g.out_offsets[v + 1]; ++k)
          next[v] += g.out_weights[k] * x[g.out_targets[k]];
    }
  }
}

double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double l2_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

EigHits eigenvector_hits(const IntervalGraph& g, const ConvergenceConfig& cfg) {
  cfg.validate();
  const int32_t n = static_cast<int32_t>(g.node_count());
  if (n == 0) throw ConfigError("eigenvector_hits on empty graph");

  EigHits out;
  const double start = 1.0 / std::sqrt(static_cast<double>(n));
  // Norm floor below which the iterate is considered collapsed.
  const double kZeroNorm = 1e-12;

  // Eigenvector centrality. Nonnegative adjacencies have peripheral
  // spectrum rho times roots of unity (Perron-Frobenius), so the plain
  // power iterate can settle into a periodic orbit instead of a fixed
  // point: period 2 for graphs dominated by mutual host pairs, higher
  // periods for tied disjoint cycles. A stable orbit of period p is
  // accepted as converged and resolved by averaging one full period of
  // iterates, which cancels every root-of-unity component and leaves the
  // Perron projection.
  {
    constexpr int kMaxPeriod = 16;
    std::vector<std::vector<double>> history;  // previous normalized iterates
    std::vector<double> x(n, start), next(n);
    bool converged = false, collapsed = g.packet_edge_count == 0;

    for (int iter = 0; !collapsed && !converged && iter < cfg.max_iters; ++iter) {
      adjacency_apply(g, x, next, /*along_edges=*/true);
      double norm = l2_norm(next);
      if (norm < kZeroNorm) {
        collapsed = true;
        break;
      }
      for (auto& v : next) v /= norm;

      history.push_back(x);
      if (history.size() > kMaxPeriod) history.erase(history.begin());

      for (size_t p = 1; p <= history.size(); ++p) {
        if (l2_dist(next, history[history.size() - p]) >= cfg.epsilon) continue;
        // Orbit of period p: average it (next plus the p-1 latest
        // predecessors) and renormalize.
        x = next;
        for (size_t k = 1; k < p; ++k) {
          const auto& past = history[history.size() - k];
          for (int32_t v = 0; v < n; ++v) x[v] += past[v];
        }
        double avg_norm = l2_norm(x);
        if (avg_norm < kZeroNorm * static_cast<double>(p)) {
          collapsed = true;
        } else {
          for (auto& v : x) v /= avg_norm;
          converged = true;
        }
        break;
      }
      if (!converged && !collapsed) x = next;
    }

    if (collapsed) {
      out.eigenvector.assign(n, 0.0);
      out.eigenvector_degenerate = true;
    } else if (!converged) {
      throw NumericError(strfmt("eigenvector centrality did not converge in %d iterations",
                                cfg.max_iters));
    } else {
      out.eigenvector = std::move(x);
    }
  }

  // HITS: authority gathers along edges from hub scores, hub gathers
  // against edges from authority scores.
  {
    std::vector<double> hub(n, start), auth(n, start), next(n);
    bool converged = false, collapsed = g.packet_edge_count == 0;
    for (int iter = 0; !collapsed && iter < cfg.max_iters; ++iter) {
      adjacency_apply(g, hub, next, /*along_edges=*/true);
      double a_norm = l2_norm(next);
      if (a_norm < kZeroNorm) {
        collapsed = true;
        break;
      }
      for (auto& v : next) v /= a_norm;
      double a_change = l2_dist(next, auth);
      auth.swap(next);

      adjacency_apply(g, auth, next, /*along_edges=*/false);
      double h_norm = l2_norm(next);
      if (h_norm < kZeroNorm) {
        collapsed = true;
        break;
      }
      for (auto& v : next) v /= h_norm;
      double h_change = l2_dist(next, hub);
      hub.swap(next);

      if (a_change < cfg.epsilon && h_change < cfg.epsilon) {
        converged = true;
        break;
      }
    }
    if (collapsed) {
      out.authority.assign(n, 0.0);
      out.hub.assign(n, 0.0);
      out.hits_degenerate = true;
    } else if (!converged) {
      throw NumericError(strfmt("HITS did not converge in %d iterations", cfg.max_iters));
    } else {
      out.authority = std::move(auth);
      out.hub = std::move(hub);
    }
  }

  return out;
}

std::vector<double> clustering_coeff(const IntervalGraph& g) {
  const int32_t n = static_cast<int32_t>(g.node_count());
  std::vector<double> score(n, 0.0);

  // Adjacency test on the simple digraph via binary search in the CSR row.
  auto has_edge = [&](int32_t u, int32_t w) {
    const int32_t* begin = g.out_targets.data() + g.out_offsets[u];
    const int32_t* end = g.out_targets.data() + g.out_offsets[u + 1];
    return std::binary_search(begin, end, w);
  };

  std::vector<int32_t> neigh;
  for (int32_t v = 0; v < n; ++v) {
    neigh.clear();
    neigh.insert(neigh.end(), g.out_targets.begin() + g.out_offsets[v],
                 g.out_targets.begin() + g.out_offsets[v + 1]);
    neigh.insert(neigh.end(), g.in_sources.begin() + g.in_offsets[v],
                 g.in_sources.begin() + g.in_offsets[v + 1]);
    std::sort(neigh.begin(), neigh.end());
    neigh.erase(std::unique(neigh.begin(), neigh.end()), neigh.end());

    const size_t d = neigh.size();
    if (d < 2) continue;

    int64_t links = 0;
    for (int32_t a : neigh)
      for (int32_t b : neigh)
        if (a != b && has_edge(a, b)) ++links;
    score[v] = static_cast<double>(links) /
               (static_cast<double>(d) * static_cast<double>(d - 1));
  }
  return score;
}

RawFeatures raw_features(const IntervalGraph& g, const ConvergenceConfig& cfg) {
  const size_t n = g.node_count();
  RawFeatures raw;
  raw.values.assign(n, FeatureVector{});
  if (n == 0) return raw;

  DegreeFeatures deg = degree_features(g);
  std::vector<double> pr = pagerank(g, cfg);
  std::vector<double> bc = betweenness(g);
  EigHits eh = eigenvector_hits(g, cfg);
  std::vector<double> cc = clustering_coeff(g);

  raw.eigenvector_degenerate = eh.eigenvector_degenerate;
  raw.hits_degenerate = eh.hits_degenerate;
  for (size_t v = 0; v < n; ++v) {
    raw.values[v] = {deg.out_degree[v], deg.in_degree[v],   deg.out_neighbors[v],
                     deg.in_neighbors[v], pr[v],            bc[v],
                     eh.eigenvector[v],  eh.authority[v],   eh.hub[v],
                     cc[v]};
  }
  return raw;
}

std::vector<FeatureVector> normalize_features(const RawFeatures& raw) {
  const size_t n = raw.values.size();
  std::vector<FeatureVector> out(n);
  if (n == 0) return out;

  for (int f = 0; f < kFeatureCount; ++f) {
    double lo = raw.values[0][f], hi = raw.values[0][f];
    for (size_t v = 1; v < n; ++v) {
      lo = std::min(lo, raw.values[v][f]);
      hi = std::max(hi, raw.values[v][f]);
    }
    // Spreads at rounding-noise level count as ties: a feature that is
    // constant up to the last ulp must not have its noise stretched
    // across the whole output range.
    const double tie_floor = 1e-9 * std::max(std::fabs(hi), std::fabs(lo));
    if (hi - lo <= tie_floor) {
      for (size_t v = 0; v < n; ++v) out[v][f] = 0.05;  // no signal
    } else {
      const double scale = 0.9 / (hi - lo);
      for (size_t v = 0; v < n; ++v)
        out[v][f] = std::clamp(0.05 + scale * (raw.values[v][f] - lo), 0.05, 0.95);
    }
  }
  return out;
}

IntervalFeatures extract_interval(const Interval& interval, GraphMode mode,
                                  const ConvergenceConfig& cfg) {
  IntervalFeatures out;
  out.interval_index = interval.index;
  if (interval.events.empty()) return out;

  IntervalGraph g = build_graph(interval, mode);
  try {
    RawFeatures raw = raw_features(g, cfg);
    out.hosts = g.nodes;
    out.normalized = normalize_features(raw);
    out.eigenvector_degenerate = raw.eigenvector_degenerate;
    out.hits_degenerate = raw.hits_degenerate;
  } catch (const NumericError& e) {
    throw NumericError(strfmt("interval %lld: %s",
                              static_cast<long long>(interval.index), e.what()));
  }
  return out;
}

}  // namespace botgraph
