#pragma once

#include <optional>
#include <string>

#include "botgraph/event_io.hpp"
#include "botgraph/feature_cache.hpp"

namespace botgraph {

struct ExtractConfig {
  WindowConfig window;
  GraphMode mode = GraphMode::weighted;
  ConvergenceConfig conv;
  int workers = 1;
  std::optional<double> duration_s;  // override; default: last event timestamp
};

struct StageTotalsMs {
  double build = 0, degree = 0, pagerank = 0, betweenness = 0, eig_hits = 0,
         clustering = 0, normalize = 0;
  double sum() const {
    return build + degree + pagerank + betweenness + eig_hits + clustering + normalize;
  }
};

struct ExtractStats {
  int64_t interval_count = 0;
  CaptureMeta meta;
  double duration_s = 0.0;
  double wall_s = 0.0;
  StageTotalsMs stage_totals;
  int64_t degenerate_intervals = 0;
};

// Runs ingest -> windowing -> per-interval feature extraction and streams
// the result into a feature cache file. Intervals are processed by a pool
// of `workers` threads and written back in index order, so the cache bytes
// are identical for any worker count. Memory stays bounded by the open
// windows plus the in-flight intervals, never the whole capture.
//
// timing_path, when non-empty, receives a per-interval, per-stage wall
// time CSV. Timing lives in its own file so cache bytes stay reproducible.
ExtractStats extract_to_cache(EventSource& source, const GroundTruth& truth,
                              const ExtractConfig& cfg, const std::string& out_path,
                              const std::string& timing_path,
                              const std::string& source_label);

}  // namespace botgraph
