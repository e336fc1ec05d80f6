#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "botgraph/event.hpp"
#include "botgraph/features.hpp"
#include "botgraph/graph.hpp"
#include "botgraph/windowing.hpp"

namespace botgraph {

// The explicit artifact between `extract` and `train`/`eval`: extraction is
// by far the most expensive stage, so features are computed once and
// cached. CSV body `interval_index,node,f1..f10` with 9 significant
// digits; `#` comment lines carry the producing config (header) and the
// stream totals (trailer, since counts are only known after one pass).
struct FeatureCacheHeader {
  WindowConfig window;
  GraphMode mode = GraphMode::weighted;
  ConvergenceConfig conv;
  std::string source;  // label of the event input, informational
  std::vector<std::pair<uint32_t, double>> truth;  // sorted host -> infection time

  // Trailer fields.
  int64_t interval_count = 0;
  double duration_s = 0.0;
  uint64_t event_count = 0;
  uint64_t host_count = 0;
  uint64_t skipped_non_ipv4 = 0;
  std::vector<int64_t> degenerate_intervals;  // eigenvector/HITS collapse
};

struct FeatureCache {
  FeatureCacheHeader header;
  struct Row {
    int64_t interval;
    uint32_t host;
    FeatureVector f;
  };
  std::vector<Row> rows;  // ordered by (interval, host)

  GroundTruth ground_truth() const;
};

// Streaming writer; append() must be called in interval-index order.
class FeatureCacheWriter {
 public:
  FeatureCacheWriter(const std::string& path, const FeatureCacheHeader& header);
  void append(const IntervalFeatures& iv);
  // Writes the trailer. interval_count/duration/meta come from the caller
  // because only the driver knows them once the stream is exhausted.
  void close(int64_t interval_count, double duration_s, const CaptureMeta& meta);

 private:
  std::string path_;
  std::ofstream out_;
  std::vector<int64_t> degenerate_;
  bool closed_ = false;
};

FeatureCache read_feature_cache(const std::string& path);

}  // namespace botgraph
