#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "botgraph/feature_cache.hpp"

namespace botgraph {

// Per-host feature sequence across *all* intervals of one capture, with an
// all-zero vector wherever the host sent and received nothing.
struct NodeTimeSeries {
  std::string host;
  std::vector<FeatureVector> seq;   // length = capture interval count
  std::vector<uint8_t> present;     // 1 where the host had packets
  std::vector<uint8_t> label;       // malicious at that interval

  bool ever_malicious() const {
    for (uint8_t l : label)
      if (l) return true;
    return false;
  }
};

struct SamplingConfig {
  int neg_pos_ratio = 10;  // benign hosts kept per malicious host
  int slice_len = 5;       // intervals per training window
  int slice_overlap = 2;   // shared intervals between consecutive windows
  uint64_t seed = 0;

  int stride() const { return slice_len - slice_overlap; }
  void validate() const;
};

// Fixed-length training/testing slice: slice_len consecutive rows of one
// host's sequence. Labeled positive iff the host is malicious at any
// covered interval.
struct WindowSample {
  std::string host;
  int64_t start_interval = 0;
  std::vector<FeatureVector> rows;  // slice_len rows
  bool label = false;
};

// One series per host ever seen in the cache; zero vectors fill absences;
// labels follow the interval-start rule (infection_time <= start).
std::vector<NodeTimeSeries> assemble(const FeatureCache& cache);
std::vector<NodeTimeSeries> assemble(const std::vector<FeatureCache::Row>& rows,
                                     int64_t interval_count, double step_s,
                                     const GroundTruth& truth);

// Keeps every malicious host and min(available, ratio * malicious_count)
// benign hosts drawn uniformly without replacement; deterministic given
// the seed. Zero malicious hosts is a configuration error (skip
// undersampling instead).
std::vector<NodeTimeSeries> undersample(const std::vector<NodeTimeSeries>& series,
                                        const SamplingConfig& cfg);

// Windows start at 0, stride, 2*stride, ...; a trailing remainder shorter
// than slice_len is dropped. Hosts with sequences shorter than slice_len
// yield no samples.
std::vector<WindowSample> slice_windows(const std::vector<NodeTimeSeries>& series,
                                        const SamplingConfig& cfg);

// Debug dump / cross-language comparison format:
// host,start_interval,label,m00..m<slice_len*10-1>
void write_window_samples_csv(const std::string& path,
                              const std::vector<WindowSample>& samples,
                              const std::vector<std::string>& header_comments = {});

}  // namespace botgraph
