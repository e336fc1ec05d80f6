#pragma once

#include <optional>
#include <string>
#include <vector>

#include "botgraph/lstm.hpp"
#include "botgraph/metrics.hpp"
#include "botgraph/timeseries.hpp"

namespace botgraph {

struct SplitConfig {
  double train_fraction = 0.7;
  uint64_t seed = 0;

  void validate() const;
};

// Host-level stratified split: all windows of one host land on the same
// side (windows of a host overlap, so a window-level split would leak
// near-duplicates across the boundary). Per class, floor(train_fraction *
// host_count) hosts go to train via a seeded shuffle.
struct SplitResult {
  std::vector<WindowSample> train, test;
  struct HostAssignment {
    std::string host;
    bool malicious = false;
    bool to_train = false;
  };
  std::vector<HostAssignment> manifest;
};

SplitResult split(const std::vector<WindowSample>& samples, const SplitConfig& cfg);

enum class EvalMode { within, cross, combined };

EvalMode parse_eval_mode(const std::string& s);
const char* eval_mode_name(EvalMode mode);

struct Dataset {
  std::string name;
  std::vector<NodeTimeSeries> series;
};

struct EvalConfig {
  SamplingConfig sampling;
  SplitConfig split_cfg;
  TrainConfig train;
  double threshold = 0.5;
  bool apply_undersample = true;
};

struct HostVerdict {
  std::string host;
  size_t windows = 0;
  double max_score = 0.0, mean_score = 0.0;
  bool truth_bot = false;
  bool flagged_default = false;
  bool flagged_youden = false;
};

struct EvalEntry {
  std::string train_name, test_name;
  bool leakage = false;  // train and test are the same full collection
  size_t train_hosts_pos = 0, train_hosts_neg = 0;
  size_t test_hosts_pos = 0, test_hosts_neg = 0;
  size_t train_windows = 0, test_windows = 0, test_windows_pos = 0;
  double final_train_loss = 0.0;
  RocCurve curve;
  double youden_threshold = 0.5;
  MetricSet at_threshold;  // at EvalConfig::threshold
  MetricSet at_youden;
  std::vector<HostVerdict> verdicts;
};

struct AurocMatrix {
  std::vector<std::string> names;            // dataset order
  std::vector<std::vector<double>> values;   // [test][train]
  std::vector<double> test_avg;              // per test dataset, across trains
};

struct ModeReport {
  EvalMode mode = EvalMode::within;
  std::vector<EvalEntry> entries;
  std::optional<AurocMatrix> matrix;  // cross mode only
};

// The paper-style evaluation protocols:
//   within:   split each collection 70/30 by host, train/test inside it
//   cross:    train on 100% of A, test on 100% of B, for all ordered pairs
//             (the A==A diagonal is emitted with a leakage warning)
//   combined: pool every collection, then split 70/30 by host
// Undersampling, when enabled, runs before slicing, and metrics are
// reported on the undersampled evaluation set with class ratios attached.
ModeReport evaluate_modes(const std::vector<Dataset>& datasets, EvalMode mode,
                          const EvalConfig& cfg);

// Applies an already-trained model to each collection in full (no split,
// no training); useful for scoring a saved model against labeled captures.
ModeReport evaluate_pretrained(const LstmParams& params,
                               const std::vector<Dataset>& datasets,
                               const EvalConfig& cfg);

// report.txt, report.jsonl, per-entry ROC CSV/SVG + host verdicts, and the
// AUROC matrix CSV for cross mode. Contents are deterministic: no wall
// times or dates.
void write_mode_report(const ModeReport& report, const EvalConfig& cfg,
                       const std::string& out_dir);

void write_roc_csv(const RocCurve& curve, const std::string& path,
                   const std::vector<std::string>& header_comments = {});
void write_roc_svg(const RocCurve& curve, const std::string& title,
                   const std::string& path);

}  // namespace botgraph
