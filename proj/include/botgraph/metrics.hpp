#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace botgraph {

struct ConfusionCounts {
  int64_t tp = 0, tn = 0, fp = 0, fn = 0;
  int64_t total() const { return tp + tn + fp + fn; }
};

// Rates are absent (not zero) when their denominator is empty, e.g.
// precision with tp+fp = 0. Complements are derived as 1 - rate so the
// identities tpr + fnr = 1 and tnr + fpr = 1 hold exactly in doubles.
struct MetricSet {
  ConfusionCounts counts;
  std::optional<double> accuracy, tpr, tnr, fpr, fnr, precision, recall, f_measure;
};

MetricSet metrics(const ConfusionCounts& counts);

ConfusionCounts confusion_at(std::span<const std::pair<double, bool>> scored,
                             double threshold);

struct RocPoint {
  double fpr = 0.0, tpr = 0.0;
  double threshold = 0.0;  // score cutoff producing this point; +inf at (0,0)
};

// Thresholds at every distinct score, ties processed together; the curve
// runs from (0,0) to (1,1) and auroc is the trapezoidal area, equal to the
// normalized Mann-Whitney U statistic.
struct RocCurve {
  std::vector<RocPoint> points;
  double auroc = 0.0;
};

RocCurve roc(std::span<const std::pair<double, bool>> scored);

// Index of the ROC point maximizing Youden's J = tpr - fpr; earliest
// (highest-threshold) point wins ties.
size_t youden_index(const RocCurve& curve);

}  // namespace botgraph
