#include "botgraph/metrics.hpp"

#include <algorithm>
#include <limits>

#include "botgraph/errors.hpp"

namespace botgraph {

MetricSet metrics(const ConfusionCounts& c) {
  MetricSet m;
  m.counts = c;
  const int64_t total = c.total();
  const int64_t pos = c.tp + c.fn;
  const int64_t neg = c.tn + c.fp;

  if (total > 0)
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
  if (pos > 0) {
    m.tpr = static_cast<double>(c.tp) / static_cast<double>(pos);
    m.fnr = 1.0 - *m.tpr;
    m.recall = m.tpr;
  }
  if (neg > 0) {
    m.tnr = static_cast<double>(c.tn) / static_cast<double>(neg);
    m.fpr = 1.0 - *m.tnr;
  }
  if (c.tp + c.fp > 0)
    m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (m.precision && m.recall && (*m.precision + *m.recall) > 0.0)
    m.f_measure = 2.0 * (*m.recall * *m.precision) / (*m.recall + *m.precision);
  return m;
}

ConfusionCounts confusion_at(std::span<const std::pair<double, bool>> scored,
                             double threshold) {
  ConfusionCounts c;
  for (const auto& [score, label] : scored) {
    const bool flagged = score >= threshold;
    if (label)
      (flagged ? c.tp : c.fn)++;
    else
      (flagged ? c.fp : c.tn)++;
  }
  return c;
}

RocCurve roc(std::span<const std::pair<double, bool>> scored) {
  int64_t pos = 0, neg = 0;
  for (const auto& [score, label] : scored) (label ? pos : neg)++;
  if (pos == 0 || neg == 0)
    throw ConfigError("ROC requires both classes in the score set");

  std::vector<std::pair<double, bool>> sorted(scored.begin(), scored.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});

  int64_t tp = 0, fp = 0;
  size_t i = 0;
  while (i < sorted.size()) {
    const double s = sorted[i].first;
    while (i < sorted.size() && sorted[i].first == s) {
      (sorted[i].second ? tp : fp)++;
      ++i;
    }
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos), s});
  }

  double area = 0.0;
  for (size_t k = 1; k < curve.points.size(); ++k) {
    const auto& a = curve.points[k - 1];
    const auto& b = curve.points[k];
    area += (b.fpr - a.fpr) * (b.tpr + a.tpr) * 0.5;
  }
  curve.auroc = area;
  return curve;
}

size_t youden_index(const RocCurve& curve) {
  size_t best = 0;
  double best_j = -1.0;
  for (size_t k = 0; k < curve.points.size(); ++k) {
    const double j = curve.points[k].tpr - curve.points[k].fpr;
    if (j > best_j) {
      best_j = j;
      best = k;
    }
  }
  return best;
}

}  // namespace botgraph
