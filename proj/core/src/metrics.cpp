#include "rep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rep/errors.hpp"

namespace rep {

ConfusionCounts tally_confusion(const std::vector<int>& predicted,
                                const std::vector<int>& truth) {
  if (predicted.size() != truth.size())
    throw MetricError("prediction and truth lengths disagree");
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] != 1 && truth[i] != -1) throw MetricError("labels must be -1 or +1");
    if (predicted[i] != 1 && predicted[i] != -1)
      throw MetricError("labels must be -1 or +1");
    if (truth[i] == 1)
      (predicted[i] == 1 ? c.tp : c.fn)++;
    else
      (predicted[i] == 1 ? c.fp : c.tn)++;
  }
  return c;
}

double accuracy(const ConfusionCounts& c) {
  if (c.total() == 0) throw MetricError("accuracy undefined on an empty sample set");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

RocCurve roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw MetricError("score and label lengths disagree");
  if (scores.empty()) throw MetricError("ROC undefined on an empty sample set");
  long pos = 0, neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1 && labels[i] != -1) throw MetricError("labels must be -1 or +1");
    if (!std::isfinite(scores[i])) throw MetricError("scores must be finite");
    (labels[i] == 1 ? pos : neg)++;
  }
  if (pos == 0 || neg == 0)
    throw MetricError("ROC undefined when only one class is present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.emplace_back(0.0, 0.0);
  long tp = 0, fp = 0;
  double auc = 0.0;
  double prev_fpr = 0.0, prev_tpr = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (labels[order[i]] == 1 ? tp : fp)++;
      ++i;
    }
    const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
    const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
    auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
    curve.points.emplace_back(fpr, tpr);
    prev_fpr = fpr;
    prev_tpr = tpr;
  }
  curve.auc = auc;
  return curve;
}

}  // namespace rep
