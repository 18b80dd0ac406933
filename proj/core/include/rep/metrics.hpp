#pragma once

#include <utility>
#include <vector>

namespace rep {

struct ConfusionCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;

  long total() const { return tp + fp + fn + tn; }
};

ConfusionCounts tally_confusion(const std::vector<int>& predicted,
                                const std::vector<int>& truth);

double accuracy(const ConfusionCounts& c);

struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (fpr, tpr), starts at (0,0)
  double auc = 0.0;
};

/// ROC over real-valued scores against -1/+1 labels. Tied scores collapse
/// into one threshold step; the area is the trapezoidal integral, which
/// equals the Mann-Whitney pair statistic with ties counted one half.
/// Throws MetricError when either class is absent.
RocCurve roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

}  // namespace rep
