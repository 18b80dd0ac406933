#include "rep/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rep/errors.hpp"
#include "rep/rng.hpp"

namespace rep {

namespace {

constexpr double kFeedbackScale = 1.0;  // rule feedback weight, in units of gene-score sd
constexpr int kMaxRuleAttempts = 256;

std::vector<std::string> make_patient_ids(int count) {
  const int width = std::max(3, static_cast<int>(std::to_string(count).size()));
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(count));
  for (int i = 1; i <= count; ++i) {
    std::string digits = std::to_string(i);
    ids.push_back("P" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') +
                  digits);
  }
  return ids;
}

double median(std::vector<double> values) {
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                   values.end());
  double hi = values[mid];
  if (values.size() % 2 == 0) {
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid) - 1,
                     values.begin() + static_cast<std::ptrdiff_t>(mid));
    return (values[mid - 1] + hi) / 2.0;
  }
  return hi;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.patients < 1 || spec.genes < 1 || spec.times < 1)
    throw ConfigError("cohort dimensions must be positive");
  if (spec.rank < 1) throw ConfigError("rank must be positive");
  if (!(spec.noise_std >= 0.0) || !std::isfinite(spec.noise_std))
    throw ConfigError("noise level must be finite and nonnegative");
  if (!(spec.missing_rate >= 0.0) || !(spec.missing_rate < 1.0))
    throw ConfigError("missing rate must lie in [0, 1)");
  if (!(spec.persistence >= 0.0) || !(spec.persistence <= 1.0))
    throw ConfigError("persistence must lie in [0, 1]");

  SeedStream streams(spec.seed);
  Rng model_rng(streams.derive("synth/model"));
  CpModel truth =
      CpModel::random_uniform(spec.patients, spec.genes, spec.times, spec.rank, model_rng);
  const Tensor3 clean = reconstruct(truth);

  Tensor3 noisy = clean;
  if (spec.noise_std > 0.0) {
    Rng noise_rng(streams.derive("synth/noise"));
    for (double& value : noisy.data())
      value = std::max(0.0, value + spec.noise_std * noise_rng.normal());
  }

  // Labels follow the planted recursive rule on the noiseless values; the
  // weights are redrawn until both classes hold at least a third of the
  // cohort. The bias centers the gene score at its median and the feedback
  // weight is sized relative to the gene-score spread, so past responses
  // matter without drowning the expression signal.
  const int total = spec.patients * spec.times;
  Eigen::MatrixXi labels(spec.patients, spec.times);
  PlantedRule rule;
  bool balanced = false;
  for (int attempt = 0; attempt < kMaxRuleAttempts && !balanced; ++attempt) {
    Rng rule_rng(streams.derive("synth/rule/" + std::to_string(attempt)));
    Rng label_rng(streams.derive("synth/labels/" + std::to_string(attempt)));

    Vector w(spec.genes);
    for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = rule_rng.normal();
    w /= w.norm();

    Matrix base(spec.patients, spec.times);
    std::vector<double> pooled;
    pooled.reserve(static_cast<std::size_t>(total));
    for (int i = 0; i < spec.patients; ++i)
      for (int t = 0; t < spec.times; ++t) {
        double s = 0.0;
        for (int j = 0; j < spec.genes; ++j) s += w(j) * clean(i, j, t);
        base(i, t) = s;
        pooled.push_back(s);
      }
    const double bias = -median(pooled);
    double var = 0.0;
    for (double s : pooled) {
      const double centered = s + bias;
      var += centered * centered;
    }
    const double feedback_weight = kFeedbackScale * std::sqrt(var / total);

    int positives = 0;
    for (int i = 0; i < spec.patients; ++i) {
      double y_tilde = 0.0;
      for (int t = 0; t < spec.times; ++t) {
        const double score = base(i, t) + bias + feedback_weight * y_tilde;
        const int rule_label = score >= 0.0 ? 1 : -1;
        int label = rule_label;
        if (t > 0 && label_rng.uniform01() < spec.persistence) label = labels(i, t - 1);
        labels(i, t) = label;
        positives += label == 1 ? 1 : 0;
        y_tilde += label;
      }
    }
    const double share = static_cast<double>(positives) / total;
    if (share >= 1.0 / 3.0 && share <= 2.0 / 3.0) {
      rule = PlantedRule{std::move(w), feedback_weight, bias};
      balanced = true;
    }
  }
  if (!balanced)
    throw NumericError("could not draw a class-balanced labeling rule");

  std::vector<std::uint8_t> all_observed(noisy.data().size(), 1);
  MaskedTensor tensor(std::move(noisy), std::move(all_observed));
  const auto hidden = static_cast<std::size_t>(
      spec.missing_rate * static_cast<double>(tensor.observed_count()));
  if (hidden > 0) {
    Rng mask_rng(streams.derive("synth/mask"));
    tensor = tensor.with_hidden(hidden, mask_rng);
  }

  return SyntheticData{std::move(tensor),
                       ResponseMatrix(std::move(labels), make_patient_ids(spec.patients)),
                       std::move(truth), std::move(rule)};
}

}  // namespace rep
