#pragma once

#include <cstdint>

#include "rep/predictor.hpp"
#include "rep/tensor.hpp"

namespace rep {

struct SyntheticSpec {
  int patients = 30;
  int genes = 50;
  int times = 7;
  int rank = 3;
  double noise_std = 0.05;    // additive Gaussian, clipped at zero
  double missing_rate = 0.0;  // fraction of entries hidden, floor(rate * I*J*K)
  double persistence = 0.8;   // chance a label repeats the previous time point
  std::uint64_t seed = 0;
};

/// The label-generating rule: sign(w'g + c*ytilde + b) on noiseless gene
/// values, where ytilde accumulates the patient's past labels.
struct PlantedRule {
  Vector gene_weights;
  double feedback_weight = 0.0;
  double bias = 0.0;
};

struct SyntheticData {
  MaskedTensor tensor;
  ResponseMatrix labels;
  CpModel truth;
  PlantedRule rule;
};

/// Deterministic synthetic cohort: a random nonnegative rank-F model plus
/// clipped Gaussian noise, labels from a feedback-coupled planted rule with
/// class balance kept inside [1/3, 2/3] by redrawing the rule weights.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace rep
