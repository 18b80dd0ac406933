#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rep/baselines.hpp"
#include "rep/completion.hpp"
#include "rep/metrics.hpp"
#include "rep/predictor.hpp"
#include "rep/tensor.hpp"

namespace rep {

enum class CvProtocol {
  kValidationRecord,  // one seeded held-out training patient picks the hypers
  kFiveFold,          // round-robin 5-fold tuning over the training patients
};

CvProtocol parse_protocol(const std::string& name);  // "validation-record" or "5-fold"
std::string protocol_name(CvProtocol protocol);

struct HyperGrid {
  std::vector<int> ranks{2, 3, 4, 5};
  std::vector<double> lambdas{0.01, 0.1, 1.0};
  std::vector<double> rhos{0.5, 1.0, 2.0};
  std::vector<int> neighbor_counts{3, 5, 8, 10};
};

struct CvOptions {
  CvProtocol protocol = CvProtocol::kValidationRecord;
  std::uint64_t seed = 0;
  bool run_svm = true;
  bool run_knn = true;
  double completion_lambda = 1e-3;
  int completion_max_iters = 200;
  double completion_rel_tol = 1e-6;
  int train_epochs = 800;
  int tune_epochs = 250;  // cheaper inner-loop training during grid search
  double step0 = 1.0;
  double latent_ridge = kDefaultLatentRidge;
  bool standardize = true;
};

struct HyperChoice {
  int rank = 0;
  double lambda = 0.0;
  double rho = 0.0;
  int neighbors = 0;
};

/// Everything fitted for one outer fold. Baselines reuse the recursive
/// model's completion (at its chosen rank) so all methods read the same
/// features; they are tuned with 5-fold splits regardless of protocol.
struct FoldModel {
  RepModel rep;
  HyperChoice rep_choice;
  CpModel completion;
  std::optional<SvmModel> svm;
  HyperChoice svm_choice;
  std::optional<KnnModel> knn;
  HyperChoice knn_choice;
  std::optional<Standardizer> baseline_standardizer;
};

/// Fit every enabled method on the given cohort only; hyper-parameter
/// tuning splits are internal. Exposed so tests can probe train/test
/// isolation directly.
FoldModel train_fold(const MaskedTensor& train_data, const ResponseMatrix& train_y,
                     const HyperGrid& grid, const CvOptions& opts,
                     std::uint64_t fold_seed);

struct PredictionSeries {
  std::vector<int> labels;
  std::vector<double> scores;
  double acc = 0.0;
};

struct CvFold {
  std::string patient_id;
  std::map<std::string, PredictionSeries> methods;
  std::map<std::string, HyperChoice> chosen;
};

struct MethodSummary {
  double acc = 0.0;
  RocCurve roc;
};

struct CvReport {
  std::string protocol;
  std::uint64_t seed = 0;
  std::vector<std::string> methods;
  std::vector<CvFold> folds;
  std::map<std::string, MethodSummary> summary;  // pooled over all fold predictions
};

/// Leave-one-patient-out evaluation. Each fold completes and trains on the
/// remaining patients, then predicts the held-out patient one time point at
/// a time with true-past-label feedback. Deterministic for a fixed seed.
CvReport loo_cv(const MaskedTensor& data, const ResponseMatrix& y, const HyperGrid& grid,
                const CvOptions& opts);

struct MaskSweepRow {
  double rate = 0.0;
  std::uint64_t seed = 0;
  std::string method;
  double acc = 0.0;
  double auc = 0.0;
};

/// Robustness sweep: hide an extra fraction of the observed entries (before
/// any fold split), rerun loo_cv, and tabulate pooled ACC/AUC per method.
/// Rate 0 reproduces loo_cv on the untouched data exactly.
std::vector<MaskSweepRow> masking_experiment(const MaskedTensor& data,
                                             const ResponseMatrix& y,
                                             const std::vector<double>& rates,
                                             const std::vector<std::uint64_t>& seeds,
                                             const HyperGrid& grid, const CvOptions& opts);

}  // namespace rep
