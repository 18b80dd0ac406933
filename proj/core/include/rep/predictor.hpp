#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rep/tensor.hpp"

namespace rep {

/// I x K matrix of drug-response labels, every entry exactly -1 or +1.
class ResponseMatrix {
public:
  ResponseMatrix() = default;
  ResponseMatrix(Eigen::MatrixXi labels, std::vector<std::string> patient_ids);

  int patients() const { return static_cast<int>(labels_.rows()); }
  int times() const { return static_cast<int>(labels_.cols()); }
  int label(int i, int t) const { return labels_(i, t); }
  const Eigen::MatrixXi& labels() const { return labels_; }
  const std::vector<std::string>& patient_ids() const { return patient_ids_; }

  ResponseMatrix select_patients(const std::vector<int>& rows) const;

private:
  Eigen::MatrixXi labels_;
  std::vector<std::string> patient_ids_;
};

/// Accumulated past responses: column 1 is zero and
/// value(i, t) = value(i, t-1) + label(i, t-1) for t >= 2.
struct FeedbackMatrix {
  Matrix values;  // patients x times
};

/// Pure function of the label matrix (the response at time 0 is taken as 0,
/// i.e. unknown).
FeedbackMatrix build_feedback(const ResponseMatrix& y);

/// Per-gene centering and scaling, fitted on training features only.
struct Standardizer {
  Vector mean;
  Vector scale;  // population std, floored at 1 for constant genes

  static Standardizer fit(const Matrix& features);  // rows are samples
  Vector transform(const Vector& x) const;
  Matrix transform(const Matrix& rows) const;
};

/// Trained recursive predictor: linear gene weights u, feedback weight v,
/// intercept b, scored as  u'z + rho*v*ytilde + b.
struct RepModel {
  Vector u;
  double v = 0.0;
  double b = 0.0;
  double rho = 1.0;
  double lambda = 0.0;
  std::optional<double> l1_radius;
  Matrix B;  // gene factors, for prediction-time completion
  Matrix C;  // time factors
  std::optional<Standardizer> standardization;

  int rank() const { return static_cast<int>(B.cols()); }
};

struct TrainOptions {
  double rho = 1.0;
  double lambda = 0.01;
  std::optional<double> l1_radius;  // L1 ball constraint on [u; v] when set
  int epochs = 800;
  double step0 = 1.0;  // step schedule step0 / sqrt(epoch)
  std::uint64_t seed = 0;
  bool standardize = true;
  bool freeze_v = false;  // pin v at 0; reduces the model to a plain linear SVM
};

struct TrainReport {
  std::vector<double> objective_trace;  // best-so-far objective per epoch
  double final_objective = 0.0;
  int epochs = 0;
};

/// Flattened training views of the I x J x K feature tensor: row (i*K + t)
/// holds the gene vector of patient i at time t.
Matrix flatten_features(const Tensor3& z);
Eigen::VectorXi flatten_labels(const ResponseMatrix& y);
Vector flatten_feedback(const FeedbackMatrix& f);

/// Mean hinge loss of the scoring rule plus the ridge penalty:
///   (1/N) sum_n max(0, 1 - y_n (u'x_n + rho*v*f_n + b)) + (lambda/2)(|u|^2 + v^2)
/// This is the exact objective train() minimizes; exposed for verification.
double rep_objective(const Matrix& features, const Eigen::VectorXi& labels,
                     const Vector& feedback, double rho, double lambda, const Vector& u,
                     double v, double b);

/// Projected subgradient training of the recursive hinge objective. Feedback
/// is built from the true past labels (teacher forcing). Deterministic; the
/// returned parameters are the best iterate seen.
std::pair<RepModel, TrainReport> train(const Tensor3& z, const ResponseMatrix& y,
                                       const TrainOptions& opts);

/// One prediction: score = u'z_t + rho*v*y_tilde + b; the label is +1 when
/// the score is >= 0 (ties resolve positive).
std::pair<int, double> predict_step(const RepModel& model, const Vector& z_t, double y_tilde);

/// Gene vector with an observation flag per coordinate.
struct MaskedVector {
  Vector values;
  std::vector<std::uint8_t> observed;

  std::size_t observed_count() const;
};

inline constexpr double kDefaultLatentRidge = 1e-8;

/// Latent representation of a new patient from the observed subset of one
/// time slice: nonnegative least squares with design rows C(t,:) .* B(j,:).
/// Requires at least rank-many observed coordinates.
Vector estimate_patient_latent(const MaskedVector& x_t, const Matrix& B, const Matrix& C,
                               int t, double ridge = kDefaultLatentRidge);

/// Observed coordinates pass through; missing ones come from the latent fit.
Vector complete_new_vector(const MaskedVector& x_t, const Matrix& B, const Matrix& C, int t,
                           double ridge = kDefaultLatentRidge);

/// Dense feature vector for one slice of a masked cohort. When the slice
/// alone cannot identify the latent vector, falls back to every entry the
/// patient has shown up to time t, and then to a zero latent, so callers
/// always get a usable vector.
Vector complete_patient_slice(const MaskedTensor& data, int patient, int t, const Matrix& B,
                              const Matrix& C, double ridge = kDefaultLatentRidge);

/// Full-course gene forecast from first-time-point measurements only. Column
/// t is the model slice for the latent fitted at t=0; observed coordinates of
/// column 0 are replaced by the measurements.
Matrix forecast_gels(const MaskedVector& x_1, const Matrix& B, const Matrix& C,
                     double ridge = kDefaultLatentRidge);

struct CoursePrediction {
  std::vector<int> labels;
  std::vector<double> scores;
};

/// Label-free treatment-course prediction: forecast the gene trajectory from
/// the first time point, then roll the classifier forward feeding back its
/// own predicted labels.
CoursePrediction forecast_course(const RepModel& model, const MaskedVector& x_1,
                                 double ridge = kDefaultLatentRidge);

}  // namespace rep
