#pragma once

#include <cstdint>
#include <utility>

#include "rep/predictor.hpp"
#include "rep/tensor.hpp"

namespace rep {

struct SvmModel {
  Vector u;
  double b = 0.0;
  double lambda = 0.0;
};

struct SvmOptions {
  double lambda = 0.01;
  int epochs = 800;
  double step0 = 1.0;
  std::uint64_t seed = 0;
};

/// Mean hinge loss of the linear rule u'x + b plus the ridge penalty.
double svm_objective(const Matrix& features, const Eigen::VectorXi& labels, double lambda,
                     const Vector& u, double b);

/// Plain linear soft-margin SVM on per-sample rows; deterministic full-batch
/// subgradient descent returning the best iterate.
SvmModel svm_train_flat(const Matrix& features, const Eigen::VectorXi& labels,
                        const SvmOptions& opts);

/// Tensor-level convenience: samples are all (patient, time) gene vectors.
SvmModel svm_train(const Tensor3& z, const ResponseMatrix& y, const SvmOptions& opts);

double svm_score(const SvmModel& model, const Vector& x);
int svm_predict(const SvmModel& model, const Vector& x);  // score 0 resolves to +1

struct KnnModel {
  Matrix features;  // one training sample per row
  Eigen::VectorXi labels;
  int k = 5;
};

KnnModel knn_fit(const Matrix& features, const Eigen::VectorXi& labels, int k);

/// Majority vote among the k nearest training rows (Euclidean distance).
/// Distance ties resolve by lower row index; vote ties resolve to +1.
int knn_predict(const KnnModel& model, const Vector& x);

/// Signed vote share in [-1, 1]: (positive votes - negative votes) / k.
/// The predicted label is the sign of this score (0 resolves to +1).
double knn_vote_score(const KnnModel& model, const Vector& x);

}  // namespace rep
