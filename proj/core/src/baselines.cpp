#include "rep/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "rep/errors.hpp"

namespace rep {

double svm_objective(const Matrix& features, const Eigen::VectorXi& labels, double lambda,
                     const Vector& u, double b) {
  const Eigen::Index n = features.rows();
  if (labels.size() != n) throw DimensionError("objective inputs must agree on the sample count");
  if (u.size() != features.cols()) throw DimensionError("weight vector length mismatch");
  if (n == 0) throw DimensionError("objective undefined on an empty sample set");
  double loss = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double score = features.row(k).dot(u) + b;
    loss += std::max(0.0, 1.0 - static_cast<double>(labels(k)) * score);
  }
  return loss / static_cast<double>(n) + 0.5 * lambda * u.squaredNorm();
}

SvmModel svm_train_flat(const Matrix& features, const Eigen::VectorXi& labels,
                        const SvmOptions& opts) {
  if (!(opts.lambda >= 0.0) || !std::isfinite(opts.lambda))
    throw ConfigError("regularization weight must be finite and nonnegative");
  if (opts.epochs < 1) throw ConfigError("epoch count must be positive");
  if (!(opts.step0 > 0.0)) throw ConfigError("initial step size must be positive");
  const Eigen::Index n = features.rows();
  if (labels.size() != n) throw DimensionError("feature rows and label count disagree");
  if (n == 0) throw DimensionError("cannot train on an empty sample set");
  for (Eigen::Index i = 0; i < n; ++i)
    if (labels(i) != 1 && labels(i) != -1) throw NumericError("labels must be -1 or +1");
  if (!features.allFinite()) throw NumericError("features contain non-finite entries");

  const Vector ylab = labels.cast<double>();
  Vector u = Vector::Zero(features.cols());
  double b = 0.0;
  Vector best_u = u;
  double best_b = b;
  double best_obj = svm_objective(features, labels, opts.lambda, u, b);

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    const double eta = opts.step0 / std::sqrt(static_cast<double>(epoch));
    Vector scores = features * u;
    scores.array() += b;
    const Eigen::ArrayXd viol =
        ((ylab.array() * scores.array()) < 1.0).cast<double>() * ylab.array();
    const double inv_n = 1.0 / static_cast<double>(n);
    const Vector grad_u = -(features.transpose() * viol.matrix()) * inv_n;
    const double grad_b = -viol.sum() * inv_n;

    const double shrink = std::max(0.0, 1.0 - eta * opts.lambda);
    u = shrink * u - eta * grad_u;
    b -= eta * grad_b;

    const double obj = svm_objective(features, labels, opts.lambda, u, b);
    if (obj < best_obj) {
      best_obj = obj;
      best_u = u;
      best_b = b;
    }
  }

  SvmModel model;
  model.u = std::move(best_u);
  model.b = best_b;
  model.lambda = opts.lambda;
  return model;
}

SvmModel svm_train(const Tensor3& z, const ResponseMatrix& y, const SvmOptions& opts) {
  if (z.patients() != y.patients() || z.times() != y.times())
    throw DimensionError("feature tensor and label matrix disagree on patients or times");
  return svm_train_flat(flatten_features(z), flatten_labels(y), opts);
}

double svm_score(const SvmModel& model, const Vector& x) {
  if (x.size() != model.u.size())
    throw DimensionError("gene vector length does not match the trained model");
  return x.dot(model.u) + model.b;
}

int svm_predict(const SvmModel& model, const Vector& x) {
  return svm_score(model, x) >= 0.0 ? 1 : -1;
}

KnnModel knn_fit(const Matrix& features, const Eigen::VectorXi& labels, int k) {
  if (features.rows() == 0) throw DimensionError("cannot fit on an empty sample set");
  if (labels.size() != features.rows())
    throw DimensionError("feature rows and label count disagree");
  if (k < 1 || k > features.rows())
    throw ConfigError("neighbor count must lie in [1, sample count]");
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (labels(i) != 1 && labels(i) != -1) throw NumericError("labels must be -1 or +1");
  return KnnModel{features, labels, k};
}

double knn_vote_score(const KnnModel& model, const Vector& x) {
  if (x.size() != model.features.cols())
    throw DimensionError("query vector length does not match the training features");
  if (!x.allFinite()) throw NumericError("query vector must be finite");
  const Eigen::Index n = model.features.rows();
  std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    dist[static_cast<std::size_t>(i)] = {
        (model.features.row(i).transpose() - x).squaredNorm(), i};
  const auto mid = dist.begin() + model.k;
  std::partial_sort(dist.begin(), mid, dist.end());  // pair order breaks ties by row
  int votes = 0;
  for (auto it = dist.begin(); it != mid; ++it) votes += model.labels(it->second);
  return static_cast<double>(votes) / static_cast<double>(model.k);
}

int knn_predict(const KnnModel& model, const Vector& x) {
  return knn_vote_score(model, x) >= 0.0 ? 1 : -1;
}

}  // namespace rep
