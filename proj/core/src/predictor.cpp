#include "rep/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <set>

#include "rep/errors.hpp"
#include "rep/nls.hpp"

namespace rep {

ResponseMatrix::ResponseMatrix(Eigen::MatrixXi labels, std::vector<std::string> patient_ids)
    : labels_(std::move(labels)), patient_ids_(std::move(patient_ids)) {
  if (labels_.rows() < 1 || labels_.cols() < 1)
    throw DimensionError("response matrix must have at least one patient and one time point");
  if (static_cast<std::ptrdiff_t>(patient_ids_.size()) != labels_.rows())
    throw DimensionError("patient id count does not match response matrix rows");
  for (Eigen::Index i = 0; i < labels_.rows(); ++i)
    for (Eigen::Index t = 0; t < labels_.cols(); ++t)
      if (labels_(i, t) != 1 && labels_(i, t) != -1)
        throw NumericError("response labels must be -1 or +1");
  std::set<std::string> seen(patient_ids_.begin(), patient_ids_.end());
  if (seen.size() != patient_ids_.size())
    throw ConfigError("duplicate patient id in response matrix");
}

ResponseMatrix ResponseMatrix::select_patients(const std::vector<int>& rows) const {
  Eigen::MatrixXi sub(static_cast<Eigen::Index>(rows.size()), labels_.cols());
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= patients())
      throw DimensionError("patient selection index out of range");
    sub.row(static_cast<Eigen::Index>(r)) = labels_.row(rows[r]);
    ids.push_back(patient_ids_[static_cast<std::size_t>(rows[r])]);
  }
  return ResponseMatrix(std::move(sub), std::move(ids));
}

FeedbackMatrix build_feedback(const ResponseMatrix& y) {
  Matrix f = Matrix::Zero(y.patients(), y.times());
  for (int i = 0; i < y.patients(); ++i)
    for (int t = 1; t < y.times(); ++t) f(i, t) = f(i, t - 1) + y.label(i, t - 1);
  return FeedbackMatrix{std::move(f)};
}

Standardizer Standardizer::fit(const Matrix& features) {
  if (features.rows() < 1 || features.cols() < 1)
    throw DimensionError("cannot fit standardizer on an empty feature matrix");
  Standardizer s;
  s.mean = features.colwise().mean();
  const Matrix centered = features.rowwise() - s.mean.transpose();
  s.scale =
      (centered.array().square().colwise().sum() / static_cast<double>(features.rows()))
          .sqrt()
          .transpose();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j)
    if (s.scale(j) < 1e-12) s.scale(j) = 1.0;  // constant gene: center only
  return s;
}

Vector Standardizer::transform(const Vector& x) const {
  if (x.size() != mean.size()) throw DimensionError("standardizer dimension mismatch");
  return (x - mean).cwiseQuotient(scale);
}

Matrix Standardizer::transform(const Matrix& rows) const {
  if (rows.cols() != mean.size()) throw DimensionError("standardizer dimension mismatch");
  return (rows.rowwise() - mean.transpose()).array().rowwise() /
         scale.transpose().array();
}

Matrix flatten_features(const Tensor3& z) {
  Matrix x(static_cast<Eigen::Index>(z.patients()) * z.times(), z.genes());
  for (int i = 0; i < z.patients(); ++i)
    for (int t = 0; t < z.times(); ++t)
      for (int j = 0; j < z.genes(); ++j) x(i * z.times() + t, j) = z(i, j, t);
  return x;
}

Eigen::VectorXi flatten_labels(const ResponseMatrix& y) {
  Eigen::VectorXi v(static_cast<Eigen::Index>(y.patients()) * y.times());
  for (int i = 0; i < y.patients(); ++i)
    for (int t = 0; t < y.times(); ++t) v(i * y.times() + t) = y.label(i, t);
  return v;
}

Vector flatten_feedback(const FeedbackMatrix& f) {
  Vector v(f.values.rows() * f.values.cols());
  for (Eigen::Index i = 0; i < f.values.rows(); ++i)
    for (Eigen::Index t = 0; t < f.values.cols(); ++t)
      v(i * f.values.cols() + t) = f.values(i, t);
  return v;
}

double rep_objective(const Matrix& features, const Eigen::VectorXi& labels,
                     const Vector& feedback, double rho, double lambda, const Vector& u,
                     double v, double b) {
  const Eigen::Index n = features.rows();
  if (labels.size() != n || feedback.size() != n)
    throw DimensionError("objective inputs must agree on the sample count");
  if (u.size() != features.cols()) throw DimensionError("weight vector length mismatch");
  if (n == 0) throw DimensionError("objective undefined on an empty sample set");
  double loss = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double score = features.row(k).dot(u) + rho * v * feedback(k) + b;
    loss += std::max(0.0, 1.0 - static_cast<double>(labels(k)) * score);
  }
  return loss / static_cast<double>(n) + 0.5 * lambda * (u.squaredNorm() + v * v);
}

namespace {

// Euclidean projection onto the L1 ball of the given radius (sort-based).
void project_l1(Vector& w, double radius) {
  if (w.lpNorm<1>() <= radius) return;
  Vector mu = w.cwiseAbs();
  std::sort(mu.data(), mu.data() + mu.size(), std::greater<double>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    cumulative += mu(i);
    const double candidate = (cumulative - radius) / static_cast<double>(i + 1);
    if (mu(i) - candidate > 0.0) theta = candidate;
  }
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double mag = std::max(std::abs(w(i)) - theta, 0.0);
    w(i) = w(i) < 0.0 ? -mag : mag;
  }
}

void validate_train_options(const TrainOptions& opts) {
  if (!(opts.lambda >= 0.0) || !std::isfinite(opts.lambda))
    throw ConfigError("regularization weight must be finite and nonnegative");
  if (!std::isfinite(opts.rho)) throw ConfigError("feedback scale must be finite");
  if (opts.epochs < 1) throw ConfigError("epoch count must be positive");
  if (!(opts.step0 > 0.0) || !std::isfinite(opts.step0))
    throw ConfigError("initial step size must be positive");
  if (opts.l1_radius && (!(*opts.l1_radius > 0.0) || !std::isfinite(*opts.l1_radius)))
    throw ConfigError("L1 radius must be positive");
}

}  // namespace

std::pair<RepModel, TrainReport> train(const Tensor3& z, const ResponseMatrix& y,
                                       const TrainOptions& opts) {
  validate_train_options(opts);
  if (z.patients() != y.patients() || z.times() != y.times())
    throw DimensionError("feature tensor and label matrix disagree on patients or times");
  for (double value : z.data())
    if (!std::isfinite(value)) throw NumericError("feature tensor contains non-finite entries");

  const Matrix raw = flatten_features(z);
  std::optional<Standardizer> standardizer;
  if (opts.standardize) standardizer = Standardizer::fit(raw);
  const Matrix x = standardizer ? standardizer->transform(raw) : raw;
  const Eigen::VectorXi labels = flatten_labels(y);
  const Vector feedback = flatten_feedback(build_feedback(y));
  const Eigen::Index n = x.rows();
  const Vector ylab = labels.cast<double>();

  // Deterministic full-batch descent; opts.seed is accepted for interface
  // stability but no randomness is consumed here.
  Vector u = Vector::Zero(x.cols());
  double v = 0.0;
  double b = 0.0;
  Vector best_u = u;
  double best_v = v, best_b = b;
  double best_obj = rep_objective(x, labels, feedback, opts.rho, opts.lambda, u, v, b);

  TrainReport report;
  report.objective_trace.reserve(static_cast<std::size_t>(opts.epochs) + 1);
  report.objective_trace.push_back(best_obj);

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    const double eta = opts.step0 / std::sqrt(static_cast<double>(epoch));
    Vector scores = x * u;
    scores.array() += (opts.rho * v) * feedback.array() + b;
    const Eigen::ArrayXd viol =
        ((ylab.array() * scores.array()) < 1.0).cast<double>() * ylab.array();
    const double inv_n = 1.0 / static_cast<double>(n);
    const Vector grad_u = -(x.transpose() * viol.matrix()) * inv_n;
    const double grad_v = -opts.rho * (viol * feedback.array()).sum() * inv_n;
    const double grad_b = -viol.sum() * inv_n;

    // Ridge handled as a shrink factor so huge lambda cannot overshoot.
    const double shrink = std::max(0.0, 1.0 - eta * opts.lambda);
    u = shrink * u - eta * grad_u;
    if (!opts.freeze_v) v = shrink * v - eta * grad_v;
    b -= eta * grad_b;

    if (opts.l1_radius) {
      Vector uv(u.size() + 1);
      uv << u, v;
      project_l1(uv, *opts.l1_radius);
      u = uv.head(u.size());
      if (!opts.freeze_v) v = uv(u.size());
    }

    const double obj = rep_objective(x, labels, feedback, opts.rho, opts.lambda, u, v, b);
    if (obj < best_obj) {
      best_obj = obj;
      best_u = u;
      best_v = v;
      best_b = b;
    }
    report.objective_trace.push_back(best_obj);
  }

  report.final_objective = best_obj;
  report.epochs = opts.epochs;

  RepModel model;
  model.u = std::move(best_u);
  model.v = best_v;
  model.b = best_b;
  model.rho = opts.rho;
  model.lambda = opts.lambda;
  model.l1_radius = opts.l1_radius;
  model.standardization = std::move(standardizer);
  return {std::move(model), std::move(report)};
}

std::pair<int, double> predict_step(const RepModel& model, const Vector& z_t, double y_tilde) {
  if (z_t.size() != model.u.size())
    throw DimensionError("gene vector length does not match the trained model");
  if (!z_t.allFinite() || !std::isfinite(y_tilde))
    throw NumericError("prediction inputs must be finite");
  const Vector x = model.standardization ? model.standardization->transform(z_t) : z_t;
  const double score = x.dot(model.u) + model.rho * model.v * y_tilde + model.b;
  return {score >= 0.0 ? 1 : -1, score};
}

std::size_t MaskedVector::observed_count() const {
  std::size_t n = 0;
  for (auto flag : observed) n += flag ? 1 : 0;
  return n;
}

namespace {

void validate_masked_vector(const MaskedVector& x, Eigen::Index genes) {
  if (x.values.size() != genes ||
      static_cast<Eigen::Index>(x.observed.size()) != genes)
    throw DimensionError("masked gene vector does not match the factor gene count");
  for (Eigen::Index j = 0; j < genes; ++j) {
    if (!x.observed[static_cast<std::size_t>(j)]) continue;
    const double value = x.values(j);
    if (!std::isfinite(value)) throw NumericError("observed gene value is not finite");
    if (value < 0.0) throw NumericError("observed gene value is negative");
  }
}

}  // namespace

Vector estimate_patient_latent(const MaskedVector& x_t, const Matrix& B, const Matrix& C,
                               int t, double ridge) {
  if (B.cols() != C.cols()) throw DimensionError("factor matrices disagree on rank");
  if (t < 0 || t >= C.rows()) throw DimensionError("time index outside the factor range");
  validate_masked_vector(x_t, B.rows());

  const Eigen::Index rank = B.cols();
  const auto count = static_cast<Eigen::Index>(x_t.observed_count());
  if (count < rank)
    throw UnidentifiableError("too few observed genes to identify the latent vector (" +
                              std::to_string(count) + " observed, rank " +
                              std::to_string(rank) + ")");

  Matrix design(count, rank);
  Vector target(count);
  Eigen::Index row = 0;
  for (Eigen::Index j = 0; j < B.rows(); ++j) {
    if (!x_t.observed[static_cast<std::size_t>(j)]) continue;
    design.row(row) = C.row(t).cwiseProduct(B.row(j));
    target(row) = x_t.values(j);
    ++row;
  }
  return nls_solve(design, target, ridge);
}

Vector complete_new_vector(const MaskedVector& x_t, const Matrix& B, const Matrix& C, int t,
                           double ridge) {
  const Vector latent = estimate_patient_latent(x_t, B, C, t, ridge);
  const Vector fitted = B * C.row(t).transpose().cwiseProduct(latent);
  Vector out = fitted;
  for (Eigen::Index j = 0; j < out.size(); ++j)
    if (x_t.observed[static_cast<std::size_t>(j)]) out(j) = x_t.values(j);
  return out;
}

Vector complete_patient_slice(const MaskedTensor& data, int patient, int t, const Matrix& B,
                              const Matrix& C, double ridge) {
  if (patient < 0 || patient >= data.patients())
    throw DimensionError("patient index out of range");
  if (t < 0 || t >= data.times()) throw DimensionError("time index out of range");
  if (B.rows() != data.genes() || C.rows() != data.times() || B.cols() != C.cols())
    throw DimensionError("factor matrices do not match the cohort shape");

  MaskedVector x;
  x.values.resize(data.genes());
  x.observed.resize(static_cast<std::size_t>(data.genes()));
  for (int j = 0; j < data.genes(); ++j) {
    const bool seen = data.observed(patient, j, t);
    x.observed[static_cast<std::size_t>(j)] = seen ? 1 : 0;
    x.values(j) = seen ? data.value(patient, j, t) : 0.0;
  }
  const auto rank = static_cast<std::size_t>(B.cols());
  if (x.observed_count() >= rank) return complete_new_vector(x, B, C, t, ridge);

  std::vector<std::pair<int, int>> cells;  // causal pool: (gene, time <= t)
  for (int tt = 0; tt <= t; ++tt)
    for (int j = 0; j < data.genes(); ++j)
      if (data.observed(patient, j, tt)) cells.emplace_back(j, tt);

  Vector latent = Vector::Zero(B.cols());
  if (cells.size() >= rank) {
    Matrix design(static_cast<Eigen::Index>(cells.size()), B.cols());
    Vector target(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t r = 0; r < cells.size(); ++r) {
      design.row(static_cast<Eigen::Index>(r)) =
          C.row(cells[r].second).cwiseProduct(B.row(cells[r].first));
      target(static_cast<Eigen::Index>(r)) =
          data.value(patient, cells[r].first, cells[r].second);
    }
    latent = nls_solve(design, target, ridge);
  }
  Vector out = B * C.row(t).transpose().cwiseProduct(latent);
  for (Eigen::Index j = 0; j < out.size(); ++j)
    if (x.observed[static_cast<std::size_t>(j)]) out(j) = x.values(j);
  return out;
}

Matrix forecast_gels(const MaskedVector& x_1, const Matrix& B, const Matrix& C,
                     double ridge) {
  const Vector latent = estimate_patient_latent(x_1, B, C, 0, ridge);
  Matrix course(B.rows(), C.rows());
  for (Eigen::Index t = 0; t < C.rows(); ++t)
    course.col(t) = B * C.row(t).transpose().cwiseProduct(latent);
  for (Eigen::Index j = 0; j < course.rows(); ++j)
    if (x_1.observed[static_cast<std::size_t>(j)]) course(j, 0) = x_1.values(j);
  return course;
}

CoursePrediction forecast_course(const RepModel& model, const MaskedVector& x_1,
                                 double ridge) {
  if (model.B.size() == 0 || model.C.size() == 0)
    throw ConfigError("model carries no factor matrices; cannot forecast");
  if (model.B.rows() != model.u.size())
    throw DimensionError("factor gene count does not match the trained weights");
  const Matrix course = forecast_gels(x_1, model.B, model.C, ridge);

  CoursePrediction out;
  double y_tilde = 0.0;
  for (Eigen::Index t = 0; t < course.cols(); ++t) {
    auto [label, score] = predict_step(model, course.col(t), y_tilde);
    out.labels.push_back(label);
    out.scores.push_back(score);
    y_tilde += label;  // predicted labels stand in for unknown truth
  }
  return out;
}

}  // namespace rep
