#include "rep/completion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rep/nls.hpp"

namespace rep {

namespace {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                    Eigen::RowMajor>,
                               Eigen::Unaligned, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;

double grad_tol(const Vector& c) { return 1e-12 * std::max(1.0, c.cwiseAbs().maxCoeff()); }

void check_identifiable(const MaskedTensor& x, int rank) {
  const int I = x.patients(), J = x.genes(), K = x.times();
  const long long cap = std::min<long long>({1LL * I * J, 1LL * J * K, 1LL * I * K});
  if (rank > cap)
    throw DimensionError("complete_tensor: rank " + std::to_string(rank) +
                         " exceeds the smallest unfolding dimension " + std::to_string(cap));
  std::vector<std::size_t> per_patient(I, 0), per_gene(J, 0), per_time(K, 0);
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j)
      for (int k = 0; k < K; ++k)
        if (x.observed(i, j, k)) {
          ++per_patient[i];
          ++per_gene[j];
          ++per_time[k];
        }
  for (int i = 0; i < I; ++i)
    if (per_patient[i] == 0)
      throw UnidentifiableError("complete_tensor: patient slab " + std::to_string(i) +
                                " has no observed entries");
  for (int j = 0; j < J; ++j)
    if (per_gene[j] == 0)
      throw UnidentifiableError("complete_tensor: gene slab " + std::to_string(j) +
                                " has no observed entries");
  for (int k = 0; k < K; ++k)
    if (per_time[k] == 0)
      throw UnidentifiableError("complete_tensor: time slab " + std::to_string(k) +
                                " has no observed entries");
}

/// Dense surrogate: observed entries from x, the rest from the cached
/// reconstruction g.
Tensor3 merge_observed(const MaskedTensor& x, const Tensor3& g) {
  Tensor3 z = g;
  const auto& mask = x.mask();
  const auto& xv = x.values().data();
  auto& zv = z.data();
  for (std::size_t p = 0; p < zv.size(); ++p)
    if (mask[p]) zv[p] = xv[p];
  return z;
}

double masked_objective(const MaskedTensor& x, const Tensor3& g, const CpModel& model,
                        double lambda) {
  const auto& mask = x.mask();
  const auto& xv = x.values().data();
  const auto& gv = g.data();
  double fit = 0.0;
  for (std::size_t p = 0; p < gv.size(); ++p)
    if (mask[p]) {
      const double r = xv[p] - gv[p];
      fit += r * r;
    }
  return fit + lambda * (model.A.squaredNorm() + model.B.squaredNorm() + model.C.squaredNorm());
}

/// Refit every row of `factor` by ridge NLS. `lhs` and `rhs` are the other
/// two factors in khatri-rao order; `slab(r)` maps row r of the factor to the
/// lhs.rows() x rhs.rows() unfolding slice of the surrogate tensor.
template <typename SlabFn>
void update_factor(Matrix& factor, const Matrix& lhs, const Matrix& rhs, double lambda,
                   SlabFn&& slab) {
  const int F = static_cast<int>(factor.cols());
  const Matrix gram = (lhs.transpose() * lhs).cwiseProduct(rhs.transpose() * rhs) +
                      lambda * Matrix::Identity(F, F);
  for (int r = 0; r < factor.rows(); ++r) {
    const Matrix w = slab(r) * rhs;  // lhs.rows() x F
    const Vector c = lhs.cwiseProduct(w).colwise().sum().transpose();
    factor.row(r) = nls_solve_gram(gram, c, grad_tol(c)).transpose();
  }
}

}  // namespace

CompletionResult complete_tensor(const MaskedTensor& x, const CompletionConfig& cfg) {
  if (cfg.rank < 1) throw ConfigError("complete_tensor: rank must be >= 1");
  if (cfg.lambda < 0.0) throw ConfigError("complete_tensor: lambda must be >= 0");
  if (cfg.max_iters < 1) throw ConfigError("complete_tensor: max_iters must be >= 1");
  if (!(cfg.rel_tol > 0.0)) throw ConfigError("complete_tensor: rel_tol must be > 0");
  check_identifiable(x, cfg.rank);

  const int I = x.patients(), J = x.genes(), K = x.times();
  const std::size_t JK = static_cast<std::size_t>(J) * K;

  Rng rng(SeedStream(cfg.seed).derive("completion/init"));
  CpModel model = CpModel::random_uniform(I, J, K, cfg.rank, rng);

  CompletionResult result;
  Tensor3 g = reconstruct(model);
  result.objective_trace.push_back(masked_objective(x, g, model, cfg.lambda));
  result.converged = false;

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const Tensor3 z = merge_observed(x, g);
    const double* zp = z.data().data();
    using Stride2 = Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>;

    update_factor(model.A, model.B, model.C, cfg.lambda, [&](int i) {
      return RowMajorMap(zp + i * JK, J, K, Stride2(K, 1));
    });
    update_factor(model.B, model.A, model.C, cfg.lambda, [&](int j) {
      return RowMajorMap(zp + static_cast<std::size_t>(j) * K, I, K,
                         Stride2(static_cast<Eigen::Index>(JK), 1));
    });
    update_factor(model.C, model.A, model.B, cfg.lambda, [&](int k) {
      return RowMajorMap(zp + k, I, J, Stride2(static_cast<Eigen::Index>(JK), K));
    });

    g = reconstruct(model);
    const double obj = masked_objective(x, g, model, cfg.lambda);
    const double prev = result.objective_trace.back();
    result.objective_trace.push_back(obj);
    result.iterations = iter;
    if (std::abs(prev - obj) / std::max(prev, 1e-12) < cfg.rel_tol) {
      result.converged = true;
      break;
    }
  }

  result.completed = merge_observed(x, g);
  result.model = std::move(model);
  return result;
}

Tensor3 impute(const MaskedTensor& x, const CpModel& model) {
  if (x.patients() != model.A.rows() || x.genes() != model.B.rows() ||
      x.times() != model.C.rows())
    throw DimensionError("impute: tensor and model dimensions differ");
  return merge_observed(x, reconstruct(model));
}

}  // namespace rep
