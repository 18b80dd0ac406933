#include "rep/nls.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace rep {

namespace {

std::vector<int> support_of(const std::vector<char>& passive) {
  std::vector<int> idx;
  for (int j = 0; j < static_cast<int>(passive.size()); ++j)
    if (passive[j]) idx.push_back(j);
  return idx;
}

}  // namespace

Vector nls_solve_gram(const Matrix& gram, const Vector& c, double grad_tol) {
  const int n = static_cast<int>(c.size());
  Vector a = Vector::Zero(n);
  std::vector<char> passive(n, 0);
  Vector w = c;  // w = c - G a = -(1/2) gradient

  const int max_outer = 10 * n + 10;
  for (int outer = 0; outer < max_outer; ++outer) {
    // Entering coordinate: most positive dual among the active set,
    // smallest index on ties (strict > keeps the first maximum).
    int enter = -1;
    double best = grad_tol;
    for (int j = 0; j < n; ++j)
      if (!passive[j] && w[j] > best) {
        best = w[j];
        enter = j;
      }
    if (enter < 0) break;
    passive[enter] = 1;

    const int max_inner = 3 * n + 10;
    for (int inner = 0; inner < max_inner; ++inner) {
      const std::vector<int> idx = support_of(passive);
      const int p = static_cast<int>(idx.size());
      Matrix gpp(p, p);
      Vector cp(p);
      for (int r = 0; r < p; ++r) {
        cp[r] = c[idx[r]];
        for (int s = 0; s < p; ++s) gpp(r, s) = gram(idx[r], idx[s]);
      }
      Vector s = gpp.colPivHouseholderQr().solve(cp);
      if (!s.allFinite()) {
        // Singular support (outside the uniqueness precondition); back out.
        passive[enter] = 0;
        break;
      }
      if (s.minCoeff() > 0.0) {
        a.setZero();
        for (int r = 0; r < p; ++r) a[idx[r]] = s[r];
        break;
      }
      // Step toward s until the first coordinate hits zero.
      double alpha = 1.0;
      for (int r = 0; r < p; ++r)
        if (s[r] <= 0.0) {
          const double ar = a[idx[r]];
          const double denom = ar - s[r];
          if (denom > 0.0) alpha = std::min(alpha, ar / denom);
        }
      for (int r = 0; r < p; ++r) a[idx[r]] += alpha * (s[r] - a[idx[r]]);
      for (int r = 0; r < p; ++r)
        if (s[r] <= 0.0 || a[idx[r]] <= 0.0) {
          a[idx[r]] = 0.0;
          passive[idx[r]] = 0;
        }
      if (support_of(passive).empty()) break;
    }
    w = c - gram * a;
  }
  return a;
}

Vector nls_solve(const Matrix& m, const Vector& y, double ridge) {
  if (m.rows() == 0 || y.size() == 0) throw DimensionError("nls_solve: empty system");
  if (m.cols() == 0) throw DimensionError("nls_solve: design has no columns");
  if (m.rows() != y.size())
    throw DimensionError("nls_solve: design rows and target length differ");
  if (!m.allFinite() || !y.allFinite() || !std::isfinite(ridge))
    throw NumericError("nls_solve: non-finite input");
  if (ridge < 0.0) throw NumericError("nls_solve: ridge must be >= 0");

  const int n = static_cast<int>(m.cols());
  const Matrix gram = m.transpose() * m + ridge * Matrix::Identity(n, n);
  const Vector c = m.transpose() * y;
  const double tol = 1e-12 * std::max(1.0, c.cwiseAbs().maxCoeff());

  Vector a = nls_solve_gram(gram, c, tol);

  // Re-solve the final support against the actual (augmented) columns by QR;
  // the normal-equation path can lose digits when the support is ill
  // conditioned. Keep the refinement only if it stays feasible.
  std::vector<int> idx;
  for (int j = 0; j < n; ++j)
    if (a[j] > 0.0) idx.push_back(j);
  if (!idx.empty()) {
    const int p = static_cast<int>(idx.size());
    const Eigen::Index rows = m.rows() + (ridge > 0.0 ? p : 0);
    Matrix maug = Matrix::Zero(rows, p);
    Vector yaug = Vector::Zero(rows);
    yaug.head(m.rows()) = y;
    for (int r = 0; r < p; ++r) {
      maug.col(r).head(m.rows()) = m.col(idx[r]);
      if (ridge > 0.0) maug(m.rows() + r, r) = std::sqrt(ridge);
    }
    Vector s = maug.colPivHouseholderQr().solve(yaug);
    if (s.allFinite() && s.minCoeff() >= 0.0) {
      a.setZero();
      for (int r = 0; r < p; ++r) a[idx[r]] = s[r];
    }
  }
  return a;
}

}  // namespace rep
