#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "rep/errors.hpp"
#include "rep/rng.hpp"

namespace rep {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense patient x gene x time tensor. Canonical storage is a single flat
/// buffer with time fastest: index (i, j, k) lives at (i*genes + j)*times + k.
/// Every unfolding in the library is defined from this one layout.
class Tensor3 {
public:
  Tensor3() = default;
  Tensor3(int patients, int genes, int times, double fill = 0.0);

  int patients() const { return patients_; }
  int genes() const { return genes_; }
  int times() const { return times_; }
  std::size_t size() const { return data_.size(); }

  double operator()(int i, int j, int k) const { return data_[flat(i, j, k)]; }
  double& operator()(int i, int j, int k) { return data_[flat(i, j, k)]; }

  std::size_t flat(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * genes_ + j) * times_ + k;
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool same_shape(const Tensor3& o) const {
    return patients_ == o.patients_ && genes_ == o.genes_ && times_ == o.times_;
  }

private:
  int patients_ = 0, genes_ = 0, times_ = 0;
  std::vector<double> data_;
};

/// Observations plus an observation mask. Unobserved positions hold 0 as a
/// sentinel but the mask is the single source of truth: 0 is a legal
/// expression level, so nothing may branch on the stored value.
class MaskedTensor {
public:
  MaskedTensor() = default;

  /// Validates that observed entries are finite and >= 0, then zeroes the
  /// unobserved positions.
  MaskedTensor(Tensor3 values, std::vector<std::uint8_t> mask);

  /// All entries observed.
  static MaskedTensor fully_observed(Tensor3 values);

  int patients() const { return values_.patients(); }
  int genes() const { return values_.genes(); }
  int times() const { return values_.times(); }

  bool observed(int i, int j, int k) const { return mask_[values_.flat(i, j, k)] != 0; }
  double value(int i, int j, int k) const { return values_(i, j, k); }

  const Tensor3& values() const { return values_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }

  std::size_t observed_count() const;

  /// Copy with `hide_count` currently-observed entries switched to unobserved,
  /// chosen uniformly at random. Used by the masking experiments.
  MaskedTensor with_hidden(std::size_t hide_count, Rng& rng) const;

  /// Copy restricted to a subset of patients (rows re-indexed in the given order).
  MaskedTensor select_patients(const std::vector<int>& patient_rows) const;

private:
  Tensor3 values_;
  std::vector<std::uint8_t> mask_;
};

/// Nonnegative CP factor triple. Reconstruction is
///   g(i,j,k) = sum_f A(i,f) * B(j,f) * C(k,f).
struct CpModel {
  Matrix A;  // patients x rank
  Matrix B;  // genes x rank
  Matrix C;  // times x rank

  CpModel() = default;
  /// Validates nonnegativity, finiteness and equal column counts.
  CpModel(Matrix a, Matrix b, Matrix c);

  int rank() const { return static_cast<int>(A.cols()); }

  /// Strictly positive uniform(0,1) factors, seeded.
  static CpModel random_uniform(int patients, int genes, int times, int rank, Rng& rng);
};

/// Column-wise Kronecker product. Column f of the result is kron(M.col(f),
/// N.col(f)); rows are ordered row-major in (p, q) with the second factor's
/// index q fastest, i.e. row p*rows(N) + q = M(p,:) .* N(q,:).
Matrix khatri_rao(const Matrix& m, const Matrix& n);

/// Dense reconstruction of the full tensor. No mask applied.
Tensor3 reconstruct(const CpModel& model);

/// One gene-vector slice at time index t (0-based) for a patient described by
/// `patient_latent`: entry j = sum_f latent(f) * B(j,f) * C(t,f).
Vector reconstruct_slice(const CpModel& model, const Vector& patient_latent, int t);

/// Sum of squared residuals over the observed entries only.
double masked_residual_sq(const MaskedTensor& x, const CpModel& model);

}  // namespace rep
