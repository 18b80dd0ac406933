#include "rep/tensor.hpp"

#include <cmath>
#include <string>

namespace rep {

Tensor3::Tensor3(int patients, int genes, int times, double fill)
    : patients_(patients), genes_(genes), times_(times) {
  if (patients < 1 || genes < 1 || times < 1)
    throw DimensionError("Tensor3: all dimensions must be >= 1, got " +
                         std::to_string(patients) + "x" + std::to_string(genes) + "x" +
                         std::to_string(times));
  data_.assign(static_cast<std::size_t>(patients) * genes * times, fill);
}

MaskedTensor::MaskedTensor(Tensor3 values, std::vector<std::uint8_t> mask)
    : values_(std::move(values)), mask_(std::move(mask)) {
  if (mask_.size() != values_.size())
    throw DimensionError("MaskedTensor: mask size " + std::to_string(mask_.size()) +
                         " does not match tensor size " + std::to_string(values_.size()));
  auto& v = values_.data();
  for (std::size_t p = 0; p < v.size(); ++p) {
    if (mask_[p]) {
      if (!std::isfinite(v[p]) || v[p] < 0.0)
        throw NumericError("MaskedTensor: observed entries must be finite and >= 0");
    } else {
      v[p] = 0.0;  // sentinel; never read through mask-aware access
    }
  }
}

MaskedTensor MaskedTensor::fully_observed(Tensor3 values) {
  std::vector<std::uint8_t> mask(values.size(), 1);
  return MaskedTensor(std::move(values), std::move(mask));
}

std::size_t MaskedTensor::observed_count() const {
  std::size_t n = 0;
  for (auto m : mask_) n += (m != 0);
  return n;
}

MaskedTensor MaskedTensor::with_hidden(std::size_t hide_count, Rng& rng) const {
  std::vector<std::size_t> observed_pos;
  observed_pos.reserve(observed_count());
  for (std::size_t p = 0; p < mask_.size(); ++p)
    if (mask_[p]) observed_pos.push_back(p);
  if (hide_count > observed_pos.size())
    throw ConfigError("with_hidden: cannot hide " + std::to_string(hide_count) +
                      " of " + std::to_string(observed_pos.size()) + " observed entries");
  Tensor3 values = values_;
  std::vector<std::uint8_t> mask = mask_;
  for (std::size_t idx : rng.sample_without_replacement(observed_pos.size(), hide_count)) {
    mask[observed_pos[idx]] = 0;
    values.data()[observed_pos[idx]] = 0.0;
  }
  return MaskedTensor(std::move(values), std::move(mask));
}

MaskedTensor MaskedTensor::select_patients(const std::vector<int>& patient_rows) const {
  const int J = genes(), K = times();
  Tensor3 values(static_cast<int>(patient_rows.size()), J, K);
  std::vector<std::uint8_t> mask(values.size(), 0);
  for (std::size_t r = 0; r < patient_rows.size(); ++r) {
    const int i = patient_rows[r];
    if (i < 0 || i >= patients()) throw DimensionError("select_patients: row out of range");
    for (int j = 0; j < J; ++j)
      for (int k = 0; k < K; ++k) {
        values(static_cast<int>(r), j, k) = values_(i, j, k);
        mask[values.flat(static_cast<int>(r), j, k)] = mask_[values_.flat(i, j, k)];
      }
  }
  return MaskedTensor(std::move(values), std::move(mask));
}

namespace {

void check_factor(const Matrix& m, const char* name) {
  if (m.rows() < 1 || m.cols() < 1)
    throw DimensionError(std::string("CpModel: factor ") + name + " is empty");
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const double v = m(r, c);
      if (!std::isfinite(v)) throw NumericError(std::string("CpModel: non-finite entry in ") + name);
      if (v < 0.0) throw NumericError(std::string("CpModel: negative entry in ") + name);
    }
}

}  // namespace

CpModel::CpModel(Matrix a, Matrix b, Matrix c) : A(std::move(a)), B(std::move(b)), C(std::move(c)) {
  check_factor(A, "A");
  check_factor(B, "B");
  check_factor(C, "C");
  if (A.cols() != B.cols() || B.cols() != C.cols())
    throw DimensionError("CpModel: factor column counts differ");
}

CpModel CpModel::random_uniform(int patients, int genes, int times, int rank, Rng& rng) {
  auto draw = [&](int rows) {
    Matrix m(rows, rank);
    for (int r = 0; r < rows; ++r)
      for (int f = 0; f < rank; ++f) m(r, f) = rng.uniform_open01();
    return m;
  };
  return CpModel(draw(patients), draw(genes), draw(times));
}

Matrix khatri_rao(const Matrix& m, const Matrix& n) {
  if (m.cols() != n.cols())
    throw DimensionError("khatri_rao: column counts differ (" + std::to_string(m.cols()) +
                         " vs " + std::to_string(n.cols()) + ")");
  const Eigen::Index P = m.rows(), Q = n.rows(), F = m.cols();
  Matrix out(P * Q, F);
  for (Eigen::Index p = 0; p < P; ++p)
    for (Eigen::Index q = 0; q < Q; ++q)
      out.row(p * Q + q) = m.row(p).cwiseProduct(n.row(q));
  return out;
}

Tensor3 reconstruct(const CpModel& model) {
  const int I = static_cast<int>(model.A.rows());
  const int J = static_cast<int>(model.B.rows());
  const int K = static_cast<int>(model.C.rows());
  const int F = model.rank();
  Tensor3 g(I, J, K);
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j)
      for (int k = 0; k < K; ++k) {
        double s = 0.0;
        for (int f = 0; f < F; ++f) s += model.A(i, f) * model.B(j, f) * model.C(k, f);
        g(i, j, k) = s;
      }
  return g;
}

Vector reconstruct_slice(const CpModel& model, const Vector& patient_latent, int t) {
  if (t < 0 || t >= model.C.rows())
    throw DimensionError("reconstruct_slice: time index " + std::to_string(t) +
                         " out of range [0, " + std::to_string(model.C.rows()) + ")");
  if (patient_latent.size() != model.rank())
    throw DimensionError("reconstruct_slice: latent size does not match rank");
  // row j of (C(t,:) khatri_rao B) is C(t,:) .* B(j,:)
  return model.B * model.C.row(t).transpose().cwiseProduct(patient_latent);
}

double masked_residual_sq(const MaskedTensor& x, const CpModel& model) {
  if (x.patients() != model.A.rows() || x.genes() != model.B.rows() || x.times() != model.C.rows())
    throw DimensionError("masked_residual_sq: tensor and model dimensions differ");
  const int I = x.patients(), J = x.genes(), K = x.times();
  const int F = model.rank();
  double total = 0.0;
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j)
      for (int k = 0; k < K; ++k) {
        if (!x.observed(i, j, k)) continue;
        double g = 0.0;
        for (int f = 0; f < F; ++f) g += model.A(i, f) * model.B(j, f) * model.C(k, f);
        const double r = x.value(i, j, k) - g;
        total += r * r;
      }
  return total;
}

}  // namespace rep
