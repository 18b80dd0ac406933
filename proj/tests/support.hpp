#pragma once

#include <sys/wait.h>

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rep/tensor.hpp"

// Independent re-implementations used as oracles. Everything here is written
// in the most literal style available (plain loops, full enumeration) so that
// agreement with the library is evidence, not circularity.
namespace oracle {

// Best nonnegative ridge least-squares solution found by trying every support
// set. Exponential in the column count; fine for n <= 12.
inline Eigen::VectorXd nnls_enumerate(const Eigen::MatrixXd& m, const Eigen::VectorXd& y,
                                      double ridge) {
  const int n = static_cast<int>(m.cols());
  Eigen::VectorXd best = Eigen::VectorXd::Zero(n);
  double best_obj = y.squaredNorm();
  for (std::uint32_t bits = 1; bits < (1u << n); ++bits) {
    std::vector<int> support;
    for (int j = 0; j < n; ++j)
      if (bits & (1u << j)) support.push_back(j);
    Eigen::MatrixXd ms(m.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t c = 0; c < support.size(); ++c)
      ms.col(static_cast<Eigen::Index>(c)) = m.col(support[c]);
    Eigen::MatrixXd gram = ms.transpose() * ms;
    gram.diagonal().array() += ridge;
    const Eigen::VectorXd rhs = ms.transpose() * y;
    const Eigen::VectorXd s = gram.ldlt().solve(rhs);
    if ((gram * s - rhs).norm() > 1e-10 * (1.0 + rhs.norm())) continue;  // singular support
    if ((s.array() < -1e-12).any()) continue;
    Eigen::VectorXd full = Eigen::VectorXd::Zero(n);
    for (std::size_t c = 0; c < support.size(); ++c)
      full(support[c]) = std::max(0.0, s(static_cast<Eigen::Index>(c)));
    const double obj = (y - m * full).squaredNorm() + ridge * full.squaredNorm();
    if (obj < best_obj) {
      best_obj = obj;
      best = full;
    }
  }
  return best;
}

inline double nnls_objective(const Eigen::MatrixXd& m, const Eigen::VectorXd& y, double ridge,
                             const Eigen::VectorXd& a) {
  return (y - m * a).squaredNorm() + ridge * a.squaredNorm();
}

// Largest violation of the NNLS KKT conditions (gradient scaled by 1/2):
// the gradient vanishes on the support and is nonnegative off it, a >= 0.
inline double kkt_violation(const Eigen::MatrixXd& m, const Eigen::VectorXd& y, double ridge,
                            const Eigen::VectorXd& a) {
  const Eigen::VectorXd grad = m.transpose() * (m * a - y) + ridge * a;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    worst = std::max(worst, -a(j));
    if (a(j) > 0.0)
      worst = std::max(worst, std::abs(grad(j)));
    else
      worst = std::max(worst, -grad(j));
  }
  return worst;
}

inline Eigen::MatrixXd khatri_rao_loops(const Eigen::MatrixXd& m, const Eigen::MatrixXd& n) {
  Eigen::MatrixXd out(m.rows() * n.rows(), m.cols());
  for (Eigen::Index f = 0; f < m.cols(); ++f)
    for (Eigen::Index p = 0; p < m.rows(); ++p)
      for (Eigen::Index q = 0; q < n.rows(); ++q) out(p * n.rows() + q, f) = m(p, f) * n(q, f);
  return out;
}

inline rep::Tensor3 reconstruct_loops(const rep::CpModel& model) {
  rep::Tensor3 g(static_cast<int>(model.A.rows()), static_cast<int>(model.B.rows()),
                 static_cast<int>(model.C.rows()));
  for (int i = 0; i < g.patients(); ++i)
    for (int j = 0; j < g.genes(); ++j)
      for (int k = 0; k < g.times(); ++k) {
        double s = 0.0;
        for (int f = 0; f < model.rank(); ++f) s += model.A(i, f) * model.B(j, f) * model.C(k, f);
        g(i, j, k) = s;
      }
  return g;
}

// Mann-Whitney statistic by explicit pair counting; ties count one half.
inline double mann_whitney_auc(const std::vector<double>& scores,
                               const std::vector<int>& labels) {
  double wins = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != -1) continue;
      ++pairs;
      if (scores[i] > scores[j])
        wins += 1.0;
      else if (scores[i] == scores[j])
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i + j - 1)) / 2.0 + 1.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

// Spearman rank correlation with average ranks for ties. A constant sequence
// carries no ordering information, so the correlation is defined as 0 there.
inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    cov += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  if (vx < 1e-15 || vy < 1e-15) return 0.0;
  return cov / std::sqrt(vx * vy);
}

}  // namespace oracle

namespace testutil {

// Fresh empty directory under the system temp root.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("rep_tests_" + tag + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs the installed CLI binary with `args`, cwd set to `workdir`.
inline CliResult run_cli(const std::string& args, const std::filesystem::path& workdir) {
  const auto out_file = workdir / ".cli_stdout";
  const auto err_file = workdir / ".cli_stderr";
  const std::string cmd = "cd '" + workdir.string() + "' && '" + std::string(REP_CLI_PATH) +
                          "' " + args + " > '" + out_file.string() + "' 2> '" +
                          err_file.string() + "'";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.out = read_text(out_file);
  r.err = read_text(err_file);
  if (WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
  return r;
}

}  // namespace testutil
