#include "rep/cross_validation.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "rep/errors.hpp"
#include "rep/nls.hpp"
#include "rep/rng.hpp"

namespace rep {

CvProtocol parse_protocol(const std::string& name) {
  if (name == "validation-record") return CvProtocol::kValidationRecord;
  if (name == "5-fold") return CvProtocol::kFiveFold;
  throw ConfigError("unknown protocol '" + name +
                    "' (expected validation-record or 5-fold)");
}

std::string protocol_name(CvProtocol protocol) {
  return protocol == CvProtocol::kValidationRecord ? "validation-record" : "5-fold";
}

namespace {

struct InnerSplit {
  std::vector<int> train_rows;
  std::vector<int> val_rows;
};

std::vector<InnerSplit> round_robin_splits(int n, int folds) {
  const int nf = std::min(folds, n);
  std::vector<InnerSplit> splits(static_cast<std::size_t>(nf));
  for (int i = 0; i < n; ++i)
    for (int g = 0; g < nf; ++g)
      (i % nf == g ? splits[static_cast<std::size_t>(g)].val_rows
                   : splits[static_cast<std::size_t>(g)].train_rows)
          .push_back(i);
  return splits;
}

// Correct predictions on one patient's full series, feeding back the true
// past labels.
int count_correct_series(const RepModel& model, const MaskedTensor& data,
                         const ResponseMatrix& y, int patient, double ridge) {
  int correct = 0;
  double y_tilde = 0.0;
  for (int t = 0; t < data.times(); ++t) {
    const Vector z = complete_patient_slice(data, patient, t, model.B, model.C, ridge);
    const auto [label, score] = predict_step(model, z, y_tilde);
    (void)score;
    correct += label == y.label(patient, t) ? 1 : 0;
    y_tilde += y.label(patient, t);
  }
  return correct;
}

std::vector<Eigen::Index> sample_rows(const std::vector<int>& patients, int times) {
  std::vector<Eigen::Index> rows;
  rows.reserve(patients.size() * static_cast<std::size_t>(times));
  for (int p : patients)
    for (int t = 0; t < times; ++t) rows.push_back(static_cast<Eigen::Index>(p) * times + t);
  return rows;
}

Matrix take_rows(const Matrix& m, const std::vector<Eigen::Index>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = m.row(rows[r]);
  return out;
}

Eigen::VectorXi take_rows(const Eigen::VectorXi& v, const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXi out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    out(static_cast<Eigen::Index>(r)) = v(rows[r]);
  return out;
}

void validate_grid(const HyperGrid& grid, bool need_neighbors) {
  if (grid.ranks.empty() || grid.lambdas.empty() || grid.rhos.empty())
    throw ConfigError("hyper-parameter grid must list ranks, lambdas and rhos");
  if (need_neighbors && grid.neighbor_counts.empty())
    throw ConfigError("hyper-parameter grid must list neighbor counts");
  for (int f : grid.ranks)
    if (f < 1) throw ConfigError("grid ranks must be positive");
  for (double l : grid.lambdas)
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("grid lambdas must be nonnegative");
  for (double r : grid.rhos)
    if (!std::isfinite(r)) throw ConfigError("grid rhos must be finite");
  for (int k : grid.neighbor_counts)
    if (k < 1) throw ConfigError("grid neighbor counts must be positive");
}

}  // namespace

FoldModel train_fold(const MaskedTensor& train_data, const ResponseMatrix& train_y,
                     const HyperGrid& grid, const CvOptions& opts,
                     std::uint64_t fold_seed) {
  const int n = train_data.patients();
  const int times = train_data.times();
  if (train_y.patients() != n || train_y.times() != times)
    throw DimensionError("training tensor and labels disagree on patients or times");
  if (n < 2) throw ConfigError("need at least two training patients");
  validate_grid(grid, opts.run_knn);

  SeedStream streams(fold_seed);

  std::vector<InnerSplit> rep_splits;
  if (opts.protocol == CvProtocol::kValidationRecord) {
    Rng pick(streams.derive("tune/validation-pick"));
    const int val = static_cast<int>(pick.uniform_int(0, static_cast<std::uint64_t>(n - 1)));
    InnerSplit split;
    split.val_rows.push_back(val);
    for (int i = 0; i < n; ++i)
      if (i != val) split.train_rows.push_back(i);
    rep_splits.push_back(std::move(split));
  } else {
    rep_splits = round_robin_splits(n, 5);
  }

  const std::size_t n_lambda = grid.lambdas.size();
  const std::size_t n_rho = grid.rhos.size();
  std::vector<long> correct(grid.ranks.size() * n_lambda * n_rho, 0);
  for (std::size_t ri = 0; ri < grid.ranks.size(); ++ri) {
    for (std::size_t si = 0; si < rep_splits.size(); ++si) {
      const InnerSplit& split = rep_splits[si];
      const MaskedTensor sub = train_data.select_patients(split.train_rows);
      const ResponseMatrix sub_y = train_y.select_patients(split.train_rows);
      CompletionConfig cfg;
      cfg.rank = grid.ranks[ri];
      cfg.lambda = opts.completion_lambda;
      cfg.max_iters = opts.completion_max_iters;
      cfg.rel_tol = opts.completion_rel_tol;
      cfg.seed = streams.derive("tune/completion/" + std::to_string(ri) + "/" +
                                std::to_string(si));
      const CompletionResult comp = complete_tensor(sub, cfg);
      for (std::size_t li = 0; li < n_lambda; ++li) {
        for (std::size_t pi = 0; pi < n_rho; ++pi) {
          TrainOptions topts;
          topts.rho = grid.rhos[pi];
          topts.lambda = grid.lambdas[li];
          topts.epochs = opts.tune_epochs;
          topts.step0 = opts.step0;
          topts.standardize = opts.standardize;
          auto [model, report] = train(comp.completed, sub_y, topts);
          (void)report;
          model.B = comp.model.B;
          model.C = comp.model.C;
          long& cell = correct[(ri * n_lambda + li) * n_rho + pi];
          for (int v : split.val_rows)
            cell += count_correct_series(model, train_data, train_y, v, opts.latent_ridge);
        }
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t c = 1; c < correct.size(); ++c)
    if (correct[c] > correct[best]) best = c;  // ties keep the earliest combo
  const std::size_t best_ri = best / (n_lambda * n_rho);
  const std::size_t best_li = (best / n_rho) % n_lambda;
  const std::size_t best_pi = best % n_rho;

  FoldModel fold;
  fold.rep_choice.rank = grid.ranks[best_ri];
  fold.rep_choice.lambda = grid.lambdas[best_li];
  fold.rep_choice.rho = grid.rhos[best_pi];

  CompletionConfig final_cfg;
  final_cfg.rank = fold.rep_choice.rank;
  final_cfg.lambda = opts.completion_lambda;
  final_cfg.max_iters = opts.completion_max_iters;
  final_cfg.rel_tol = opts.completion_rel_tol;
  final_cfg.seed = streams.derive("final/completion");
  CompletionResult comp = complete_tensor(train_data, final_cfg);

  TrainOptions final_opts;
  final_opts.rho = fold.rep_choice.rho;
  final_opts.lambda = fold.rep_choice.lambda;
  final_opts.epochs = opts.train_epochs;
  final_opts.step0 = opts.step0;
  final_opts.standardize = opts.standardize;
  auto [model, report] = train(comp.completed, train_y, final_opts);
  (void)report;
  model.B = comp.model.B;
  model.C = comp.model.C;
  fold.rep = std::move(model);
  fold.completion = std::move(comp.model);

  if (!opts.run_svm && !opts.run_knn) return fold;

  const Matrix raw = flatten_features(comp.completed);
  const Eigen::VectorXi labels = flatten_labels(train_y);
  Matrix feats = raw;
  if (opts.standardize) {
    fold.baseline_standardizer = Standardizer::fit(raw);
    feats = fold.baseline_standardizer->transform(raw);
  }

  // Baselines tune on 5-fold splits regardless of the outer protocol, with
  // per-split standardization so validation rows never leak into the stats.
  const std::vector<InnerSplit> base_splits = round_robin_splits(n, 5);
  struct SplitData {
    Matrix train_x;
    Eigen::VectorXi train_y;
    Matrix val_x;
    Eigen::VectorXi val_y;
  };
  std::vector<SplitData> prepared;
  prepared.reserve(base_splits.size());
  for (const InnerSplit& split : base_splits) {
    SplitData d;
    const Matrix train_raw = take_rows(raw, sample_rows(split.train_rows, times));
    Matrix val_raw = take_rows(raw, sample_rows(split.val_rows, times));
    d.train_y = take_rows(labels, sample_rows(split.train_rows, times));
    d.val_y = take_rows(labels, sample_rows(split.val_rows, times));
    if (opts.standardize) {
      const Standardizer s = Standardizer::fit(train_raw);
      d.train_x = s.transform(train_raw);
      d.val_x = s.transform(val_raw);
    } else {
      d.train_x = train_raw;
      d.val_x = std::move(val_raw);
    }
    prepared.push_back(std::move(d));
  }

  if (opts.run_svm) {
    long best_correct = -1;
    double best_lambda = grid.lambdas.front();
    for (double lambda : grid.lambdas) {
      long total = 0;
      for (const SplitData& d : prepared) {
        SvmOptions sopts;
        sopts.lambda = lambda;
        sopts.epochs = opts.tune_epochs;
        sopts.step0 = opts.step0;
        const SvmModel candidate = svm_train_flat(d.train_x, d.train_y, sopts);
        for (Eigen::Index r = 0; r < d.val_x.rows(); ++r)
          total += svm_predict(candidate, d.val_x.row(r).transpose()) == d.val_y(r) ? 1 : 0;
      }
      if (total > best_correct) {
        best_correct = total;
        best_lambda = lambda;
      }
    }
    SvmOptions sopts;
    sopts.lambda = best_lambda;
    sopts.epochs = opts.train_epochs;
    sopts.step0 = opts.step0;
    fold.svm = svm_train_flat(feats, labels, sopts);
    fold.svm_choice.rank = fold.rep_choice.rank;
    fold.svm_choice.lambda = best_lambda;
  }

  if (opts.run_knn) {
    long best_correct = -1;
    int best_k = 1;
    for (int k : grid.neighbor_counts) {
      long total = 0;
      bool feasible = true;
      for (const SplitData& d : prepared) {
        if (k > d.train_x.rows()) {
          feasible = false;
          break;
        }
        const KnnModel candidate = knn_fit(d.train_x, d.train_y, k);
        for (Eigen::Index r = 0; r < d.val_x.rows(); ++r)
          total += knn_predict(candidate, d.val_x.row(r).transpose()) == d.val_y(r) ? 1 : 0;
      }
      if (feasible && total > best_correct) {
        best_correct = total;
        best_k = k;
      }
    }
    fold.knn = knn_fit(feats, labels, std::min<int>(best_k, static_cast<int>(feats.rows())));
    fold.knn_choice.rank = fold.rep_choice.rank;
    fold.knn_choice.neighbors = fold.knn->k;
  }

  return fold;
}

CvReport loo_cv(const MaskedTensor& data, const ResponseMatrix& y, const HyperGrid& grid,
                const CvOptions& opts) {
  const int n = data.patients();
  const int times = data.times();
  if (y.patients() != n || y.times() != times)
    throw DimensionError("tensor and labels disagree on patients or times");
  if (n < 3) throw ConfigError("leave-one-out needs at least three patients");
  validate_grid(grid, opts.run_knn);

  CvReport report;
  report.protocol = protocol_name(opts.protocol);
  report.seed = opts.seed;
  report.methods.push_back("rep");
  if (opts.run_svm) report.methods.push_back("svm");
  if (opts.run_knn) report.methods.push_back("knn");

  std::map<std::string, std::vector<int>> pooled_pred, pooled_truth;
  std::map<std::string, std::vector<double>> pooled_scores;

  SeedStream streams(opts.seed);
  for (int p = 0; p < n; ++p) {
    std::vector<int> others;
    others.reserve(static_cast<std::size_t>(n) - 1);
    for (int i = 0; i < n; ++i)
      if (i != p) others.push_back(i);

    const FoldModel fm =
        train_fold(data.select_patients(others), y.select_patients(others), grid, opts,
                   streams.derive("cv/fold/" + std::to_string(p)));

    CvFold fold;
    fold.patient_id = y.patient_ids()[static_cast<std::size_t>(p)];
    fold.chosen["rep"] = fm.rep_choice;
    if (fm.svm) fold.chosen["svm"] = fm.svm_choice;
    if (fm.knn) fold.chosen["knn"] = fm.knn_choice;

    std::map<std::string, PredictionSeries> series;
    for (const std::string& m : report.methods) series[m] = PredictionSeries{};

    double y_tilde = 0.0;
    for (int t = 0; t < times; ++t) {
      const Vector z =
          complete_patient_slice(data, p, t, fm.completion.B, fm.completion.C, opts.latent_ridge);
      const auto [label, score] = predict_step(fm.rep, z, y_tilde);
      series["rep"].labels.push_back(label);
      series["rep"].scores.push_back(score);
      if (fm.svm || fm.knn) {
        const Vector xb = fm.baseline_standardizer ? fm.baseline_standardizer->transform(z) : z;
        if (fm.svm) {
          series["svm"].scores.push_back(svm_score(*fm.svm, xb));
          series["svm"].labels.push_back(series["svm"].scores.back() >= 0.0 ? 1 : -1);
        }
        if (fm.knn) {
          series["knn"].scores.push_back(knn_vote_score(*fm.knn, xb));
          series["knn"].labels.push_back(series["knn"].scores.back() >= 0.0 ? 1 : -1);
        }
      }
      y_tilde += y.label(p, t);  // protocol feeds back the true past labels
    }

    for (const std::string& m : report.methods) {
      PredictionSeries& s = series[m];
      int correct = 0;
      for (int t = 0; t < times; ++t) {
        const int truth = y.label(p, t);
        correct += s.labels[static_cast<std::size_t>(t)] == truth ? 1 : 0;
        pooled_pred[m].push_back(s.labels[static_cast<std::size_t>(t)]);
        pooled_truth[m].push_back(truth);
        pooled_scores[m].push_back(s.scores[static_cast<std::size_t>(t)]);
      }
      s.acc = static_cast<double>(correct) / static_cast<double>(times);
      fold.methods[m] = std::move(s);
    }
    report.folds.push_back(std::move(fold));
  }

  for (const std::string& m : report.methods) {
    MethodSummary summary;
    summary.acc = accuracy(tally_confusion(pooled_pred[m], pooled_truth[m]));
    summary.roc = roc_auc(pooled_scores[m], pooled_truth[m]);
    report.summary[m] = std::move(summary);
  }
  return report;
}

std::vector<MaskSweepRow> masking_experiment(const MaskedTensor& data,
                                             const ResponseMatrix& y,
                                             const std::vector<double>& rates,
                                             const std::vector<std::uint64_t>& seeds,
                                             const HyperGrid& grid, const CvOptions& opts) {
  if (rates.empty()) throw ConfigError("need at least one masking rate");
  if (seeds.empty()) throw ConfigError("need at least one seed");
  for (double rate : rates)
    if (!(rate >= 0.0) || !(rate < 1.0))
      throw ConfigError("masking rates must lie in [0, 1)");

  std::vector<MaskSweepRow> rows;
  for (std::size_t ri = 0; ri < rates.size(); ++ri) {
    for (std::uint64_t seed : seeds) {
      MaskedTensor masked = data;
      if (rates[ri] > 0.0) {
        Rng rng(SeedStream(seed).derive("mask-sweep/level/" + std::to_string(ri)));
        const auto hide = static_cast<std::size_t>(
            rates[ri] * static_cast<double>(data.observed_count()));
        masked = data.with_hidden(hide, rng);
      }
      CvOptions run = opts;
      run.seed = seed;
      const CvReport report = loo_cv(masked, y, grid, run);
      for (const std::string& m : report.methods)
        rows.push_back(MaskSweepRow{rates[ri], seed, m, report.summary.at(m).acc,
                                    report.summary.at(m).roc.auc});
    }
  }
  return rows;
}

}  // namespace rep
