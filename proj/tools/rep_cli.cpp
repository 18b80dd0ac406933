// Command-line front end for the expression-based response prediction
// pipeline: synthetic cohorts, tensor completion, training, per-time and
// label-free prediction, cross-validation and masking robustness sweeps.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rep/baselines.hpp"
#include "rep/completion.hpp"
#include "rep/cross_validation.hpp"
#include "rep/errors.hpp"
#include "rep/io.hpp"
#include "rep/metrics.hpp"
#include "rep/predictor.hpp"
#include "rep/synthetic.hpp"
#include "rep/tensor.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

void write_text(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw rep::IoError("cannot open '" + path.string() + "' for writing");
  out << contents;
  if (!out) throw rep::IoError("failed writing '" + path.string() + "'");
}

std::vector<std::string> default_gene_ids(int genes) {
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(genes));
  for (int j = 1; j <= genes; ++j) {
    std::ostringstream s;
    s << "G" << std::setw(3) << std::setfill('0') << j;
    ids.push_back(s.str());
  }
  return ids;
}

// Reindex loaded records onto the model's gene order and time range. Genes
// the file never mentions stay unobserved; unknown genes are an error.
rep::MaskedTensor align_to_model(const rep::TensorDataset& ds,
                                 const std::vector<std::string>& model_genes,
                                 int model_times) {
  std::map<std::string, int> gene_index;
  for (std::size_t j = 0; j < model_genes.size(); ++j)
    gene_index.emplace(model_genes[j], static_cast<int>(j));

  if (ds.tensor.times() > model_times)
    throw rep::FormatError("records reach time " + std::to_string(ds.tensor.times()) +
                           " but the model covers only " + std::to_string(model_times) +
                           " time points");

  const int patients = ds.tensor.patients();
  const int genes = static_cast<int>(model_genes.size());
  rep::Tensor3 values(patients, genes, model_times);
  std::vector<std::uint8_t> mask(values.size(), 0);
  for (int j = 0; j < ds.tensor.genes(); ++j) {
    const auto it = gene_index.find(ds.gene_ids[static_cast<std::size_t>(j)]);
    if (it == gene_index.end())
      throw rep::FormatError("gene '" + ds.gene_ids[static_cast<std::size_t>(j)] +
                             "' is not part of the model");
    for (int i = 0; i < patients; ++i)
      for (int t = 0; t < ds.tensor.times(); ++t)
        if (ds.tensor.observed(i, j, t)) {
          values(i, it->second, t) = ds.tensor.value(i, j, t);
          mask[values.flat(i, it->second, t)] = 1;
        }
  }
  return rep::MaskedTensor(std::move(values), std::move(mask));
}

struct SharedFlags {
  std::uint64_t seed = 0;
  int rank = 3;
  double lambda = -1.0;  // <0 means "use the subcommand default"
  double rho = 1.0;
  std::string protocol = "validation-record";
  std::string out = "out";
};

void add_shared(CLI::App* cmd, SharedFlags& flags) {
  cmd->add_option("--seed", flags.seed, "Master seed for every random choice");
  cmd->add_option("--rank", flags.rank, "Number of latent factors");
  cmd->add_option("--lambda", flags.lambda, "Regularization weight");
  cmd->add_option("--rho", flags.rho, "Feedback scale of the recursive score");
  cmd->add_option("--protocol", flags.protocol,
                  "Tuning protocol: validation-record or 5-fold");
  cmd->add_option("--out", flags.out, "Output directory (created if absent)");
}

fs::path prepare_out(const SharedFlags& flags) {
  fs::path dir(flags.out);
  fs::create_directories(dir);
  return dir;
}

struct CohortInputs {
  std::string tensor_path;
  std::string labels_path;
};

std::pair<rep::TensorDataset, rep::ResponseMatrix> load_cohort(const CohortInputs& in) {
  rep::TensorDataset ds = rep::load_tensor(in.tensor_path);
  rep::ResponseMatrix labels = rep::response_matrix_from_records(
      rep::load_response_records(in.labels_path), ds.patient_ids, ds.tensor.times());
  return {std::move(ds), std::move(labels)};
}

int run_synth(const SharedFlags& flags, const rep::SyntheticSpec& spec) {
  const fs::path dir = prepare_out(flags);
  const rep::SyntheticData data = rep::generate_synthetic(spec);
  const std::vector<std::string> genes = default_gene_ids(spec.genes);
  const std::vector<std::string>& patients = data.labels.patient_ids();

  rep::save_tensor((dir / "tensor.csv").string(), data.tensor, patients, genes);
  rep::save_labels((dir / "labels.csv").string(), data.labels);
  rep::save_cp_model((dir / "truth_cp_model.json").string(), data.truth, patients, genes);

  json rule;
  rule["schema_version"] = rep::kSchemaVersion;
  rule["kind"] = "planted_rule";
  rule["gene_weights"] = std::vector<double>(
      data.rule.gene_weights.data(),
      data.rule.gene_weights.data() + data.rule.gene_weights.size());
  rule["feedback_weight"] = data.rule.feedback_weight;
  rule["bias"] = data.rule.bias;
  write_text(dir / "truth_rule.json", rule.dump(2) + "\n");

  std::cout << "wrote " << (dir / "tensor.csv").string() << " ("
            << data.tensor.observed_count() << " observed cells), labels, truth model\n";
  return 0;
}

int run_complete(const SharedFlags& flags, const std::string& tensor_path, int max_iters,
                 double tol) {
  const fs::path dir = prepare_out(flags);
  const rep::TensorDataset ds = rep::load_tensor(tensor_path);

  rep::CompletionConfig cfg;
  cfg.rank = flags.rank;
  cfg.lambda = flags.lambda < 0.0 ? 1e-3 : flags.lambda;
  cfg.max_iters = max_iters;
  cfg.rel_tol = tol;
  cfg.seed = flags.seed;
  const rep::CompletionResult result = rep::complete_tensor(ds.tensor, cfg);

  rep::save_dense_tensor((dir / "completed.csv").string(), result.completed, ds.patient_ids,
                         ds.gene_ids);
  rep::save_cp_model((dir / "cp_model.json").string(), result.model, ds.patient_ids,
                     ds.gene_ids);
  std::ostringstream trace;
  trace << "iteration,objective\n";
  for (std::size_t i = 0; i < result.objective_trace.size(); ++i)
    trace << i << ',' << format_double(result.objective_trace[i]) << '\n';
  write_text(dir / "completion_trace.csv", trace.str());

  std::cout << (result.converged ? "converged" : "stopped") << " after "
            << result.iterations << " sweeps, objective "
            << format_double(result.objective_trace.back()) << '\n';
  return 0;
}

int run_train(const SharedFlags& flags, const CohortInputs& inputs, double completion_lambda,
              int completion_max_iters, double completion_tol, int epochs, double step0,
              double l1_radius, bool no_standardize) {
  const fs::path dir = prepare_out(flags);
  auto [ds, labels] = load_cohort(inputs);

  rep::CompletionConfig cfg;
  cfg.rank = flags.rank;
  cfg.lambda = completion_lambda;
  cfg.max_iters = completion_max_iters;
  cfg.rel_tol = completion_tol;
  cfg.seed = flags.seed;
  const rep::CompletionResult comp = rep::complete_tensor(ds.tensor, cfg);

  rep::TrainOptions opts;
  opts.rho = flags.rho;
  opts.lambda = flags.lambda < 0.0 ? 0.01 : flags.lambda;
  if (l1_radius > 0.0) opts.l1_radius = l1_radius;
  opts.epochs = epochs;
  opts.step0 = step0;
  opts.seed = flags.seed;
  opts.standardize = !no_standardize;
  auto [model, report] = rep::train(comp.completed, labels, opts);
  model.B = comp.model.B;
  model.C = comp.model.C;

  rep::save_rep_model((dir / "rep_model.json").string(), model, ds.gene_ids);
  rep::save_cp_model((dir / "cp_model.json").string(), comp.model, ds.patient_ids,
                     ds.gene_ids);
  json rj;
  rj["schema_version"] = rep::kSchemaVersion;
  rj["kind"] = "train_report";
  rj["final_objective"] = report.final_objective;
  rj["epochs"] = report.epochs;
  rj["objective_trace"] = report.objective_trace;
  write_text(dir / "train_report.json", rj.dump(2) + "\n");

  std::cout << "trained on " << labels.patients() << " patients, final objective "
            << format_double(report.final_objective) << '\n';
  return 0;
}

int run_predict(const SharedFlags& flags, const std::string& model_path,
                const std::string& tensor_path, const std::string& labels_path,
                double latent_ridge) {
  const fs::path dir = prepare_out(flags);
  const rep::RepModelFile mf = rep::load_rep_model(model_path);
  const rep::TensorDataset ds = rep::load_tensor(tensor_path);
  const rep::MaskedTensor cohort =
      align_to_model(ds, mf.gene_ids, static_cast<int>(mf.model.C.rows()));
  const int times = cohort.times();

  // Past labels are optional: wherever they are missing the predicted label
  // is fed back instead, which is exactly the label-free forecast regime.
  std::map<std::pair<std::string, int>, int> past;
  if (labels_path.empty()) {
    std::cerr << "warning: no past labels supplied; feeding predicted labels back "
                 "into the recursive score\n";
  } else {
    for (const rep::ResponseRecord& r : rep::load_response_records(labels_path)) {
      if (r.time_index > times)
        throw rep::FormatError("label time_index " + std::to_string(r.time_index) +
                               " exceeds the model's " + std::to_string(times) +
                               " time points");
      past[{r.patient_id, r.time_index - 1}] = r.label;
    }
  }

  std::ostringstream out;
  out << "patient_id,time_index,label,score\n";
  for (int i = 0; i < cohort.patients(); ++i) {
    const std::string& pid = ds.patient_ids[static_cast<std::size_t>(i)];
    double y_tilde = 0.0;
    for (int t = 0; t < times; ++t) {
      const rep::Vector z =
          rep::complete_patient_slice(cohort, i, t, mf.model.B, mf.model.C, latent_ridge);
      const auto [label, score] = rep::predict_step(mf.model, z, y_tilde);
      out << pid << ',' << (t + 1) << ',' << label << ',' << format_double(score) << '\n';
      const auto it = past.find({pid, t});
      y_tilde += it != past.end() ? it->second : label;
    }
  }
  write_text(dir / "predictions.csv", out.str());
  std::cout << "wrote " << (dir / "predictions.csv").string() << " for "
            << cohort.patients() << " patients\n";
  return 0;
}

int run_forecast(const SharedFlags& flags, const std::string& model_path,
                 const std::string& tensor_path, double latent_ridge) {
  const fs::path dir = prepare_out(flags);
  const rep::RepModelFile mf = rep::load_rep_model(model_path);
  const rep::TensorDataset ds = rep::load_tensor(tensor_path);
  if (ds.tensor.times() != 1)
    throw rep::FormatError("forecast input must contain time_index 1 records only");
  const rep::MaskedTensor cohort =
      align_to_model(ds, mf.gene_ids, static_cast<int>(mf.model.C.rows()));

  std::ostringstream fc, gels;
  fc << "patient_id,time_index,label,score\n";
  gels << "patient_id,gene_id,time_index,value\n";
  for (int i = 0; i < cohort.patients(); ++i) {
    const std::string& pid = ds.patient_ids[static_cast<std::size_t>(i)];
    rep::MaskedVector x1;
    x1.values.resize(cohort.genes());
    x1.observed.resize(static_cast<std::size_t>(cohort.genes()));
    for (int j = 0; j < cohort.genes(); ++j) {
      const bool seen = cohort.observed(i, j, 0);
      x1.observed[static_cast<std::size_t>(j)] = seen ? 1 : 0;
      x1.values(j) = seen ? cohort.value(i, j, 0) : 0.0;
    }
    const rep::CoursePrediction course = rep::forecast_course(mf.model, x1, latent_ridge);
    const rep::Matrix trajectory =
        rep::forecast_gels(x1, mf.model.B, mf.model.C, latent_ridge);
    for (std::size_t t = 0; t < course.labels.size(); ++t)
      fc << pid << ',' << (t + 1) << ',' << course.labels[t] << ','
         << format_double(course.scores[t]) << '\n';
    for (Eigen::Index j = 0; j < trajectory.rows(); ++j)
      for (Eigen::Index t = 0; t < trajectory.cols(); ++t)
        gels << pid << ',' << mf.gene_ids[static_cast<std::size_t>(j)] << ',' << (t + 1)
             << ',' << format_double(trajectory(j, t)) << '\n';
  }
  write_text(dir / "forecast.csv", fc.str());
  write_text(dir / "forecast_gels.csv", gels.str());
  std::cout << "wrote " << (dir / "forecast.csv").string() << " and forecast_gels.csv\n";
  return 0;
}

struct GridFlags {
  std::vector<int> ranks{2, 3, 4, 5};
  std::vector<double> lambdas{0.01, 0.1, 1.0};
  std::vector<double> rhos{0.5, 1.0, 2.0};
  std::vector<int> knn_k{3, 5, 8, 10};
  bool no_svm = false;
  bool no_knn = false;
  double completion_lambda = 1e-3;
  int completion_max_iters = 200;
  int epochs = 800;
  int tune_epochs = 250;
};

void add_grid(CLI::App* cmd, GridFlags& grid) {
  cmd->add_option("--ranks", grid.ranks, "Candidate ranks")->delimiter(',');
  cmd->add_option("--lambdas", grid.lambdas, "Candidate classifier ridges")->delimiter(',');
  cmd->add_option("--rhos", grid.rhos, "Candidate feedback scales")->delimiter(',');
  cmd->add_option("--knn-k", grid.knn_k, "Candidate neighbor counts")->delimiter(',');
  cmd->add_flag("--no-svm", grid.no_svm, "Skip the linear SVM baseline");
  cmd->add_flag("--no-knn", grid.no_knn, "Skip the KNN baseline");
  cmd->add_option("--completion-lambda", grid.completion_lambda,
                  "Ridge weight of the completion solver");
  cmd->add_option("--completion-max-iters", grid.completion_max_iters,
                  "Completion sweep limit");
  cmd->add_option("--epochs", grid.epochs, "Epochs for final per-fold training");
  cmd->add_option("--tune-epochs", grid.tune_epochs, "Epochs during grid search");
}

rep::CvOptions to_cv_options(const SharedFlags& flags, const GridFlags& grid) {
  rep::CvOptions opts;
  opts.protocol = rep::parse_protocol(flags.protocol);
  opts.seed = flags.seed;
  opts.run_svm = !grid.no_svm;
  opts.run_knn = !grid.no_knn;
  opts.completion_lambda = grid.completion_lambda;
  opts.completion_max_iters = grid.completion_max_iters;
  opts.train_epochs = grid.epochs;
  opts.tune_epochs = grid.tune_epochs;
  return opts;
}

rep::HyperGrid to_grid(const GridFlags& grid) {
  rep::HyperGrid g;
  g.ranks = grid.ranks;
  g.lambdas = grid.lambdas;
  g.rhos = grid.rhos;
  g.neighbor_counts = grid.knn_k;
  return g;
}

int run_cv(const SharedFlags& flags, const CohortInputs& inputs, const GridFlags& grid) {
  const fs::path dir = prepare_out(flags);
  auto [ds, labels] = load_cohort(inputs);
  const rep::CvReport report =
      rep::loo_cv(ds.tensor, labels, to_grid(grid), to_cv_options(flags, grid));

  rep::emit_cv_report(report, (dir / "cv_report.json").string());
  std::ostringstream summary;
  summary << "method,acc,auc\n";
  for (const std::string& m : report.methods) {
    const rep::MethodSummary& s = report.summary.at(m);
    summary << m << ',' << format_double(s.acc) << ',' << format_double(s.roc.auc) << '\n';
    rep::emit_roc_csv(s.roc, (dir / ("roc_" + m + ".csv")).string());
    std::cout << m << ": acc " << format_double(s.acc) << ", auc "
              << format_double(s.roc.auc) << '\n';
  }
  write_text(dir / "summary.csv", summary.str());
  return 0;
}

int run_mask_sweep(const SharedFlags& flags, const CohortInputs& inputs,
                   const GridFlags& grid, std::vector<double> rates,
                   std::vector<std::uint64_t> mask_seeds) {
  const fs::path dir = prepare_out(flags);
  auto [ds, labels] = load_cohort(inputs);
  if (mask_seeds.empty()) mask_seeds.push_back(flags.seed);
  const std::vector<rep::MaskSweepRow> rows = rep::masking_experiment(
      ds.tensor, labels, rates, mask_seeds, to_grid(grid), to_cv_options(flags, grid));
  rep::emit_mask_table(rows, (dir / "mask_sweep.csv").string());
  std::cout << "wrote " << (dir / "mask_sweep.csv").string() << " (" << rows.size()
            << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Expression-based recursive response prediction"};
  app.require_subcommand(1);

  SharedFlags synth_flags, complete_flags, train_flags, predict_flags, forecast_flags,
      cv_flags, sweep_flags;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort");
  rep::SyntheticSpec spec;
  add_shared(synth, synth_flags);
  synth->add_option("--patients", spec.patients, "Cohort size");
  synth->add_option("--genes", spec.genes, "Gene count");
  synth->add_option("--times", spec.times, "Time points");
  synth->add_option("--noise-std", spec.noise_std, "Additive noise level");
  synth->add_option("--missing-rate", spec.missing_rate, "Fraction of hidden cells");
  synth->add_option("--persistence", spec.persistence, "Label repeat probability");

  // complete
  auto* complete = app.add_subcommand("complete", "Low-rank completion of a cohort tensor");
  std::string complete_tensor_path;
  int complete_max_iters = 500;
  double complete_tol = 1e-6;
  add_shared(complete, complete_flags);
  complete->add_option("--tensor", complete_tensor_path, "Cohort records")->required();
  complete->add_option("--max-iters", complete_max_iters, "Sweep limit");
  complete->add_option("--tol", complete_tol, "Relative objective tolerance");

  // train
  auto* train_cmd = app.add_subcommand("train", "Complete the cohort and fit the predictor");
  CohortInputs train_inputs;
  double train_completion_lambda = 1e-3, train_completion_tol = 1e-6, train_step0 = 1.0;
  double train_l1 = -1.0;
  int train_completion_iters = 500, train_epochs = 800;
  bool train_no_standardize = false;
  add_shared(train_cmd, train_flags);
  train_cmd->add_option("--tensor", train_inputs.tensor_path, "Cohort records")->required();
  train_cmd->add_option("--labels", train_inputs.labels_path, "Response labels")->required();
  train_cmd->add_option("--completion-lambda", train_completion_lambda,
                        "Ridge weight of the completion solver");
  train_cmd->add_option("--completion-max-iters", train_completion_iters, "Sweep limit");
  train_cmd->add_option("--completion-tol", train_completion_tol, "Completion tolerance");
  train_cmd->add_option("--epochs", train_epochs, "Training epochs");
  train_cmd->add_option("--step0", train_step0, "Initial step size");
  train_cmd->add_option("--l1-radius", train_l1, "L1 ball radius on [u; v] (off when <= 0)");
  train_cmd->add_flag("--no-standardize", train_no_standardize,
                      "Train on raw completed features");

  // predict
  auto* predict = app.add_subcommand("predict", "Per-time predictions for new patients");
  std::string predict_model, predict_tensor, predict_labels;
  double predict_ridge = rep::kDefaultLatentRidge;
  add_shared(predict, predict_flags);
  predict->add_option("--model", predict_model, "Trained model JSON")->required();
  predict->add_option("--tensor", predict_tensor, "New patient records")->required();
  predict->add_option("--labels", predict_labels, "Known past labels (optional)");
  predict->add_option("--latent-ridge", predict_ridge, "Ridge for the latent fit");

  // forecast
  auto* forecast = app.add_subcommand(
      "forecast", "Full-course forecast from first-time-point measurements");
  std::string forecast_model, forecast_tensor;
  double forecast_ridge = rep::kDefaultLatentRidge;
  add_shared(forecast, forecast_flags);
  forecast->add_option("--model", forecast_model, "Trained model JSON")->required();
  forecast->add_option("--tensor", forecast_tensor, "Time-1 records")->required();
  forecast->add_option("--latent-ridge", forecast_ridge, "Ridge for the latent fit");

  // cv
  auto* cv = app.add_subcommand("cv", "Leave-one-patient-out cross-validation");
  CohortInputs cv_inputs;
  GridFlags cv_grid;
  add_shared(cv, cv_flags);
  cv->add_option("--tensor", cv_inputs.tensor_path, "Cohort records")->required();
  cv->add_option("--labels", cv_inputs.labels_path, "Response labels")->required();
  add_grid(cv, cv_grid);

  // mask-sweep
  auto* sweep = app.add_subcommand("mask-sweep", "Robustness to extra hidden entries");
  CohortInputs sweep_inputs;
  GridFlags sweep_grid;
  std::vector<double> sweep_rates{0.0, 0.05, 0.1, 0.15, 0.2};
  std::vector<std::uint64_t> sweep_seeds;
  add_shared(sweep, sweep_flags);
  sweep->add_option("--tensor", sweep_inputs.tensor_path, "Cohort records")->required();
  sweep->add_option("--labels", sweep_inputs.labels_path, "Response labels")->required();
  add_grid(sweep, sweep_grid);
  sweep->add_option("--rates", sweep_rates, "Hidden-entry rates")->delimiter(',');
  sweep->add_option("--mask-seeds", sweep_seeds, "Seeds for the extra masking")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (app.got_subcommand(synth)) {
      spec.rank = synth_flags.rank;
      spec.seed = synth_flags.seed;
      return run_synth(synth_flags, spec);
    }
    if (app.got_subcommand(complete))
      return run_complete(complete_flags, complete_tensor_path, complete_max_iters,
                          complete_tol);
    if (app.got_subcommand(train_cmd))
      return run_train(train_flags, train_inputs, train_completion_lambda,
                       train_completion_iters, train_completion_tol, train_epochs,
                       train_step0, train_l1, train_no_standardize);
    if (app.got_subcommand(predict))
      return run_predict(predict_flags, predict_model, predict_tensor, predict_labels,
                         predict_ridge);
    if (app.got_subcommand(forecast))
      return run_forecast(forecast_flags, forecast_model, forecast_tensor, forecast_ridge);
    if (app.got_subcommand(cv)) return run_cv(cv_flags, cv_inputs, cv_grid);
    if (app.got_subcommand(sweep))
      return run_mask_sweep(sweep_flags, sweep_inputs, sweep_grid, sweep_rates,
                            sweep_seeds);
    std::cerr << "error: no subcommand selected\n";
    return 1;
  } catch (const rep::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const rep::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
