#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "rep/errors.hpp"
#include "rep/io.hpp"
#include "rep/synthetic.hpp"
#include "support.hpp"

using rep::FormatError;
using rep::MaskedTensor;
using rep::Tensor3;
using testutil::read_text;
using testutil::scratch_dir;
using testutil::write_text;

namespace {

std::vector<std::string> numbered_ids(const std::string& prefix, int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
  return ids;
}

bool throws_format_mentioning(const std::function<void()>& fn, const std::string& needle) {
  try {
    fn();
  } catch (const FormatError& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  } catch (...) {
    return false;
  }
  return false;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("loads a small long-format tensor") {
  const auto dir = scratch_dir("io_small");
  const auto path = (dir / "t.csv").string();
  write_text(path,
             "patient_id,gene_id,time_index,value\n"
             "p1,g1,1,0.5\n"
             "p1,g2,1,1.25\n"
             "p2,g1,1,3\n");
  const auto ds = rep::load_tensor(path);
  CHECK(ds.tensor.patients() == 2);
  CHECK(ds.tensor.genes() == 2);
  CHECK(ds.tensor.times() == 1);
  CHECK(ds.tensor.observed_count() == 3);
  CHECK(ds.patient_ids == std::vector<std::string>{"p1", "p2"});
  CHECK(ds.gene_ids == std::vector<std::string>{"g1", "g2"});
  CHECK(ds.tensor.value(0, 0, 0) == 0.5);
  CHECK(ds.tensor.value(0, 1, 0) == 1.25);
  CHECK(ds.tensor.value(1, 0, 0) == 3.0);
  CHECK_FALSE(ds.tensor.observed(1, 1, 0));
}

TEST_CASE("column order is free but the set is fixed") {
  const auto dir = scratch_dir("io_cols");
  const auto good = (dir / "good.csv").string();
  write_text(good,
             "value,time_index,gene_id,patient_id\n"
             "2.5,2,gX,pA\n");
  const auto ds = rep::load_tensor(good);
  CHECK(ds.tensor.times() == 2);
  CHECK(ds.tensor.value(0, 0, 1) == 2.5);
  CHECK_FALSE(ds.tensor.observed(0, 0, 0));

  const auto extra = (dir / "extra.csv").string();
  write_text(extra, "patient_id,gene_id,time_index,value,batch\np,g,1,1,x\n");
  CHECK(throws_format_mentioning([&] { rep::load_tensor(extra); }, "unexpected column"));

  const auto missing = (dir / "missing.csv").string();
  write_text(missing, "patient_id,gene_id,value\np,g,1\n");
  CHECK(throws_format_mentioning([&] { rep::load_tensor(missing); }, "time_index"));
}

TEST_CASE("record-level validation carries line numbers") {
  const auto dir = scratch_dir("io_lines");
  const std::string header = "patient_id,gene_id,time_index,value\n";

  const auto empty = (dir / "empty.csv").string();
  write_text(empty, header);
  CHECK(throws_format_mentioning([&] { rep::load_tensor(empty); }, "no data records"));

  const auto dup = (dir / "dup.csv").string();
  write_text(dup, header + "p,g,1,1\np,g,1,2\n");
  CHECK(throws_format_mentioning([&] { rep::load_tensor(dup); }, "line 3"));

  const auto neg = (dir / "neg.csv").string();
  write_text(neg, header + "p,g,1,-2\n");
  CHECK_THROWS_AS(rep::load_tensor(neg), rep::NumericError);

  const auto badtime = (dir / "badtime.csv").string();
  write_text(badtime, header + "p,g,0,1\n");
  CHECK(throws_format_mentioning([&] { rep::load_tensor(badtime); }, "time_index"));

  const auto nonnum = (dir / "nonnum.csv").string();
  write_text(nonnum, header + "p,g,1,abc\n");
  CHECK(throws_format_mentioning([&] { rep::load_tensor(nonnum); }, "line 2"));

  const auto short_row = (dir / "short.csv").string();
  write_text(short_row, header + "p,g,1\n");
  CHECK(throws_format_mentioning([&] { rep::load_tensor(short_row); }, "4 fields"));
}

TEST_CASE("windows line endings are tolerated") {
  const auto dir = scratch_dir("io_crlf");
  const auto path = (dir / "t.csv").string();
  write_text(path, "patient_id,gene_id,time_index,value\r\np,g,1,0.75\r\n");
  const auto ds = rep::load_tensor(path);
  CHECK(ds.tensor.value(0, 0, 0) == 0.75);
}

TEST_CASE("tensor save/load round trip is exact") {
  rep::SyntheticSpec spec;
  spec.patients = 5;
  spec.genes = 6;
  spec.times = 4;
  spec.missing_rate = 0.2;
  spec.seed = 71;
  const auto data = rep::generate_synthetic(spec);

  const auto dir = scratch_dir("io_roundtrip");
  const auto path = (dir / "t.csv").string();
  const auto pids = numbered_ids("p", 5);
  const auto gids = numbered_ids("g", 6);
  rep::save_tensor(path, data.tensor, pids, gids);
  const auto loaded = rep::load_tensor(path);
  CHECK(loaded.patient_ids == pids);
  CHECK(loaded.gene_ids == gids);
  REQUIRE(loaded.tensor.patients() == 5);
  CHECK(loaded.tensor.mask() == data.tensor.mask());
  CHECK(loaded.tensor.values().data() == data.tensor.values().data());

  const auto again = (dir / "t2.csv").string();
  rep::save_tensor(again, loaded.tensor, loaded.patient_ids, loaded.gene_ids);
  CHECK(read_text(path) == read_text(again));
}

TEST_CASE("17 significant digits survive the text round trip") {
  Tensor3 t(1, 2, 1);
  t(0, 0, 0) = 0.1 + 0.2;  // 0.30000000000000004
  t(0, 1, 0) = 1.0 / 3.0;
  const auto dir = scratch_dir("io_digits");
  const auto path = (dir / "t.csv").string();
  rep::save_tensor(path, MaskedTensor::fully_observed(t), {"p"}, {"g1", "g2"});
  const auto loaded = rep::load_tensor(path);
  CHECK(loaded.tensor.value(0, 0, 0) == 0.1 + 0.2);
  CHECK(loaded.tensor.value(0, 1, 0) == 1.0 / 3.0);
}

TEST_CASE("cohort-sized tensor loads with the expected shape") {
  rep::SyntheticSpec spec;
  spec.patients = 27;
  spec.genes = 76;
  spec.times = 7;
  spec.seed = 73;
  spec.missing_rate = 0.05;
  const auto data = rep::generate_synthetic(spec);
  const auto dir = scratch_dir("io_cohort");
  const auto path = (dir / "cohort.csv").string();
  rep::save_tensor(path, data.tensor, data.labels.patient_ids(), numbered_ids("g", 76));
  const auto loaded = rep::load_tensor(path);
  CHECK(loaded.tensor.patients() == 27);
  CHECK(loaded.tensor.genes() == 76);
  CHECK(loaded.tensor.times() == 7);
}

TEST_CASE("labels round trip and validate") {
  rep::SyntheticSpec spec;
  spec.patients = 4;
  spec.genes = 5;
  spec.times = 3;
  spec.seed = 79;
  const auto data = rep::generate_synthetic(spec);
  const auto dir = scratch_dir("io_labels");
  const auto path = (dir / "labels.csv").string();
  rep::save_labels(path, data.labels);
  const auto records = rep::load_response_records(path);
  CHECK(records.size() == 12);
  const auto matrix =
      rep::response_matrix_from_records(records, data.labels.patient_ids(), 3);
  CHECK(matrix.labels() == data.labels.labels());

  const auto plus = (dir / "plus.csv").string();
  write_text(plus, "patient_id,time_index,label\na,1,+1\nb,1,-1\n");
  const auto plus_records = rep::load_response_records(plus);
  CHECK(plus_records[0].label == 1);
  CHECK(plus_records[1].label == -1);

  const auto bad = (dir / "bad.csv").string();
  write_text(bad, "patient_id,time_index,label\na,1,2\n");
  CHECK(throws_format_mentioning([&] { rep::load_response_records(bad); }, "label"));

  CHECK_THROWS_AS(rep::response_matrix_from_records(plus_records, {"a"}, 1), FormatError);
  CHECK_THROWS_AS(rep::response_matrix_from_records(plus_records, {"a", "b"}, 2),
                  FormatError);  // time 2 uncovered
  auto shifted = plus_records;
  shifted[1].patient_id = "a";
  CHECK_THROWS_AS(rep::response_matrix_from_records(shifted, {"a", "b"}, 1), FormatError);
}

TEST_CASE("cp model files reload to a bit-identical model") {
  rep::Rng rng(83);
  const auto model = rep::CpModel::random_uniform(4, 6, 3, 2, rng);
  const auto dir = scratch_dir("io_cp");
  const auto path = (dir / "cp.json").string();
  rep::save_cp_model(path, model, numbered_ids("p", 4), numbered_ids("g", 6));
  const auto loaded = rep::load_cp_model(path);
  CHECK(loaded.model.A == model.A);
  CHECK(loaded.model.B == model.B);
  CHECK(loaded.model.C == model.C);
  CHECK(loaded.patient_ids == numbered_ids("p", 4));
  const Tensor3 a = rep::reconstruct(model);
  const Tensor3 b = rep::reconstruct(loaded.model);
  CHECK(a.data() == b.data());

  const auto again = (dir / "cp2.json").string();
  rep::save_cp_model(again, loaded.model, loaded.patient_ids, loaded.gene_ids);
  CHECK(read_text(path) == read_text(again));
}

TEST_CASE("rep model files reload to bit-identical predictions") {
  rep::Rng rng(89);
  rep::RepModel model;
  const int genes = 7;
  model.u = rep::Vector::Zero(genes);
  for (int j = 0; j < genes; ++j) model.u(j) = rng.normal();
  model.v = 0.37;
  model.b = -0.21;
  model.rho = 1.5;
  model.lambda = 0.05;
  model.l1_radius = 2.5;
  const auto cp = rep::CpModel::random_uniform(2, genes, 4, 3, rng);
  model.B = cp.B;
  model.C = cp.C;
  rep::Matrix rows(5, genes);
  for (int r = 0; r < 5; ++r)
    for (int j = 0; j < genes; ++j) rows(r, j) = rng.uniform01();
  model.standardization = rep::Standardizer::fit(rows);

  const auto dir = scratch_dir("io_rep");
  const auto path = (dir / "rep.json").string();
  rep::save_rep_model(path, model, numbered_ids("g", genes));
  const auto loaded = rep::load_rep_model(path);
  CHECK(loaded.model.u == model.u);
  CHECK(loaded.model.v == model.v);
  CHECK(loaded.model.b == model.b);
  CHECK(loaded.model.rho == model.rho);
  CHECK(loaded.model.l1_radius == model.l1_radius);
  REQUIRE(loaded.model.standardization.has_value());

  for (int trial = 0; trial < 100; ++trial) {
    rep::Vector z(genes);
    for (int j = 0; j < genes; ++j) z(j) = 3.0 * rng.uniform01();
    const double y_tilde = static_cast<double>(rng.uniform_int(-3, 3));
    const auto a = rep::predict_step(model, z, y_tilde);
    const auto b = rep::predict_step(loaded.model, z, y_tilde);
    REQUIRE(a.first == b.first);
    REQUIRE(a.second == b.second);
  }

  // a model without the nullable parts round-trips too
  rep::RepModel plain;
  plain.u = model.u;
  plain.B = cp.B;
  plain.C = cp.C;
  const auto plain_path = (dir / "plain.json").string();
  rep::save_rep_model(plain_path, plain, numbered_ids("g", genes));
  const auto plain_loaded = rep::load_rep_model(plain_path);
  CHECK_FALSE(plain_loaded.model.l1_radius.has_value());
  CHECK_FALSE(plain_loaded.model.standardization.has_value());
  CHECK(plain_loaded.model.u == plain.u);
}

TEST_CASE("model files reject truncation, schema and kind mismatches") {
  rep::Rng rng(97);
  const auto model = rep::CpModel::random_uniform(3, 4, 2, 2, rng);
  const auto dir = scratch_dir("io_reject");
  const auto path = (dir / "cp.json").string();
  rep::save_cp_model(path, model, numbered_ids("p", 3), numbered_ids("g", 4));

  const std::string text = read_text(path);
  const auto truncated = (dir / "cut.json").string();
  write_text(truncated, text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(rep::load_cp_model(truncated), FormatError);

  const auto wrong_version = (dir / "v99.json").string();
  std::string bumped = text;
  const auto at = bumped.find("\"schema_version\": 1");
  REQUIRE(at != std::string::npos);
  bumped.replace(at, std::string("\"schema_version\": 1").size(), "\"schema_version\": 99");
  write_text(wrong_version, bumped);
  CHECK(throws_format_mentioning([&] { rep::load_cp_model(wrong_version); },
                                 "schema_version 99"));

  CHECK(throws_format_mentioning([&] { rep::load_rep_model(path); }, "rep_model"));
  CHECK_THROWS_AS(rep::load_cp_model((dir / "absent.json").string()), rep::IoError);
}

TEST_CASE("cv report files are deterministic and reject empty reports") {
  rep::CvReport report;
  report.protocol = "validation-record";
  report.seed = 3;
  report.methods = {"rep"};
  rep::CvFold fold;
  fold.patient_id = "p0";
  fold.methods["rep"] = rep::PredictionSeries{{1, -1}, {0.25, -0.5}, 0.5};
  fold.chosen["rep"] = rep::HyperChoice{3, 0.1, 2.0, 0};
  report.folds.push_back(fold);
  rep::MethodSummary summary;
  summary.acc = 0.5;
  summary.roc = rep::roc_auc({0.25, -0.5}, {1, -1});
  report.summary["rep"] = summary;

  const auto dir = scratch_dir("io_report");
  const auto a = (dir / "a.json").string();
  const auto b = (dir / "b.json").string();
  rep::emit_cv_report(report, a);
  rep::emit_cv_report(report, b);
  const auto text = read_text(a);
  CHECK(text == read_text(b));
  CHECK(text.find("\"protocol\"") != std::string::npos);

  rep::CvReport empty;
  empty.protocol = "validation-record";
  CHECK_THROWS_AS(rep::emit_cv_report(empty, (dir / "empty.json").string()),
                  rep::ConfigError);
}

TEST_CASE("roc csv re-integrates to its AUC") {
  const auto curve = rep::roc_auc({0.9, 0.7, 0.4, 0.2}, {1, 1, -1, -1});
  REQUIRE(curve.auc == 1.0);
  const auto dir = scratch_dir("io_roc");
  const auto path = (dir / "roc.csv").string();
  rep::emit_roc_csv(curve, path);

  const std::string text = read_text(path);
  std::vector<std::pair<double, double>> points;
  std::size_t start = text.find('\n') + 1;  // skip header
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    const auto comma = line.find(',');
    REQUIRE(comma != std::string::npos);
    points.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
    start = end + 1;
  }
  REQUIRE(points.size() == curve.points.size());
  double auc = 0.0;
  for (std::size_t s = 1; s < points.size(); ++s)
    auc += (points[s].first - points[s - 1].first) *
           (points[s].second + points[s - 1].second) / 2.0;
  CHECK(auc == 1.0);
  CHECK(text.rfind("fpr,tpr\n", 0) == 0);
}

TEST_CASE("mask sweep table has a header and one line per row") {
  std::vector<rep::MaskSweepRow> rows;
  rows.push_back({0.0, 1, "rep", 0.8, 0.9});
  rows.push_back({0.0, 2, "rep", 0.7, 0.85});
  rows.push_back({0.1, 1, "rep", 0.75, 0.88});
  rows.push_back({0.1, 2, "rep", 0.65, 0.8});
  const auto dir = scratch_dir("io_mask");
  const auto path = (dir / "sweep.csv").string();
  rep::emit_mask_table(rows, path);
  const std::string text = read_text(path);
  CHECK(text.rfind("rate,seed,method,acc,auc\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
}

}  // TEST_SUITE
