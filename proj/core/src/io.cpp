#include "rep/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "rep/errors.hpp"

namespace rep {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path + "'");
  return buffer.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << contents;
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    if (end == std::string::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

int parse_int_field(const std::string& field, const char* what, long line) {
  int value = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || field.empty())
    throw FormatError(std::string(what) + " must be an integer, got '" + field + "'", line);
  return value;
}

double parse_double_field(const std::string& field, const char* what, long line) {
  if (field.empty())
    throw FormatError(std::string(what) + " must be numeric, got an empty field", line);
  char* end = nullptr;
  const double value = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size())
    throw FormatError(std::string(what) + " must be numeric, got '" + field + "'", line);
  return value;
}

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

// Column positions for a header that must contain exactly the given names.
std::vector<std::size_t> match_header(const std::string& header_line,
                                      const std::vector<std::string>& names) {
  const std::vector<std::string> fields = split_fields(header_line);
  std::vector<std::size_t> positions(names.size());
  std::vector<bool> used(fields.size(), false);
  for (std::size_t n = 0; n < names.size(); ++n) {
    bool found = false;
    for (std::size_t f = 0; f < fields.size(); ++f) {
      if (fields[f] == names[n]) {
        positions[n] = f;
        used[f] = true;
        found = true;
        break;
      }
    }
    if (!found) throw FormatError("header lacks required column '" + names[n] + "'", 1);
  }
  for (std::size_t f = 0; f < fields.size(); ++f)
    if (!used[f]) throw FormatError("unexpected column '" + fields[f] + "'", 1);
  return positions;
}

int intern_id(const std::string& id, std::vector<std::string>& order,
              std::map<std::string, int>& index) {
  const auto it = index.find(id);
  if (it != index.end()) return it->second;
  const int next = static_cast<int>(order.size());
  order.push_back(id);
  index.emplace(id, next);
  return next;
}

json parse_json_file(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError("invalid JSON in '" + path + "': " + e.what());
  }
}

void require_schema(const json& doc, const char* kind, const std::string& path) {
  if (!doc.is_object()) throw FormatError("'" + path + "' is not a JSON object");
  if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer())
    throw FormatError("'" + path + "' lacks an integer schema_version");
  const auto version = doc["schema_version"].get<int>();
  if (version != kSchemaVersion)
    throw FormatError("unsupported schema_version " + std::to_string(version) + " in '" +
                      path + "'; this reader understands " + std::to_string(kSchemaVersion));
  if (!doc.contains("kind") || doc["kind"] != kind)
    throw FormatError("'" + path + "' is not a " + std::string(kind) + " file");
}

json matrix_to_json(const Matrix& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  return json(flat);
}

json vector_to_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Matrix matrix_from_json(const json& values, Eigen::Index rows, Eigen::Index cols,
                        const char* what) {
  if (!values.is_array() || static_cast<Eigen::Index>(values.size()) != rows * cols)
    throw FormatError(std::string(what) + " has the wrong element count");
  Matrix m(rows, cols);
  std::size_t at = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& cell = values[at++];
      if (!cell.is_number()) throw FormatError(std::string(what) + " holds a non-number");
      m(r, c) = cell.get<double>();
    }
  return m;
}

Vector vector_from_json(const json& values, const char* what) {
  if (!values.is_array()) throw FormatError(std::string(what) + " must be an array");
  Vector v(static_cast<Eigen::Index>(values.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const json& cell = values[static_cast<std::size_t>(i)];
    if (!cell.is_number()) throw FormatError(std::string(what) + " holds a non-number");
    v(i) = cell.get<double>();
  }
  return v;
}

std::vector<std::string> ids_from_json(const json& values, const char* what) {
  if (!values.is_array()) throw FormatError(std::string(what) + " must be an array");
  std::vector<std::string> ids;
  ids.reserve(values.size());
  for (const json& cell : values) {
    if (!cell.is_string()) throw FormatError(std::string(what) + " holds a non-string");
    ids.push_back(cell.get<std::string>());
  }
  return ids;
}

}  // namespace

TensorDataset load_tensor(const std::string& path) {
  const std::vector<std::string> lines = split_lines(read_file(path));
  if (lines.empty()) throw FormatError("'" + path + "' is empty");
  const auto cols =
      match_header(lines[0], {"patient_id", "gene_id", "time_index", "value"});

  struct Cell {
    int patient, gene, time;
    double value;
    long line;
  };
  std::vector<Cell> cells;
  std::vector<std::string> patients, genes;
  std::map<std::string, int> patient_index, gene_index;
  int max_time = 0;

  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    const long line_no = static_cast<long>(ln) + 1;
    const std::vector<std::string> fields = split_fields(lines[ln]);
    if (fields.size() != 4)
      throw FormatError("expected 4 fields, got " + std::to_string(fields.size()), line_no);
    const std::string& pid = fields[cols[0]];
    const std::string& gid = fields[cols[1]];
    if (pid.empty()) throw FormatError("empty patient_id", line_no);
    if (gid.empty()) throw FormatError("empty gene_id", line_no);
    const int time = parse_int_field(fields[cols[2]], "time_index", line_no);
    if (time < 1) throw FormatError("time_index must be >= 1", line_no);
    const double value = parse_double_field(fields[cols[3]], "value", line_no);
    if (!std::isfinite(value)) throw FormatError("value must be finite", line_no);
    if (value < 0.0)
      throw NumericError("negative gene value (line " + std::to_string(line_no) + ")");
    cells.push_back(Cell{intern_id(pid, patients, patient_index),
                         intern_id(gid, genes, gene_index), time, value, line_no});
    max_time = std::max(max_time, time);
  }
  if (cells.empty()) throw FormatError("'" + path + "' holds no data records");

  const int n_patients = static_cast<int>(patients.size());
  const int n_genes = static_cast<int>(genes.size());
  Tensor3 values(n_patients, n_genes, max_time);
  std::vector<std::uint8_t> mask(values.size(), 0);
  std::vector<long> first_line(values.size(), 0);
  for (const Cell& cell : cells) {
    const std::size_t at = values.flat(cell.patient, cell.gene, cell.time - 1);
    if (mask[at])
      throw FormatError("duplicate record for (" + patients[static_cast<std::size_t>(cell.patient)] +
                            ", " + genes[static_cast<std::size_t>(cell.gene)] + ", " +
                            std::to_string(cell.time) + "); first seen at line " +
                            std::to_string(first_line[at]),
                        cell.line);
    mask[at] = 1;
    first_line[at] = cell.line;
    values.data()[at] = cell.value;
  }
  return TensorDataset{MaskedTensor(std::move(values), std::move(mask)),
                       std::move(patients), std::move(genes)};
}

namespace {

void write_tensor_records(std::ostringstream& out, const std::vector<std::string>& patient_ids,
                          const std::vector<std::string>& gene_ids, const Tensor3& values,
                          const std::vector<std::uint8_t>* mask) {
  out << "patient_id,gene_id,time_index,value\n";
  for (int i = 0; i < values.patients(); ++i)
    for (int j = 0; j < values.genes(); ++j)
      for (int k = 0; k < values.times(); ++k) {
        if (mask && !(*mask)[values.flat(i, j, k)]) continue;
        out << patient_ids[static_cast<std::size_t>(i)] << ','
            << gene_ids[static_cast<std::size_t>(j)] << ',' << (k + 1) << ','
            << format_double(values(i, j, k)) << '\n';
      }
}

void check_ids(const std::vector<std::string>& patient_ids,
               const std::vector<std::string>& gene_ids, int patients, int genes) {
  if (static_cast<int>(patient_ids.size()) != patients)
    throw DimensionError("patient id count does not match the tensor");
  if (static_cast<int>(gene_ids.size()) != genes)
    throw DimensionError("gene id count does not match the tensor");
}

}  // namespace

void save_tensor(const std::string& path, const MaskedTensor& tensor,
                 const std::vector<std::string>& patient_ids,
                 const std::vector<std::string>& gene_ids) {
  check_ids(patient_ids, gene_ids, tensor.patients(), tensor.genes());
  std::ostringstream out;
  write_tensor_records(out, patient_ids, gene_ids, tensor.values(), &tensor.mask());
  write_file(path, out.str());
}

void save_dense_tensor(const std::string& path, const Tensor3& tensor,
                       const std::vector<std::string>& patient_ids,
                       const std::vector<std::string>& gene_ids) {
  check_ids(patient_ids, gene_ids, tensor.patients(), tensor.genes());
  std::ostringstream out;
  write_tensor_records(out, patient_ids, gene_ids, tensor, nullptr);
  write_file(path, out.str());
}

std::vector<ResponseRecord> load_response_records(const std::string& path) {
  const std::vector<std::string> lines = split_lines(read_file(path));
  if (lines.empty()) throw FormatError("'" + path + "' is empty");
  const auto cols = match_header(lines[0], {"patient_id", "time_index", "label"});

  std::vector<ResponseRecord> records;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    const long line_no = static_cast<long>(ln) + 1;
    const std::vector<std::string> fields = split_fields(lines[ln]);
    if (fields.size() != 3)
      throw FormatError("expected 3 fields, got " + std::to_string(fields.size()), line_no);
    ResponseRecord record;
    record.patient_id = fields[cols[0]];
    if (record.patient_id.empty()) throw FormatError("empty patient_id", line_no);
    record.time_index = parse_int_field(fields[cols[1]], "time_index", line_no);
    if (record.time_index < 1) throw FormatError("time_index must be >= 1", line_no);
    std::string label = fields[cols[2]];
    if (!label.empty() && label.front() == '+') label.erase(label.begin());
    record.label = parse_int_field(label, "label", line_no);
    if (record.label != 1 && record.label != -1)
      throw FormatError("label must be -1 or +1, got '" + fields[cols[2]] + "'", line_no);
    records.push_back(std::move(record));
  }
  if (records.empty()) throw FormatError("'" + path + "' holds no data records");
  return records;
}

ResponseMatrix response_matrix_from_records(const std::vector<ResponseRecord>& records,
                                            const std::vector<std::string>& patients,
                                            int times) {
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < patients.size(); ++i)
    index.emplace(patients[i], static_cast<int>(i));

  Eigen::MatrixXi labels =
      Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(patients.size()), times);
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> seen =
      Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(
          static_cast<Eigen::Index>(patients.size()), times);

  for (const ResponseRecord& record : records) {
    const auto it = index.find(record.patient_id);
    if (it == index.end())
      throw FormatError("label for unknown patient '" + record.patient_id + "'");
    if (record.time_index > times)
      throw FormatError("label time_index " + std::to_string(record.time_index) +
                        " exceeds the cohort's " + std::to_string(times) + " time points");
    if (seen(it->second, record.time_index - 1))
      throw FormatError("duplicate label for (" + record.patient_id + ", " +
                        std::to_string(record.time_index) + ")");
    seen(it->second, record.time_index - 1) = 1;
    labels(it->second, record.time_index - 1) = record.label;
  }
  for (std::size_t i = 0; i < patients.size(); ++i)
    for (int t = 0; t < times; ++t)
      if (!seen(static_cast<Eigen::Index>(i), t))
        throw FormatError("patient '" + patients[i] + "' lacks a label for time " +
                          std::to_string(t + 1));
  return ResponseMatrix(std::move(labels), patients);
}

void save_labels(const std::string& path, const ResponseMatrix& labels) {
  std::ostringstream out;
  out << "patient_id,time_index,label\n";
  for (int i = 0; i < labels.patients(); ++i)
    for (int t = 0; t < labels.times(); ++t)
      out << labels.patient_ids()[static_cast<std::size_t>(i)] << ',' << (t + 1) << ','
          << labels.label(i, t) << '\n';
  write_file(path, out.str());
}

void save_cp_model(const std::string& path, const CpModel& model,
                   const std::vector<std::string>& patient_ids,
                   const std::vector<std::string>& gene_ids) {
  check_ids(patient_ids, gene_ids, static_cast<int>(model.A.rows()),
            static_cast<int>(model.B.rows()));
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "cp_model";
  doc["patients"] = model.A.rows();
  doc["genes"] = model.B.rows();
  doc["times"] = model.C.rows();
  doc["rank"] = model.rank();
  doc["patient_ids"] = patient_ids;
  doc["gene_ids"] = gene_ids;
  doc["A"] = matrix_to_json(model.A);
  doc["B"] = matrix_to_json(model.B);
  doc["C"] = matrix_to_json(model.C);
  write_file(path, doc.dump(2) + "\n");
}

CpModelFile load_cp_model(const std::string& path) {
  const json doc = parse_json_file(path);
  require_schema(doc, "cp_model", path);
  try {
    const auto patients = doc.at("patients").get<Eigen::Index>();
    const auto genes = doc.at("genes").get<Eigen::Index>();
    const auto times = doc.at("times").get<Eigen::Index>();
    const auto rank = doc.at("rank").get<Eigen::Index>();
    if (patients < 1 || genes < 1 || times < 1 || rank < 1)
      throw FormatError("dimensions in '" + path + "' must be positive");
    CpModelFile out;
    out.model = CpModel(matrix_from_json(doc.at("A"), patients, rank, "A"),
                        matrix_from_json(doc.at("B"), genes, rank, "B"),
                        matrix_from_json(doc.at("C"), times, rank, "C"));
    out.patient_ids = ids_from_json(doc.at("patient_ids"), "patient_ids");
    out.gene_ids = ids_from_json(doc.at("gene_ids"), "gene_ids");
    check_ids(out.patient_ids, out.gene_ids, static_cast<int>(patients),
              static_cast<int>(genes));
    return out;
  } catch (const json::exception& e) {
    throw FormatError("malformed cp_model in '" + path + "': " + e.what());
  }
}

void save_rep_model(const std::string& path, const RepModel& model,
                    const std::vector<std::string>& gene_ids) {
  if (static_cast<Eigen::Index>(gene_ids.size()) != model.u.size())
    throw DimensionError("gene id count does not match the model weights");
  if (model.B.rows() != model.u.size() || model.C.cols() != model.B.cols())
    throw DimensionError("model factors disagree with the weight vector");
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "rep_model";
  doc["genes"] = model.u.size();
  doc["times"] = model.C.rows();
  doc["rank"] = model.B.cols();
  doc["gene_ids"] = gene_ids;
  doc["u"] = vector_to_json(model.u);
  doc["v"] = model.v;
  doc["b"] = model.b;
  doc["rho"] = model.rho;
  doc["lambda"] = model.lambda;
  doc["l1_radius"] = model.l1_radius ? json(*model.l1_radius) : json(nullptr);
  doc["B"] = matrix_to_json(model.B);
  doc["C"] = matrix_to_json(model.C);
  if (model.standardization) {
    doc["standardization"] = {{"mean", vector_to_json(model.standardization->mean)},
                              {"scale", vector_to_json(model.standardization->scale)}};
  } else {
    doc["standardization"] = nullptr;
  }
  write_file(path, doc.dump(2) + "\n");
}

RepModelFile load_rep_model(const std::string& path) {
  const json doc = parse_json_file(path);
  require_schema(doc, "rep_model", path);
  try {
    const auto genes = doc.at("genes").get<Eigen::Index>();
    const auto times = doc.at("times").get<Eigen::Index>();
    const auto rank = doc.at("rank").get<Eigen::Index>();
    if (genes < 1 || times < 1 || rank < 1)
      throw FormatError("dimensions in '" + path + "' must be positive");
    RepModelFile out;
    out.gene_ids = ids_from_json(doc.at("gene_ids"), "gene_ids");
    if (static_cast<Eigen::Index>(out.gene_ids.size()) != genes)
      throw FormatError("gene_ids length disagrees with 'genes' in '" + path + "'");
    RepModel& m = out.model;
    m.u = vector_from_json(doc.at("u"), "u");
    if (m.u.size() != genes) throw FormatError("'u' length disagrees with 'genes'");
    m.v = doc.at("v").get<double>();
    m.b = doc.at("b").get<double>();
    m.rho = doc.at("rho").get<double>();
    m.lambda = doc.at("lambda").get<double>();
    if (!doc.at("l1_radius").is_null()) m.l1_radius = doc.at("l1_radius").get<double>();
    m.B = matrix_from_json(doc.at("B"), genes, rank, "B");
    m.C = matrix_from_json(doc.at("C"), times, rank, "C");
    const json& std_block = doc.at("standardization");
    if (!std_block.is_null()) {
      Standardizer s;
      s.mean = vector_from_json(std_block.at("mean"), "standardization.mean");
      s.scale = vector_from_json(std_block.at("scale"), "standardization.scale");
      if (s.mean.size() != genes || s.scale.size() != genes)
        throw FormatError("standardization vectors disagree with 'genes'");
      m.standardization = std::move(s);
    }
    return out;
  } catch (const json::exception& e) {
    throw FormatError("malformed rep_model in '" + path + "': " + e.what());
  }
}

void emit_cv_report(const CvReport& report, const std::string& path) {
  if (report.folds.empty()) throw ConfigError("refusing to emit a report with no folds");
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "cv_report";
  doc["protocol"] = report.protocol;
  doc["seed"] = report.seed;
  doc["methods"] = report.methods;
  json summary = json::object();
  for (const auto& [method, s] : report.summary) {
    summary[method] = {{"acc", s.acc}, {"auc", s.roc.auc}};
  }
  doc["summary"] = summary;
  json folds = json::array();
  for (const CvFold& fold : report.folds) {
    json f;
    f["patient_id"] = fold.patient_id;
    json methods = json::object();
    for (const auto& [name, series] : fold.methods) {
      methods[name] = {{"acc", series.acc},
                       {"labels", series.labels},
                       {"scores", series.scores}};
    }
    f["methods"] = methods;
    json chosen = json::object();
    for (const auto& [name, choice] : fold.chosen) {
      chosen[name] = {{"rank", choice.rank},
                      {"lambda", choice.lambda},
                      {"rho", choice.rho},
                      {"neighbors", choice.neighbors}};
    }
    f["chosen"] = chosen;
    folds.push_back(std::move(f));
  }
  doc["folds"] = folds;
  write_file(path, doc.dump(2) + "\n");
}

void emit_roc_csv(const RocCurve& curve, const std::string& path) {
  std::ostringstream out;
  out << "fpr,tpr\n";
  for (const auto& [fpr, tpr] : curve.points)
    out << format_double(fpr) << ',' << format_double(tpr) << '\n';
  write_file(path, out.str());
}

void emit_mask_table(const std::vector<MaskSweepRow>& rows, const std::string& path) {
  std::ostringstream out;
  out << "rate,seed,method,acc,auc\n";
  for (const MaskSweepRow& row : rows)
    out << format_double(row.rate) << ',' << row.seed << ',' << row.method << ','
        << format_double(row.acc) << ',' << format_double(row.auc) << '\n';
  write_file(path, out.str());
}

}  // namespace rep
