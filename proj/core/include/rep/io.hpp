#pragma once

#include <string>
#include <vector>

#include "rep/cross_validation.hpp"
#include "rep/predictor.hpp"
#include "rep/tensor.hpp"

namespace rep {

inline constexpr int kSchemaVersion = 1;

struct TensorDataset {
  MaskedTensor tensor;
  std::vector<std::string> patient_ids;
  std::vector<std::string> gene_ids;
};

/// Long-format delimited text with header patient_id,gene_id,time_index,value
/// (any column order; matched by name). Time indexes are 1-based; absent
/// cells are unobserved. Patient and gene order follow first appearance.
TensorDataset load_tensor(const std::string& path);

/// Observed cells only, in canonical patient/gene/time order.
void save_tensor(const std::string& path, const MaskedTensor& tensor,
                 const std::vector<std::string>& patient_ids,
                 const std::vector<std::string>& gene_ids);

/// Every cell of a dense tensor (e.g. a completion result).
void save_dense_tensor(const std::string& path, const Tensor3& tensor,
                       const std::vector<std::string>& patient_ids,
                       const std::vector<std::string>& gene_ids);

struct ResponseRecord {
  std::string patient_id;
  int time_index = 0;  // 1-based
  int label = 0;       // -1 or +1
};

/// Header patient_id,time_index,label; labels must be -1 or +1.
std::vector<ResponseRecord> load_response_records(const std::string& path);

/// Assemble a full response matrix aligned to the given patient order;
/// every (patient, time) pair must be covered exactly once.
ResponseMatrix response_matrix_from_records(const std::vector<ResponseRecord>& records,
                                            const std::vector<std::string>& patients,
                                            int times);

void save_labels(const std::string& path, const ResponseMatrix& labels);

struct CpModelFile {
  CpModel model;
  std::vector<std::string> patient_ids;
  std::vector<std::string> gene_ids;
};

void save_cp_model(const std::string& path, const CpModel& model,
                   const std::vector<std::string>& patient_ids,
                   const std::vector<std::string>& gene_ids);
CpModelFile load_cp_model(const std::string& path);

struct RepModelFile {
  RepModel model;
  std::vector<std::string> gene_ids;
};

void save_rep_model(const std::string& path, const RepModel& model,
                    const std::vector<std::string>& gene_ids);
RepModelFile load_rep_model(const std::string& path);

/// Deterministic JSON rendering of a cross-validation report; re-emitting
/// the same report yields byte-identical files. Empty reports are rejected.
void emit_cv_report(const CvReport& report, const std::string& path);

void emit_roc_csv(const RocCurve& curve, const std::string& path);

void emit_mask_table(const std::vector<MaskSweepRow>& rows, const std::string& path);

}  // namespace rep
