#pragma once

#include <string>
#include <vector>

#include "cob/analysis.hpp"
#include "cob/config.hpp"

namespace cob {

struct TrainOutputs {
  std::string out_dir;
  std::string metrics_path;
  std::string checkpoint_path;
  std::string resolved_config_path;
  long iterations = 0;
  double final_train_acc = 0;  // last-iteration batch accuracy
  double val_accuracy = 0;
  double redundancy_m = 0;  // redundancy score of C^M over the validation set
  double kappa_used = 0;
};

/// Run one training per the config: writes metrics.csv, resolved_config.json,
/// checkpoint.bin, correlation exports (corr_{m,a,ma}.{csv,pgm}), and a
/// run.log sidecar (the only file carrying timestamps).
TrainOutputs cmd_train(RunConfig cfg);

struct EvalReport {
  int n = 0;
  double overall = 0;
  // Per queried-attribute breakdown (the task's analog of per-question-type
  // accuracy columns).
  int n_color = 0, n_shape = 0;
  double acc_color = 0, acc_shape = 0;
};

/// Evaluate a checkpoint on one split of a dataset file ("train" or "val").
/// With top_k > 0, writes per-sample top-k prediction lists next to the
/// report (CSV) at `top_k_out`.
EvalReport cmd_eval(const std::string& checkpoint_path, const std::string& dataset_path,
                    const std::string& split = "val", int top_k = 0,
                    const std::string& top_k_out = "");

struct SweepRow {
  std::string param;
  double value = 0;
  uint64_t seed = 0;
  double val_accuracy = 0;
  double redundancy_m = 0;
};

struct SweepSummary {
  std::vector<SweepRow> rows;
  std::string summary_path;
};

/// One training per (value, seed) with the parameter applied to a copy of the
/// base config. Runs land in out_dir subdirectories; the summary CSV has one
/// row per run.
SweepSummary cmd_sweep(const RunConfig& base, const std::string& param,
                       const std::vector<double>& values, const std::vector<uint64_t>& seeds);

/// PCA energy of the joint-side projector outputs over a dataset split.
PcaReport cmd_pca(const std::string& checkpoint_path, const std::string& dataset_path,
                  const std::vector<int>& ks, const std::string& report_out = "",
                  const std::string& split = "val");

/// Generate the synthetic dataset and write it as one CSV file.
void cmd_gen_data(const TaskSpec& spec, const std::string& out_path);

/// The kappa-derivation recipe: run CE-only pretraining with the given config
/// and read the decorrelation-loss plateau (relative change of the 50-iter
/// window mean below 1%). Returns the plateau value.
double derive_kappa_value(const RunConfig& cfg);

/// Joint-projector outputs for every sample of a dataset (rows aligned with
/// the dataset order).
Matrix collect_joint_projections(Model& model, const Dataset& data);

}  // namespace cob
