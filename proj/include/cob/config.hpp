#pragma once

#include <string>
#include <vector>

#include "cob/barlow.hpp"
#include "cob/model.hpp"
#include "cob/optim.hpp"
#include "cob/policy.hpp"
#include "cob/synthdata.hpp"

namespace cob {

/// Full description of one training run. A resolved config (all defaults and
/// derived seeds expanded) plus the code version determines every output
/// byte; resolved configs are themselves valid input configs.
struct RunConfig {
  RunConfig() {
    // Sub-seed 0 means "derive from the master seed" (see resolve()).
    task.seed = 0;
    model.init_seed = 0;
    train.shuffle_seed = 0;
  }

  uint64_t seed = 1;
  std::string out_dir = "runs/default";

  TaskSpec task;            // task.seed derived from `seed` unless pinned
  ModelConfig model;        // image/question dims and n_answers mirror the task
  BarlowConfig barlow;      // n_b_dim mirrors model.n_b_dim
  Policy policy;
  AdamaxConfig optimizer;
  TrainerOptions train;     // shuffle_seed derived from `seed` unless pinned
  bool derive_kappa = false;

  /// Fill derived fields (sub-seeds, mirrored dims). Idempotent.
  void resolve();
  void validate() const;

  std::string to_json() const;                     // resolved, pretty-printed
  static RunConfig from_json(const std::string& text);
  static RunConfig from_file(const std::string& path);
  void write_file(const std::string& path) const;
};

/// Parameter hook for cmd_sweep. Throws ConfigError for unknown names.
/// Known: atb_n, lambda_init, step, kappa, n_b_dim, gamma.
void apply_sweep_value(RunConfig& cfg, const std::string& param, double value);

const std::vector<std::string>& sweep_parameter_names();

}  // namespace cob
