// cobtrain: train / eval / sweep / pca / gen-data for the redundancy-reduction
// training library. Exit codes: 0 success, 2 config error, 3 runtime error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cob/config.hpp"
#include "cob/error.hpp"
#include "cob/runner.hpp"

namespace {

struct CommonTrainFlags {
  std::string config_path;
  std::string out_dir;
  std::string policy;
  uint64_t seed = 0;
  bool seed_set = false;
  int atb_n = -1;
  bool derive_kappa = false;
};

cob::RunConfig load_config(const CommonTrainFlags& f) {
  cob::RunConfig cfg = f.config_path.empty() ? cob::RunConfig{} : cob::RunConfig::from_file(f.config_path);
  if (f.seed_set) {
    cfg.seed = f.seed;
    // A fresh master seed re-derives every sub-seed.
    cfg.task.seed = 0;
    cfg.model.init_seed = 0;
    cfg.train.shuffle_seed = 0;
  }
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  if (!f.policy.empty()) cfg.policy.type = cob::policy_type_from_string(f.policy);
  if (f.atb_n >= 0) cfg.policy.atb_pretrain_epochs = f.atb_n;
  if (f.derive_kappa) cfg.derive_kappa = true;
  cfg.resolve();
  cfg.validate();
  return cfg;
}

std::vector<double> parse_doubles(const std::vector<std::string>& in) {
  std::vector<double> out;
  for (const std::string& s : in) out.push_back(std::stod(s));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Redundancy-reduction training harness for the synthetic multimodal QA task"};
  app.require_subcommand(1);

  CommonTrainFlags train_flags;
  CLI::App* train = app.add_subcommand("train", "Run one training per the config");
  train->add_option("--config", train_flags.config_path, "JSON run config (defaults if omitted)");
  train->add_option("--seed", train_flags.seed, "Master seed override")
      ->each([&](const std::string&) { train_flags.seed_set = true; });
  train->add_option("--out", train_flags.out_dir, "Output directory override");
  train->add_option("--policy", train_flags.policy, "ce|baseline|atb|cob");
  train->add_option("--atb-n", train_flags.atb_n, "ATB pretraining epochs")
      ->check(CLI::NonNegativeNumber);
  train->add_flag("--derive-kappa", train_flags.derive_kappa,
                  "Derive kappa from a CE-only pretraining run before training");

  std::string eval_checkpoint, eval_data, eval_split = "val", eval_topk_out;
  int eval_topk = 0;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset file");
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint.bin path")->required();
  eval->add_option("--data", eval_data, "dataset CSV path")->required();
  eval->add_option("--split", eval_split, "train|val (default val)");
  eval->add_option("--top-k", eval_topk, "Also emit per-sample top-k lists");
  eval->add_option("--top-k-out", eval_topk_out, "Where to write the top-k CSV");

  CommonTrainFlags sweep_flags;
  std::string sweep_param;
  std::vector<std::string> sweep_values;
  std::vector<uint64_t> sweep_seeds;
  CLI::App* sweep = app.add_subcommand("sweep", "One training per parameter value per seed");
  sweep->add_option("--config", sweep_flags.config_path, "Base JSON run config");
  sweep->add_option("--out", sweep_flags.out_dir, "Sweep output directory");
  sweep->add_option("--policy", sweep_flags.policy, "ce|baseline|atb|cob");
  sweep->add_option("--param", sweep_param, "atb_n|lambda_init|step|kappa|n_b_dim|gamma")
      ->required();
  sweep->add_option("--values", sweep_values, "Values to sweep")->required()->delimiter(',');
  sweep->add_option("--seeds", sweep_seeds, "Seeds (default 1,2,3)")->delimiter(',');

  std::string pca_checkpoint, pca_data, pca_out, pca_split = "val";
  std::vector<int> pca_ks;
  CLI::App* pca = app.add_subcommand("pca", "PCA energy of projector outputs");
  pca->add_option("--checkpoint", pca_checkpoint, "checkpoint.bin path")->required();
  pca->add_option("--data", pca_data, "dataset CSV path")->required();
  pca->add_option("--ks", pca_ks, "k values for the energy table")->required()->delimiter(',');
  pca->add_option("--out", pca_out, "Report CSV path");
  pca->add_option("--split", pca_split, "train|val (default val)");

  cob::TaskSpec gen_spec;
  std::string gen_out;
  uint64_t gen_seed = 1;
  CLI::App* gen = app.add_subcommand("gen-data", "Generate the synthetic dataset");
  gen->add_option("--out", gen_out, "Output CSV path")->required();
  gen->add_option("--seed", gen_seed, "Task seed");
  gen->add_option("--colors", gen_spec.n_colors, "Number of colors");
  gen->add_option("--shapes", gen_spec.n_shapes, "Number of shapes");
  gen->add_option("--image-dim", gen_spec.image_dim, "Image vector width");
  gen->add_option("--question-dim", gen_spec.question_dim, "Question vector width");
  gen->add_option("--noise", gen_spec.noise_sigma, "Noise sigma");
  gen->add_option("--n-train", gen_spec.n_train, "Training samples");
  gen->add_option("--n-val", gen_spec.n_val, "Validation samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*train) {
      const cob::TrainOutputs out = cob::cmd_train(load_config(train_flags));
      std::printf("out_dir=%s iterations=%ld final_train_acc=%.4f val_acc=%.4f redundancy_m=%.6f\n",
                  out.out_dir.c_str(), out.iterations, out.final_train_acc, out.val_accuracy,
                  out.redundancy_m);
    } else if (*eval) {
      const cob::EvalReport rep =
          cob::cmd_eval(eval_checkpoint, eval_data, eval_split, eval_topk, eval_topk_out);
      std::printf("n=%d overall=%.6f color: n=%d acc=%.6f shape: n=%d acc=%.6f\n", rep.n,
                  rep.overall, rep.n_color, rep.acc_color, rep.n_shape, rep.acc_shape);
    } else if (*sweep) {
      cob::RunConfig base = load_config(sweep_flags);
      std::vector<uint64_t> seeds = sweep_seeds;
      if (seeds.empty()) seeds = {1, 2, 3};
      const cob::SweepSummary summary =
          cob::cmd_sweep(base, sweep_param, parse_doubles(sweep_values), seeds);
      std::printf("sweep rows=%zu summary=%s\n", summary.rows.size(),
                  summary.summary_path.c_str());
      for (const cob::SweepRow& r : summary.rows) {
        std::printf("  %s=%g seed=%llu val_acc=%.4f redundancy_m=%.6f\n", r.param.c_str(),
                    r.value, static_cast<unsigned long long>(r.seed), r.val_accuracy,
                    r.redundancy_m);
      }
    } else if (*pca) {
      const cob::PcaReport rep = cob::cmd_pca(pca_checkpoint, pca_data, pca_ks, pca_out, pca_split);
      for (const auto& [k, e] : rep.k_table) std::printf("k=%d energy=%.6f\n", k, e);
      if (rep.degenerate) std::printf("warning: degenerate (all-constant) embeddings\n");
    } else if (*gen) {
      gen_spec.seed = gen_seed;
      cob::cmd_gen_data(gen_spec, gen_out);
      std::printf("wrote %s (%d train, %d val)\n", gen_out.c_str(), gen_spec.n_train,
                  gen_spec.n_val);
    }
  } catch (const cob::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
