#include "cob/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cob/checkpoint.hpp"
#include "cob/error.hpp"
#include "cob/metrics.hpp"
#include "cob/rng.hpp"

namespace cob {
namespace {

namespace fs = std::filesystem;

constexpr uint64_t kSeedAnswerTable = 4;

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[64];
  std::strftime(buf, sizeof(buf), "%Y-%m-%d %H:%M:%S", std::gmtime(&t));
  return buf;
}

AnswerEmbeddingTable make_table(const TaskSpec& task, int embed_dim) {
  return AnswerEmbeddingTable(task.n_answers(), embed_dim,
                              derive_seed(task.seed, kSeedAnswerTable));
}

ModelConfig model_config_for(const RunConfig& cfg) {
  ModelConfig m = cfg.model;
  m.image_dim = cfg.task.image_dim;
  m.question_dim = cfg.task.question_dim;
  m.n_answers = cfg.task.n_answers();
  return m;
}

EvalReport evaluate(const Model& model, const Dataset& data) {
  EvalReport rep;
  rep.n = data.size();
  if (rep.n == 0) return rep;
  const std::vector<int> idx = data.all_indices();
  const Matrix logits = model.eval_logits(data.images(idx), data.questions(idx));
  const std::vector<int> pred = predict(logits);
  int correct = 0, correct_color = 0, correct_shape = 0;
  for (int i = 0; i < rep.n; ++i) {
    const Sample& s = data.samples[static_cast<size_t>(i)];
    const bool ok = pred[static_cast<size_t>(i)] == s.answer;
    correct += ok;
    if (s.query == 0) {
      rep.n_color += 1;
      correct_color += ok;
    } else {
      rep.n_shape += 1;
      correct_shape += ok;
    }
  }
  rep.overall = static_cast<double>(correct) / rep.n;
  rep.acc_color = rep.n_color ? static_cast<double>(correct_color) / rep.n_color : 0.0;
  rep.acc_shape = rep.n_shape ? static_cast<double>(correct_shape) / rep.n_shape : 0.0;
  return rep;
}

const Dataset& pick_split(const std::pair<Dataset, Dataset>& data, const std::string& split) {
  if (split == "train") return data.first;
  if (split == "val") return data.second;
  throw ConfigError("split must be 'train' or 'val', got '" + split + "'");
}

}  // namespace

Matrix collect_joint_projections(Model& model, const Dataset& data) {
  Graph g;
  ParamBinder p(g);
  const std::vector<int> idx = data.all_indices();
  const Model::ClassifierForward fwd =
      model.forward_classifier(g, p, data.images(idx), data.questions(idx));
  const Value proj = model.project_joint(g, p, fwd.joint);
  return g.value(proj);
}

double derive_kappa_value(const RunConfig& cfg) {
  // The recipe: run CE-only pretraining and read where its decorrelation
  // loss stops changing. Under CE-only the projectors receive no gradient,
  // so the series tracks how the evolving joint features look through the
  // initialized projectors - the loss the constrained run starts from.
  RunConfig pre = cfg;
  pre.policy.type = PolicyType::CeOnly;
  pre.derive_kappa = false;
  pre.resolve();
  pre.validate();

  const auto [train_set, val_set] = generate(pre.task);
  const AnswerEmbeddingTable table = make_table(pre.task, pre.model.answer_embed_dim);
  Model model(model_config_for(pre));
  Trainer trainer(model, train_set, table, pre.policy, pre.barlow, pre.optimizer, pre.train);

  std::vector<double> l_b;
  trainer.run([&](const LossBreakdown& r) { l_b.push_back(r.l_b_m + r.l_b_a + r.l_b_ma); });
  if (l_b.empty()) throw ContractError("derive_kappa: no training iterations ran");

  const size_t w = 50;
  auto window_mean = [&](size_t end_exclusive) {
    const size_t lo = end_exclusive > w ? end_exclusive - w : 0;
    double s = 0.0;
    for (size_t i = lo; i < end_exclusive; ++i) s += l_b[i];
    return s / static_cast<double>(end_exclusive - lo);
  };

  // Saturation = the terminal plateau: the earliest point after which every
  // 50-iteration window mean changes by less than 1%. A momentarily flat
  // spot mid-trajectory (a dip or a peak) does not qualify.
  const size_t n = l_b.size();
  size_t plateau_start = n;  // index into window-end positions
  for (size_t t = n; t >= 2 * w; --t) {
    const double recent = window_mean(t);
    const double earlier = window_mean(t - w);
    if (std::fabs(recent - earlier) / std::max(std::fabs(earlier), 1e-12) < 0.01) {
      plateau_start = t;
    } else {
      break;
    }
    if (t == 2 * w) break;
  }
  if (plateau_start < n) {
    double s = 0.0;
    for (size_t i = plateau_start - w; i < n; ++i) s += l_b[i];
    return s / static_cast<double>(n - (plateau_start - w));
  }
  // Still moving at the end of the budget: the final window is the best
  // available saturation estimate.
  return window_mean(n);
}

TrainOutputs cmd_train(RunConfig cfg) {
  cfg.resolve();
  cfg.validate();
  if (cfg.derive_kappa) {
    cfg.policy.constraint.kappa = derive_kappa_value(cfg);
    cfg.derive_kappa = false;  // resolved config records the derived value
  }

  fs::create_directories(cfg.out_dir);
  TrainOutputs out;
  out.out_dir = cfg.out_dir;
  out.metrics_path = (fs::path(cfg.out_dir) / "metrics.csv").string();
  out.checkpoint_path = (fs::path(cfg.out_dir) / "checkpoint.bin").string();
  out.resolved_config_path = (fs::path(cfg.out_dir) / "resolved_config.json").string();
  out.kappa_used = cfg.policy.constraint.kappa;

  cfg.write_file(out.resolved_config_path);

  std::ofstream log(fs::path(cfg.out_dir) / "run.log", std::ios::trunc);
  log << timestamp_now() << " start policy=" << to_string(cfg.policy.type)
      << " seed=" << cfg.seed << "\n";

  const auto [train_set, val_set] = generate(cfg.task);
  const AnswerEmbeddingTable table = make_table(cfg.task, cfg.model.answer_embed_dim);
  Model model(model_config_for(cfg));
  Trainer trainer(model, train_set, table, cfg.policy, cfg.barlow, cfg.optimizer, cfg.train);

  std::vector<LossBreakdown> history;
  trainer.run([&](const LossBreakdown& r) { history.push_back(r); });
  write_metrics_csv(out.metrics_path, history);
  out.iterations = static_cast<long>(history.size());
  out.final_train_acc = history.empty() ? 0.0 : history.back().train_acc;

  save_checkpoint(out.checkpoint_path, model);

  const EvalReport rep = evaluate(model, val_set);
  out.val_accuracy = rep.overall;

  const Trainer::CorrelationSet corr = trainer.correlations(val_set);
  write_matrix_csv((fs::path(cfg.out_dir) / "corr_m.csv").string(), corr.m);
  write_matrix_csv((fs::path(cfg.out_dir) / "corr_a.csv").string(), corr.a);
  write_matrix_csv((fs::path(cfg.out_dir) / "corr_ma.csv").string(), corr.ma);
  write_heatmap_pgm((fs::path(cfg.out_dir) / "corr_m.pgm").string(), corr.m);
  write_heatmap_pgm((fs::path(cfg.out_dir) / "corr_a.pgm").string(), corr.a);
  write_heatmap_pgm((fs::path(cfg.out_dir) / "corr_ma.pgm").string(), corr.ma);
  out.redundancy_m = redundancy_score(corr.m);

  log << timestamp_now() << " done iterations=" << out.iterations
      << " val_acc=" << rep.overall << " (color=" << rep.acc_color
      << ", shape=" << rep.acc_shape << ") redundancy_m=" << out.redundancy_m
      << " kappa=" << out.kappa_used << "\n";
  return out;
}

EvalReport cmd_eval(const std::string& checkpoint_path, const std::string& dataset_path,
                    const std::string& split, int top_k_n, const std::string& top_k_out) {
  Model model = load_checkpoint(checkpoint_path);
  const auto data = read_dataset_csv(dataset_path);
  const Dataset& d = pick_split(data, split);

  const ModelConfig& mc = model.config();
  if (mc.image_dim != d.spec.image_dim || mc.question_dim != d.spec.question_dim ||
      mc.n_answers != d.spec.n_answers()) {
    throw ShapeError("cmd_eval: checkpoint dims (" + std::to_string(mc.image_dim) + "," +
                     std::to_string(mc.question_dim) + "," + std::to_string(mc.n_answers) +
                     ") do not match dataset (" + std::to_string(d.spec.image_dim) + "," +
                     std::to_string(d.spec.question_dim) + "," +
                     std::to_string(d.spec.n_answers()) + ")");
  }

  const EvalReport rep = evaluate(model, d);

  if (top_k_n > 0 && !top_k_out.empty()) {
    const std::vector<int> idx = d.all_indices();
    const Matrix logits = model.eval_logits(d.images(idx), d.questions(idx));
    const auto lists = top_k(logits, top_k_n);
    std::ofstream os(top_k_out, std::ios::trunc);
    if (!os) throw IoError("cmd_eval: cannot open for write: " + top_k_out);
    os << "index,answer,top_k\n";
    for (size_t i = 0; i < lists.size(); ++i) {
      os << i << "," << d.samples[i].answer << ",";
      for (size_t j = 0; j < lists[i].size(); ++j) {
        if (j) os << " ";
        os << lists[i][j];
      }
      os << "\n";
    }
  }
  return rep;
}

SweepSummary cmd_sweep(const RunConfig& base, const std::string& param,
                       const std::vector<double>& values, const std::vector<uint64_t>& seeds) {
  if (values.empty()) throw ConfigError("sweep: no values given");
  if (seeds.empty()) throw ConfigError("sweep: no seeds given");
  // Validate the parameter name before any run starts.
  {
    RunConfig probe = base;
    apply_sweep_value(probe, param, values.front());
  }

  fs::create_directories(base.out_dir);
  SweepSummary summary;
  summary.summary_path = (fs::path(base.out_dir) / ("sweep_" + param + ".csv")).string();

  for (double value : values) {
    for (uint64_t seed : seeds) {
      RunConfig cfg = base;
      cfg.seed = seed;
      cfg.task.seed = 0;  // re-derive everything from the run seed
      cfg.model.init_seed = 0;
      cfg.train.shuffle_seed = 0;
      apply_sweep_value(cfg, param, value);

      char tag[64];
      std::snprintf(tag, sizeof(tag), "%s_%g_s%llu", param.c_str(), value,
                    static_cast<unsigned long long>(seed));
      cfg.out_dir = (fs::path(base.out_dir) / tag).string();
      cfg.resolve();

      const TrainOutputs run = cmd_train(cfg);
      summary.rows.push_back(SweepRow{param, value, seed, run.val_accuracy, run.redundancy_m});
    }
  }

  std::ofstream os(summary.summary_path, std::ios::trunc);
  if (!os) throw IoError("sweep: cannot open for write: " + summary.summary_path);
  os << "param,value,seed,val_accuracy,redundancy_m\n";
  for (const SweepRow& r : summary.rows) {
    char line[256];
    std::snprintf(line, sizeof(line), "%s,%.17g,%llu,%.17g,%.17g", r.param.c_str(), r.value,
                  static_cast<unsigned long long>(r.seed), r.val_accuracy, r.redundancy_m);
    os << line << "\n";
  }
  return summary;
}

PcaReport cmd_pca(const std::string& checkpoint_path, const std::string& dataset_path,
                  const std::vector<int>& ks, const std::string& report_out,
                  const std::string& split) {
  Model model = load_checkpoint(checkpoint_path);
  const auto data = read_dataset_csv(dataset_path);
  const Dataset& d = pick_split(data, split);
  const Matrix proj = collect_joint_projections(model, d);
  const PcaReport report = pca_energy(proj, ks);
  if (!report_out.empty()) write_pca_report_csv(report_out, report);
  return report;
}

void cmd_gen_data(const TaskSpec& spec, const std::string& out_path) {
  const auto [train_set, val_set] = generate(spec);
  const fs::path p(out_path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  write_dataset_csv(out_path, train_set, val_set);
}

}  // namespace cob
