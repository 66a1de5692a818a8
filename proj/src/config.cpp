#include "cob/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cob/error.hpp"
#include "cob/rng.hpp"

namespace cob {
namespace {

using nlohmann::json;

// Seed sub-streams derived from the master seed.
enum : uint64_t { kSeedTask = 1, kSeedModelInit = 2, kSeedShuffle = 3 };

/// Typed field access with full-path error messages and unknown-key checks.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  Section child(const char* key) const {
    seen_.insert(key);
    return Section(j_.at(key), path_ + "." + key);
  }

  template <typename T>
  T get(const char* key, T fallback) const {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    return read<T>(key);
  }

  template <typename T>
  T require(const char* key) const {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(path_ + "." + key + ": missing required field");
    return read<T>(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError(path_ + "." + it.key() + ": unknown field");
      }
    }
  }

 private:
  template <typename T>
  T read(const char* key) const {
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError("");
      } else {
        if (!v.is_number()) throw ConfigError("");
      }
      return v.get<T>();
    } catch (...) {
      throw ConfigError(path_ + "." + key + ": wrong type (got " + std::string(v.type_name()) +
                        ")");
    }
  }

  const json& j_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

const char* off_diag_mode_name(OffDiagMode m) {
  return m == OffDiagMode::SquaredOffDiagonal ? "squared" : "paper_literal";
}

OffDiagMode off_diag_mode_from(const std::string& s) {
  if (s == "squared") return OffDiagMode::SquaredOffDiagonal;
  if (s == "paper_literal") return OffDiagMode::PaperLiteral;
  throw ConfigError("barlow.off_diag_mode: expected 'squared' or 'paper_literal', got '" + s +
                    "'");
}

}  // namespace

void RunConfig::resolve() {
  if (task.seed == 0) task.seed = derive_seed(seed, kSeedTask);
  if (model.init_seed == 0) model.init_seed = derive_seed(seed, kSeedModelInit);
  if (train.shuffle_seed == 0) train.shuffle_seed = derive_seed(seed, kSeedShuffle);
  model.image_dim = task.image_dim;
  model.question_dim = task.question_dim;
  model.n_answers = task.n_answers();
  barlow.n_b_dim = model.n_b_dim;
}

void RunConfig::validate() const {
  task.validate();
  model.validate();
  barlow.validate();
  policy.constraint.validate();
  optimizer.validate();
  if (policy.type == PolicyType::Atb && policy.atb_pretrain_epochs < 0) {
    throw ConfigError("policy.atb_n must be >= 0");
  }
  if (train.epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (train.batch_size < 2) throw ConfigError("train.batch_size must be >= 2");
  // Correlation exports run over the validation set as one batch.
  if (task.n_val < 2) throw ConfigError("task.n_val must be >= 2");
  if (out_dir.empty()) throw ConfigError("out_dir must be non-empty");
  if (model.image_dim != task.image_dim || model.question_dim != task.question_dim ||
      model.n_answers != task.n_answers() || barlow.n_b_dim != model.n_b_dim) {
    throw ConfigError("config not resolved: derived dims out of sync (call resolve())");
  }
}

std::string RunConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["derive_kappa"] = derive_kappa;
  j["task"] = {{"n_colors", task.n_colors},       {"n_shapes", task.n_shapes},
               {"image_dim", task.image_dim},     {"question_dim", task.question_dim},
               {"noise_sigma", task.noise_sigma}, {"n_train", task.n_train},
               {"n_val", task.n_val},             {"seed", task.seed}};
  j["model"] = {{"encoder_out", model.encoder_out},
                {"answer_embed_dim", model.answer_embed_dim},
                {"hidden_dim", model.hidden_dim},
                {"joint_dim", model.joint_dim},
                {"n_b_dim", model.n_b_dim},
                {"init_seed", model.init_seed}};
  j["barlow"] = {{"gamma", barlow.gamma},
                 {"epsilon", barlow.epsilon},
                 {"off_diag_mode", off_diag_mode_name(barlow.off_diag_mode)}};
  j["policy"] = {{"type", to_string(policy.type)},
                 {"atb_n", policy.atb_pretrain_epochs},
                 {"lambda_init", policy.constraint.lambda_init},
                 {"kappa", policy.constraint.kappa},
                 {"alpha", policy.constraint.alpha},
                 {"step_period", policy.constraint.step_period},
                 {"exp_clamp", policy.constraint.exp_clamp}};
  j["optimizer"] = {{"learning_rate", optimizer.learning_rate},
                    {"beta1", optimizer.beta1},
                    {"beta2", optimizer.beta2},
                    {"epsilon", optimizer.epsilon}};
  j["train"] = {{"epochs", train.epochs},
                {"batch_size", train.batch_size},
                {"shuffle_seed", train.shuffle_seed}};
  return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: JSON parse error: ") + e.what());
  }

  RunConfig cfg;
  Section root(j, "config");
  cfg.seed = root.get<uint64_t>("seed", cfg.seed);
  cfg.out_dir = root.get<std::string>("out_dir", cfg.out_dir);
  cfg.derive_kappa = root.get<bool>("derive_kappa", cfg.derive_kappa);

  if (root.has("task")) {
    Section s = root.child("task");
    cfg.task.n_colors = s.get<int>("n_colors", cfg.task.n_colors);
    cfg.task.n_shapes = s.get<int>("n_shapes", cfg.task.n_shapes);
    cfg.task.image_dim = s.get<int>("image_dim", cfg.task.image_dim);
    cfg.task.question_dim = s.get<int>("question_dim", cfg.task.question_dim);
    cfg.task.noise_sigma = s.get<double>("noise_sigma", cfg.task.noise_sigma);
    cfg.task.n_train = s.get<int>("n_train", cfg.task.n_train);
    cfg.task.n_val = s.get<int>("n_val", cfg.task.n_val);
    cfg.task.seed = s.get<uint64_t>("seed", 0);
    s.finish();
  } else {
    cfg.task.seed = 0;
  }

  if (root.has("model")) {
    Section s = root.child("model");
    cfg.model.encoder_out = s.get<int>("encoder_out", cfg.model.encoder_out);
    cfg.model.answer_embed_dim = s.get<int>("answer_embed_dim", cfg.model.answer_embed_dim);
    cfg.model.hidden_dim = s.get<int>("hidden_dim", cfg.model.hidden_dim);
    cfg.model.joint_dim = s.get<int>("joint_dim", cfg.model.joint_dim);
    cfg.model.n_b_dim = s.get<int>("n_b_dim", cfg.model.n_b_dim);
    cfg.model.init_seed = s.get<uint64_t>("init_seed", 0);
    s.finish();
  } else {
    cfg.model.init_seed = 0;
  }

  if (root.has("barlow")) {
    Section s = root.child("barlow");
    cfg.barlow.gamma = s.get<double>("gamma", cfg.barlow.gamma);
    cfg.barlow.epsilon = s.get<double>("epsilon", cfg.barlow.epsilon);
    cfg.barlow.off_diag_mode =
        off_diag_mode_from(s.get<std::string>("off_diag_mode", "squared"));
    s.finish();
  }

  if (root.has("policy")) {
    Section s = root.child("policy");
    cfg.policy.type = policy_type_from_string(s.get<std::string>("type", "cob"));
    cfg.policy.atb_pretrain_epochs = s.get<int>("atb_n", cfg.policy.atb_pretrain_epochs);
    cfg.policy.constraint.lambda_init =
        s.get<double>("lambda_init", cfg.policy.constraint.lambda_init);
    cfg.policy.constraint.kappa = s.get<double>("kappa", cfg.policy.constraint.kappa);
    cfg.policy.constraint.alpha = s.get<double>("alpha", cfg.policy.constraint.alpha);
    cfg.policy.constraint.step_period =
        s.get<long>("step_period", cfg.policy.constraint.step_period);
    cfg.policy.constraint.exp_clamp =
        s.get<double>("exp_clamp", cfg.policy.constraint.exp_clamp);
    s.finish();
  }

  if (root.has("optimizer")) {
    Section s = root.child("optimizer");
    cfg.optimizer.learning_rate = s.get<double>("learning_rate", cfg.optimizer.learning_rate);
    cfg.optimizer.beta1 = s.get<double>("beta1", cfg.optimizer.beta1);
    cfg.optimizer.beta2 = s.get<double>("beta2", cfg.optimizer.beta2);
    cfg.optimizer.epsilon = s.get<double>("epsilon", cfg.optimizer.epsilon);
    s.finish();
  }

  if (root.has("train")) {
    Section s = root.child("train");
    cfg.train.epochs = s.get<int>("epochs", cfg.train.epochs);
    cfg.train.batch_size = s.get<int>("batch_size", cfg.train.batch_size);
    cfg.train.shuffle_seed = s.get<uint64_t>("shuffle_seed", 0);
    s.finish();
  } else {
    cfg.train.shuffle_seed = 0;
  }

  root.finish();
  cfg.resolve();
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return from_json(ss.str());
}

void RunConfig::write_file(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("config: cannot open for write: " + path);
  os << to_json();
  if (!os) throw IoError("config: write failed: " + path);
}

const std::vector<std::string>& sweep_parameter_names() {
  static const std::vector<std::string> names = {"atb_n", "lambda_init", "step",
                                                 "kappa", "n_b_dim",     "gamma"};
  return names;
}

void apply_sweep_value(RunConfig& cfg, const std::string& param, double value) {
  auto as_int = [&](const char* what) {
    const double r = std::round(value);
    if (std::fabs(r - value) > 1e-9) {
      throw ConfigError(std::string("sweep: ") + what + " must be an integer, got " +
                        std::to_string(value));
    }
    return static_cast<int>(r);
  };
  if (param == "atb_n") {
    cfg.policy.atb_pretrain_epochs = as_int("atb_n");
  } else if (param == "lambda_init") {
    cfg.policy.constraint.lambda_init = value;
  } else if (param == "step") {
    cfg.policy.constraint.step_period = as_int("step");
  } else if (param == "kappa") {
    cfg.policy.constraint.kappa = value;
  } else if (param == "n_b_dim") {
    cfg.model.n_b_dim = as_int("n_b_dim");
    cfg.barlow.n_b_dim = cfg.model.n_b_dim;
  } else if (param == "gamma") {
    cfg.barlow.gamma = value;
  } else {
    throw ConfigError("sweep: unknown parameter '" + param +
                      "' (expected atb_n|lambda_init|step|kappa|n_b_dim|gamma)");
  }
}

}  // namespace cob
