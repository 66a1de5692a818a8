#include "cob/policy.hpp"

#include <algorithm>
#include <cmath>

#include "cob/error.hpp"
#include "cob/rng.hpp"

namespace cob {

const char* to_string(PolicyType t) {
  switch (t) {
    case PolicyType::CeOnly: return "ce";
    case PolicyType::Baseline: return "baseline";
    case PolicyType::Atb: return "atb";
    case PolicyType::Cob: return "cob";
  }
  return "?";
}

PolicyType policy_type_from_string(const std::string& s) {
  if (s == "ce") return PolicyType::CeOnly;
  if (s == "baseline") return PolicyType::Baseline;
  if (s == "atb") return PolicyType::Atb;
  if (s == "cob") return PolicyType::Cob;
  throw ConfigError("policy.type: unknown policy '" + s + "' (expected ce|baseline|atb|cob)");
}

void ConstraintConfig::validate() const {
  if (!(lambda_init > 0.0)) throw ConfigError("policy.lambda_init must be > 0");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("policy.alpha must be in [0,1)");
  if (step_period < 1) throw ConfigError("policy.step_period must be >= 1");
  if (!(exp_clamp > 0.0)) throw ConfigError("policy.exp_clamp must be > 0");
  if (!std::isfinite(kappa)) throw ConfigError("policy.kappa must be finite");
}

ConstraintState ConstraintState::init(const ConstraintConfig& cfg) {
  cfg.validate();
  ConstraintState s;
  s.lambda = cfg.lambda_init;
  s.config = cfg;
  return s;
}

Value total_loss(Graph& g, const Policy& policy, Value l_ce, Value l_b, int epoch,
                 const ConstraintState* state) {
  switch (policy.type) {
    case PolicyType::CeOnly:
      return l_ce;
    case PolicyType::Baseline:
      return g.add(l_ce, l_b);
    case PolicyType::Atb:
      if (policy.atb_pretrain_epochs < 0) throw ContractError("total_loss: Atb n must be >= 0");
      if (epoch <= policy.atb_pretrain_epochs) return l_ce;
      return g.scale(g.add(l_ce, l_b), 0.5);
    case PolicyType::Cob: {
      if (state == nullptr) {
        throw ContractError("total_loss: Cob policy requires a constraint state");
      }
      return g.add(l_ce, g.scale(g.add_scalar(l_b, -state->config.kappa), state->lambda));
    }
  }
  throw ContractError("total_loss: unknown policy");
}

void update_constraint(ConstraintState& state, double l_b_value) {
  if (!std::isfinite(l_b_value)) {
    throw NumericError("update_constraint: non-finite decorrelation loss");
  }
  const double instantaneous = l_b_value - state.config.kappa;
  if (state.initialized) {
    state.momentum =
        state.config.alpha * state.momentum + (1.0 - state.config.alpha) * instantaneous;
  } else {
    state.momentum = instantaneous;
    state.initialized = true;
  }
  state.iteration += 1;
}

void update_lambda(ConstraintState& state) {
  if (state.iteration % state.config.step_period != 0) return;
  const double arg =
      std::clamp(state.momentum, -state.config.exp_clamp, state.config.exp_clamp);
  state.lambda *= std::exp(arg);
}

Trainer::Trainer(Model& model, const Dataset& data, const AnswerEmbeddingTable& answers,
                 const Policy& policy, const BarlowConfig& barlow, const AdamaxConfig& optimizer,
                 const TrainerOptions& options)
    : model_(model),
      data_(data),
      answers_(answers),
      policy_(policy),
      barlow_(barlow),
      options_(options),
      optimizer_(optimizer),
      constraint_(ConstraintState::init(policy.constraint)) {
  barlow_.validate();
  if (options_.epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (options_.batch_size < 2) throw ConfigError("train.batch_size must be >= 2");
  if (data_.size() < 2) throw ContractError("Trainer: dataset needs at least 2 samples");
}

LossBreakdown Trainer::train_batch(const std::vector<int>& batch, int epoch) {
  Graph g;
  ParamBinder p(g);

  const Matrix images = data_.images(batch);
  const Matrix questions = data_.questions(batch);
  const std::vector<int> batch_answers = data_.answers(batch);

  const Model::ClassifierForward fwd = model_.forward_classifier(g, p, images, questions);
  const Value l_ce = cross_entropy(g, fwd.logits, batch_answers);

  const Value m_proj = model_.project_joint(g, p, fwd.joint);
  const Value a_proj = model_.project_answers(g, p, answers_.embed(batch_answers));
  const Value s_m = batch_center(g, m_proj);
  const Value s_a = batch_center(g, a_proj);
  const BarlowTerms barlow = combined_barlow(g, s_m, s_a, barlow_);

  const ConstraintState* state = policy_.type == PolicyType::Cob ? &constraint_ : nullptr;
  const Value total = total_loss(g, policy_, l_ce, barlow.total, epoch, state);

  LossBreakdown rec;
  rec.epoch = epoch;
  rec.l_ce = g.scalar(l_ce);
  rec.l_b_m = g.scalar(barlow.loss_m);
  rec.l_b_a = g.scalar(barlow.loss_a);
  rec.l_b_ma = g.scalar(barlow.loss_ma);
  rec.l_total = g.scalar(total);
  rec.lambda = constraint_.lambda;  // the multiplier the gradient step used

  const std::vector<int> predicted = predict(g.value(fwd.logits));
  int correct = 0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == batch_answers[i]) ++correct;
  }
  rec.train_acc = static_cast<double>(correct) / static_cast<double>(batch.size());

  g.backward(total);
  optimizer_.step(p.hosts(), p.grads());

  const double l_b_value = rec.l_b_m + rec.l_b_a + rec.l_b_ma;
  if (policy_.type == PolicyType::Cob) {
    update_constraint(constraint_, l_b_value);
    update_lambda(constraint_);
    rec.constraint = constraint_.momentum;
  } else {
    rec.constraint = l_b_value - policy_.constraint.kappa;
  }

  iteration_ += 1;
  rec.iteration = iteration_;
  return rec;
}

std::vector<LossBreakdown> Trainer::run_epoch(int epoch) {
  std::vector<int> order = data_.all_indices();
  Rng rng = Rng::stream(options_.shuffle_seed, 31, static_cast<uint64_t>(epoch));
  for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
    const int j = rng.uniform_int(i + 1);
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }

  std::vector<LossBreakdown> records;
  for (size_t start = 0; start < order.size(); start += static_cast<size_t>(options_.batch_size)) {
    const size_t end = std::min(order.size(), start + static_cast<size_t>(options_.batch_size));
    if (end - start < 2) break;  // a 1-sample tail cannot be batch-centered
    const std::vector<int> batch(order.begin() + static_cast<long>(start),
                                 order.begin() + static_cast<long>(end));
    records.push_back(train_batch(batch, epoch));
  }
  return records;
}

void Trainer::run(const std::function<void(const LossBreakdown&)>& on_iteration) {
  for (int epoch = 1; epoch <= options_.epochs; ++epoch) {
    for (const LossBreakdown& rec : run_epoch(epoch)) {
      if (on_iteration) on_iteration(rec);
    }
  }
}

Trainer::CorrelationSet Trainer::correlations(const Dataset& data) const {
  Graph g;
  ParamBinder p(g);
  const std::vector<int> idx = data.all_indices();
  const Matrix images = data.images(idx);
  const Matrix questions = data.questions(idx);
  const std::vector<int> ans = data.answers(idx);

  const Model::ClassifierForward fwd = model_.forward_classifier(g, p, images, questions);
  const Value m_proj = model_.project_joint(g, p, fwd.joint);
  const Value a_proj = model_.project_answers(g, p, answers_.embed(ans));
  const BarlowTerms terms =
      combined_barlow(g, batch_center(g, m_proj), batch_center(g, a_proj), barlow_);

  return CorrelationSet{g.value(terms.corr_m.values), g.value(terms.corr_a.values),
                        g.value(terms.corr_ma.values)};
}

}  // namespace cob
