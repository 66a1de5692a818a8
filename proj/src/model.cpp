#include "cob/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cob/error.hpp"
#include "cob/rng.hpp"

namespace cob {
namespace {

// Seed sub-streams for weight initialization.
enum : uint64_t {
  kStreamImageEnc = 101,
  kStreamQuestionEnc = 102,
  kStreamJoint = 103,
  kStreamHead = 104,
  kStreamProjM = 105,
  kStreamProjA = 106,
};

Matrix uniform_init(int rows, int cols, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix m(rows, cols);
  for (long i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  return m;
}

// x -> relu(x W1 + b1) W2 + b2
Value mlp2(Graph& g, Value x, Value w1, Value b1, Value w2, Value b2) {
  const Value h = g.relu(g.add_rowvec(g.matmul(x, w1), b1));
  return g.add_rowvec(g.matmul(h, w2), b2);
}

// Projector: h1 = x W1 + b1 (pre-relu residual tap), h2 = relu(h1) W2 + b2,
// output = per-sample standardization of (h1 + h2).
constexpr double kProjectorNormEps = 1e-12;

Value projector_forward(Graph& g, Value x, Value w1, Value b1, Value w2, Value b2) {
  const Value h1 = g.add_rowvec(g.matmul(x, w1), b1);
  const Value h2 = g.add_rowvec(g.matmul(g.relu(h1), w2), b2);
  return g.row_standardize(g.add(h1, h2), kProjectorNormEps);
}

}  // namespace

void ModelConfig::validate() const {
  if (image_dim < 1) throw ConfigError("model.image_dim must be >= 1");
  if (question_dim < 1) throw ConfigError("model.question_dim must be >= 1");
  if (encoder_out < 1) throw ConfigError("model.encoder_out must be >= 1");
  if (answer_embed_dim < 1) throw ConfigError("model.answer_embed_dim must be >= 1");
  if (hidden_dim < 1) throw ConfigError("model.hidden_dim must be >= 1");
  if (joint_dim < 1) throw ConfigError("model.joint_dim must be >= 1");
  if (n_b_dim < 2) throw ConfigError("model.n_b_dim must be >= 2");
  if (n_answers < 2) throw ConfigError("model.n_answers must be >= 2");
}

FrozenEncoder::FrozenEncoder(int in_dim, int out_dim, uint64_t seed) {
  Rng rng(seed);
  weight_ = uniform_init(in_dim, out_dim, in_dim, rng);
}

FrozenEncoder FrozenEncoder::identity(int dim) { return FrozenEncoder(Matrix::identity(dim)); }

Matrix FrozenEncoder::encode(const Matrix& x) const {
  if (x.cols() != weight_.rows()) {
    throw ShapeError("FrozenEncoder::encode: input has " + std::to_string(x.cols()) +
                     " columns, encoder expects " + std::to_string(weight_.rows()));
  }
  return matmul(x, weight_);
}

Value ParamBinder::bind(std::string name, Matrix& host) {
  const Value v = g_->leaf(host);
  bound_.push_back(Bound{std::move(name), &host, v});
  return v;
}

std::vector<Matrix*> ParamBinder::hosts() const {
  std::vector<Matrix*> out;
  out.reserve(bound_.size());
  for (const Bound& b : bound_) out.push_back(b.host);
  return out;
}

std::vector<const Matrix*> ParamBinder::grads() const {
  std::vector<const Matrix*> out;
  out.reserve(bound_.size());
  for (const Bound& b : bound_) out.push_back(&g_->grad(b.node));
  return out;
}

Model::Model(const ModelConfig& cfg)
    : cfg_(cfg),
      image_enc_(cfg.image_dim, cfg.encoder_out, derive_seed(cfg.init_seed, kStreamImageEnc)),
      question_enc_(cfg.question_dim, cfg.encoder_out,
                    derive_seed(cfg.init_seed, kStreamQuestionEnc)) {
  cfg_.validate();

  Rng joint_rng(derive_seed(cfg.init_seed, kStreamJoint));
  const int concat = 2 * cfg.encoder_out;
  joint_w1_ = uniform_init(concat, cfg.hidden_dim, concat, joint_rng);
  joint_b1_ = uniform_init(1, cfg.hidden_dim, concat, joint_rng);
  joint_w2_ = uniform_init(cfg.hidden_dim, cfg.joint_dim, cfg.hidden_dim, joint_rng);
  joint_b2_ = uniform_init(1, cfg.joint_dim, cfg.hidden_dim, joint_rng);

  Rng head_rng(derive_seed(cfg.init_seed, kStreamHead));
  head_w_ = uniform_init(cfg.joint_dim, cfg.n_answers, cfg.joint_dim, head_rng);
  head_b_ = uniform_init(1, cfg.n_answers, cfg.joint_dim, head_rng);

  Rng pm_rng(derive_seed(cfg.init_seed, kStreamProjM));
  proj_m_w1_ = uniform_init(cfg.joint_dim, cfg.n_b_dim, cfg.joint_dim, pm_rng);
  proj_m_b1_ = uniform_init(1, cfg.n_b_dim, cfg.joint_dim, pm_rng);
  proj_m_w2_ = uniform_init(cfg.n_b_dim, cfg.n_b_dim, cfg.n_b_dim, pm_rng);
  proj_m_b2_ = uniform_init(1, cfg.n_b_dim, cfg.n_b_dim, pm_rng);

  Rng pa_rng(derive_seed(cfg.init_seed, kStreamProjA));
  proj_a_w1_ = uniform_init(cfg.answer_embed_dim, cfg.n_b_dim, cfg.answer_embed_dim, pa_rng);
  proj_a_b1_ = uniform_init(1, cfg.n_b_dim, cfg.answer_embed_dim, pa_rng);
  proj_a_w2_ = uniform_init(cfg.n_b_dim, cfg.n_b_dim, cfg.n_b_dim, pa_rng);
  proj_a_b2_ = uniform_init(1, cfg.n_b_dim, cfg.n_b_dim, pa_rng);
}

Model::ClassifierForward Model::forward_classifier(Graph& g, ParamBinder& p,
                                                   const Matrix& images,
                                                   const Matrix& questions) {
  if (images.rows() != questions.rows()) {
    throw ShapeError("forward_classifier: batch sizes differ (" + images.shape_str() + " vs " +
                     questions.shape_str() + ")");
  }
  const Value v_enc = g.leaf(image_enc_.encode(images));
  const Value q_enc = g.leaf(question_enc_.encode(questions));
  const Value x = g.concat_cols(v_enc, q_enc);

  const Value w1 = p.bind("joint.w1", joint_w1_);
  const Value b1 = p.bind("joint.b1", joint_b1_);
  const Value w2 = p.bind("joint.w2", joint_w2_);
  const Value b2 = p.bind("joint.b2", joint_b2_);
  const Value joint = mlp2(g, x, w1, b1, w2, b2);

  const Value hw = p.bind("head.w", head_w_);
  const Value hb = p.bind("head.b", head_b_);
  const Value logits = g.add_rowvec(g.matmul(joint, hw), hb);
  return ClassifierForward{joint, logits};
}

Value Model::project_joint(Graph& g, ParamBinder& p, Value joint) {
  const Value w1 = p.bind("proj_m.w1", proj_m_w1_);
  const Value b1 = p.bind("proj_m.b1", proj_m_b1_);
  const Value w2 = p.bind("proj_m.w2", proj_m_w2_);
  const Value b2 = p.bind("proj_m.b2", proj_m_b2_);
  return projector_forward(g, joint, w1, b1, w2, b2);
}

Value Model::project_answers(Graph& g, ParamBinder& p, const Matrix& answer_embeds) {
  if (answer_embeds.cols() != cfg_.answer_embed_dim) {
    throw ShapeError("project_answers: embeds have " + std::to_string(answer_embeds.cols()) +
                     " columns, expected " + std::to_string(cfg_.answer_embed_dim));
  }
  const Value x = g.leaf(answer_embeds);
  const Value w1 = p.bind("proj_a.w1", proj_a_w1_);
  const Value b1 = p.bind("proj_a.b1", proj_a_b1_);
  const Value w2 = p.bind("proj_a.w2", proj_a_w2_);
  const Value b2 = p.bind("proj_a.b2", proj_a_b2_);
  return projector_forward(g, x, w1, b1, w2, b2);
}

Matrix Model::eval_logits(const Matrix& images, const Matrix& questions) const {
  Graph g;
  const Value v_enc = g.leaf(image_enc_.encode(images));
  const Value q_enc = g.leaf(question_enc_.encode(questions));
  const Value x = g.concat_cols(v_enc, q_enc);
  const Value joint = mlp2(g, x, g.leaf(joint_w1_), g.leaf(joint_b1_), g.leaf(joint_w2_),
                           g.leaf(joint_b2_));
  const Value logits = g.add_rowvec(g.matmul(joint, g.leaf(head_w_)), g.leaf(head_b_));
  return g.value(logits);
}

std::vector<std::pair<std::string, Matrix*>> Model::trainable_params() {
  return {
      {"joint.w1", &joint_w1_},   {"joint.b1", &joint_b1_},
      {"joint.w2", &joint_w2_},   {"joint.b2", &joint_b2_},
      {"head.w", &head_w_},       {"head.b", &head_b_},
      {"proj_m.w1", &proj_m_w1_}, {"proj_m.b1", &proj_m_b1_},
      {"proj_m.w2", &proj_m_w2_}, {"proj_m.b2", &proj_m_b2_},
      {"proj_a.w1", &proj_a_w1_}, {"proj_a.b1", &proj_a_b1_},
      {"proj_a.w2", &proj_a_w2_}, {"proj_a.b2", &proj_a_b2_},
  };
}

std::vector<std::pair<std::string, Matrix*>> Model::named_matrices() {
  std::vector<std::pair<std::string, Matrix*>> out = trainable_params();
  out.emplace_back("enc_v.w", const_cast<Matrix*>(&image_enc_.weight()));
  out.emplace_back("enc_q.w", const_cast<Matrix*>(&question_enc_.weight()));
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> Model::named_matrices() const {
  std::vector<std::pair<std::string, const Matrix*>> out;
  for (auto& [name, m] : const_cast<Model*>(this)->trainable_params()) out.emplace_back(name, m);
  out.emplace_back("enc_v.w", &image_enc_.weight());
  out.emplace_back("enc_q.w", &question_enc_.weight());
  return out;
}

Value cross_entropy(Graph& g, Value logits, const std::vector<int>& answers) {
  const Matrix& l = g.value(logits);
  const int n = l.rows();
  if (n < 1) throw ShapeError("cross_entropy: empty batch");
  if (static_cast<int>(answers.size()) != n) {
    throw ShapeError("cross_entropy: " + std::to_string(answers.size()) + " answers for " +
                     std::to_string(n) + " rows");
  }
  for (int a : answers) {
    if (a < 0 || a >= l.cols()) {
      throw std::out_of_range("cross_entropy: answer index " + std::to_string(a) +
                              " out of range [0," + std::to_string(l.cols()) + ")");
    }
  }

  // Per-row max as a constant shift; softmax is shift-invariant so detaching
  // the max leaves the gradient exact.
  Matrix row_max(n, l.cols());
  for (int r = 0; r < n; ++r) {
    double m = l(r, 0);
    for (int c = 1; c < l.cols(); ++c) m = std::max(m, l(r, c));
    for (int c = 0; c < l.cols(); ++c) row_max(r, c) = m;
  }
  const Value shifted = g.sub(logits, g.leaf(std::move(row_max)));
  const Value log_norm = g.log(g.row_sums(g.exp(shifted)));    // n x 1
  const Value picked = g.gather_cols(shifted, answers);        // n x 1
  return g.scale(g.sum(g.sub(log_norm, picked)), 1.0 / static_cast<double>(n));
}

std::vector<int> predict(const Matrix& logits) {
  std::vector<int> out(static_cast<size_t>(logits.rows()));
  for (int r = 0; r < logits.rows(); ++r) {
    int best = 0;
    for (int c = 1; c < logits.cols(); ++c) {
      if (logits(r, c) > logits(r, best)) best = c;
    }
    out[static_cast<size_t>(r)] = best;
  }
  return out;
}

std::vector<std::vector<int>> top_k(const Matrix& logits, int k) {
  if (k < 0) throw ContractError("top_k: k must be >= 0");
  k = std::min(k, logits.cols());
  std::vector<std::vector<int>> out(static_cast<size_t>(logits.rows()));
  for (int r = 0; r < logits.rows(); ++r) {
    std::vector<int> idx(static_cast<size_t>(logits.cols()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      if (logits(r, a) != logits(r, b)) return logits(r, a) > logits(r, b);
      return a < b;
    });
    idx.resize(static_cast<size_t>(k));
    out[static_cast<size_t>(r)] = std::move(idx);
  }
  return out;
}

}  // namespace cob
