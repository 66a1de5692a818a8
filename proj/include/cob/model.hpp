#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cob/autodiff.hpp"
#include "cob/matrix.hpp"

namespace cob {

struct ModelConfig {
  int image_dim = 16;
  int question_dim = 8;
  int encoder_out = 16;       // output width of each frozen encoder
  int answer_embed_dim = 16;  // width of the frozen answer-embedding rows
  int hidden_dim = 32;        // joint-network hidden width
  int joint_dim = 32;         // D_J
  int n_b_dim = 32;           // projector output width
  int n_answers = 8;
  uint64_t init_seed = 1;

  void validate() const;
};

/// Linear encoder whose weight is fixed at construction and never updated.
class FrozenEncoder {
 public:
  FrozenEncoder(int in_dim, int out_dim, uint64_t seed);
  static FrozenEncoder identity(int dim);

  /// x: n x in_dim -> n x out_dim. Plain matrix math; nothing enters a graph,
  /// so no gradient can reach the weight.
  Matrix encode(const Matrix& x) const;

  const Matrix& weight() const { return weight_; }
  int in_dim() const { return weight_.rows(); }
  int out_dim() const { return weight_.cols(); }

 private:
  explicit FrozenEncoder(Matrix w) : weight_(std::move(w)) {}
  Matrix weight_;
};

/// Registers parameter matrices as graph leaves for one forward/backward pass
/// and remembers the (host matrix, leaf) pairing so the optimizer can apply
/// the resulting gradients.
class ParamBinder {
 public:
  explicit ParamBinder(Graph& g) : g_(&g) {}

  Value bind(std::string name, Matrix& host);

  struct Bound {
    std::string name;
    Matrix* host;
    Value node;
  };
  const std::vector<Bound>& bound() const { return bound_; }
  std::vector<Matrix*> hosts() const;
  std::vector<const Matrix*> grads() const;

 private:
  Graph* g_;
  std::vector<Bound> bound_;
};

/// The toy multimodal classifier: frozen image/question encoders, a 2-layer
/// joint MLP, a logit head, and one projector per modality for the
/// redundancy-reduction losses. Evaluation uses only the classification
/// stream; the projectors exist solely to feed the decorrelation terms.
class Model {
 public:
  explicit Model(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }

  struct ClassifierForward {
    Value joint;   // n x D_J
    Value logits;  // n x |A|
  };
  /// Differentiable classifier pass: encode (frozen), concat, joint MLP,
  /// logit head. Parameters are bound through `p`.
  ClassifierForward forward_classifier(Graph& g, ParamBinder& p, const Matrix& images,
                                       const Matrix& questions);

  /// Projector over the joint embedding (s^b for the M view).
  Value project_joint(Graph& g, ParamBinder& p, Value joint);
  /// Projector over frozen answer embeddings (s^b for the A view).
  Value project_answers(Graph& g, ParamBinder& p, const Matrix& answer_embeds);

  /// Classification-stream logits without any parameter binding (evaluation).
  Matrix eval_logits(const Matrix& images, const Matrix& questions) const;

  std::vector<std::pair<std::string, Matrix*>> trainable_params();
  std::vector<std::pair<std::string, const Matrix*>> named_matrices() const;
  std::vector<std::pair<std::string, Matrix*>> named_matrices();

  const FrozenEncoder& image_encoder() const { return image_enc_; }
  const FrozenEncoder& question_encoder() const { return question_enc_; }

 private:
  ModelConfig cfg_;
  FrozenEncoder image_enc_;
  FrozenEncoder question_enc_;
  // joint network
  Matrix joint_w1_, joint_b1_, joint_w2_, joint_b2_;
  // logit head
  Matrix head_w_, head_b_;
  // projectors
  Matrix proj_m_w1_, proj_m_b1_, proj_m_w2_, proj_m_b2_;
  Matrix proj_a_w1_, proj_a_b1_, proj_a_w2_, proj_a_b2_;
};

/// Mean negative log-softmax of the true-answer logits, stabilized by per-row
/// max subtraction. `answers[k]` must be a valid column index.
Value cross_entropy(Graph& g, Value logits, const std::vector<int>& answers);

/// Argmax per row; ties broken toward the lowest index.
std::vector<int> predict(const Matrix& logits);

/// Per-row top-k column indices, sorted by descending logit then ascending
/// index.
std::vector<std::vector<int>> top_k(const Matrix& logits, int k);

}  // namespace cob
