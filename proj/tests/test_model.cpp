#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "cob/barlow.hpp"
#include "cob/checkpoint.hpp"
#include "cob/error.hpp"
#include "cob/model.hpp"
#include "cob/synthdata.hpp"
#include "test_util.hpp"

using namespace cob;
using cobtest::model_gradient_check;
using cobtest::random_matrix;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.image_dim = 6;
  c.question_dim = 4;
  c.encoder_out = 5;
  c.answer_embed_dim = 4;
  c.hidden_dim = 6;
  c.joint_dim = 5;
  c.n_b_dim = 4;
  c.n_answers = 5;
  c.init_seed = 42;
  return c;
}

void zero_matrix(Matrix& m) {
  for (long i = 0; i < m.size(); ++i) m.data()[i] = 0.0;
}

}  // namespace

TEST_CASE("FrozenEncoder") {
  SUBCASE("zero input gives zero output") {
    const FrozenEncoder enc(4, 3, 7);
    const Matrix out = enc.encode(Matrix(2, 4));
    CHECK(max_abs_diff(out, Matrix(2, 3)) == 0.0);
  }
  SUBCASE("identity encoder passes input through") {
    const FrozenEncoder enc = FrozenEncoder::identity(3);
    Rng rng(31);
    const Matrix x = random_matrix(5, 3, rng);
    CHECK(max_abs_diff(enc.encode(x), x) == 0.0);
  }
  SUBCASE("input width checked") {
    const FrozenEncoder enc(4, 3, 7);
    CHECK_THROWS_AS(enc.encode(Matrix(2, 5)), ShapeError);
  }
}

TEST_CASE("joint forward") {
  Model model(small_config());

  SUBCASE("zero encodings and zero biases give a zero joint vector") {
    for (auto& [name, m] : model.trainable_params()) {
      if (name == "joint.b1" || name == "joint.b2") zero_matrix(*m);
    }
    Graph g;
    ParamBinder p(g);
    const auto fwd = model.forward_classifier(g, p, Matrix(1, 6), Matrix(1, 4));
    CHECK(max_abs_diff(g.value(fwd.joint), Matrix(1, 5)) == 0.0);
  }

  SUBCASE("output shapes") {
    Graph g;
    ParamBinder p(g);
    Rng rng(32);
    const auto fwd =
        model.forward_classifier(g, p, random_matrix(7, 6, rng), random_matrix(7, 4, rng));
    CHECK(g.value(fwd.joint).rows() == 7);
    CHECK(g.value(fwd.joint).cols() == 5);
    CHECK(g.value(fwd.logits).rows() == 7);
    CHECK(g.value(fwd.logits).cols() == 5);
  }

  SUBCASE("mismatched batch sizes rejected") {
    Graph g;
    ParamBinder p(g);
    CHECK_THROWS_AS(model.forward_classifier(g, p, Matrix(2, 6), Matrix(3, 4)), ShapeError);
  }

  SUBCASE("gradient through the joint network into the categorical loss") {
    Rng rng(33);
    const Matrix images = random_matrix(4, 6, rng);
    const Matrix questions = random_matrix(4, 4, rng);
    const std::vector<int> answers = {0, 3, 1, 4};
    const double err = model_gradient_check(
        model, [&](Graph& g, ParamBinder& p, Model& m) {
          const auto fwd = m.forward_classifier(g, p, images, questions);
          return cross_entropy(g, fwd.logits, answers);
        });
    CHECK(err <= 1e-5);
  }
}

TEST_CASE("cross_entropy") {
  SUBCASE("uniform logits give log |A|") {
    Graph g;
    const Value logits = g.leaf(Matrix(3, 4, 0.25));
    const Value loss = cross_entropy(g, logits, {0, 1, 3});
    CHECK(g.scalar(loss) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  }
  SUBCASE("dominant true logit drives the loss to zero") {
    Graph g;
    Matrix m(1, 4);
    m(0, 2) = 100.0;
    CHECK(g.scalar(cross_entropy(g, g.leaf(m), {2})) < 1e-6);
  }
  SUBCASE("two-class hand case") {
    Graph g;
    const Value logits = g.leaf(Matrix::from_rows({{2, 0}}));
    // -log(e^2 / (e^2 + 1)) = log(1 + e^-2)
    CHECK(g.scalar(cross_entropy(g, logits, {0})) ==
          doctest::Approx(0.12692801104297263).epsilon(1e-12));
  }
  SUBCASE("answer index out of range") {
    Graph g;
    const Value logits = g.leaf(Matrix(2, 3, 0.1));
    CHECK_THROWS_AS(cross_entropy(g, logits, {0, 3}), std::out_of_range);
  }
  SUBCASE("shift invariance per sample") {
    Rng rng(34);
    const Matrix logits = random_matrix(3, 5, rng);
    Matrix shifted = logits;
    for (int c = 0; c < 5; ++c) shifted(1, c) += 123.0;
    const std::vector<int> answers = {1, 4, 2};
    Graph g1, g2;
    const double l1 = g1.scalar(cross_entropy(g1, g1.leaf(logits), answers));
    const double l2 = g2.scalar(cross_entropy(g2, g2.leaf(shifted), answers));
    CHECK(l1 == doctest::Approx(l2).epsilon(1e-12));
    CHECK(predict(logits) == predict(shifted));
  }
}

TEST_CASE("projector") {
  Model model(small_config());
  Rng rng(35);

  SUBCASE("rows standardized to zero mean / unit variance") {
    Graph g;
    ParamBinder p(g);
    const Value joint = g.leaf(random_matrix(6, 5, rng));
    const Matrix out = g.value(model.project_joint(g, p, joint));
    CHECK(out.rows() == 6);
    CHECK(out.cols() == 4);
    for (int r = 0; r < out.rows(); ++r) {
      double mean = 0.0, var = 0.0;
      for (int c = 0; c < out.cols(); ++c) mean += out(r, c);
      mean /= out.cols();
      for (int c = 0; c < out.cols(); ++c) var += (out(r, c) - mean) * (out(r, c) - mean);
      var /= out.cols();
      CHECK(std::fabs(mean) <= 1e-9);
      CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
    }
  }

  SUBCASE("answer projector validates embedding width") {
    Graph g;
    ParamBinder p(g);
    CHECK_THROWS_AS(model.project_answers(g, p, Matrix(3, 7)), ShapeError);
  }

  SUBCASE("gradient through both projectors into the combined decorrelation loss") {
    const Matrix images = random_matrix(5, 6, rng);
    const Matrix questions = random_matrix(5, 4, rng);
    const Matrix answer_embeds = random_matrix(5, 4, rng);
    BarlowConfig cfg;
    cfg.n_b_dim = 4;
    cfg.gamma = 0.5;
    const double err = model_gradient_check(
        model, [&](Graph& g, ParamBinder& p, Model& m) {
          const auto fwd = m.forward_classifier(g, p, images, questions);
          const Value sm = batch_center(g, m.project_joint(g, p, fwd.joint));
          const Value sa = batch_center(g, m.project_answers(g, p, answer_embeds));
          return combined_barlow(g, sm, sa, cfg).total;
        });
    CHECK(err <= 1e-5);
  }
}

TEST_CASE("combined objective gradient on small dims") {
  Model model(small_config());
  Rng rng(36);
  const Matrix images = random_matrix(6, 6, rng);
  const Matrix questions = random_matrix(6, 4, rng);
  const Matrix answer_embeds = random_matrix(6, 4, rng);
  const std::vector<int> answers = {0, 1, 2, 3, 4, 0};
  BarlowConfig cfg;
  cfg.n_b_dim = 4;

  const double err = model_gradient_check(
      model, [&](Graph& g, ParamBinder& p, Model& m) {
        const auto fwd = m.forward_classifier(g, p, images, questions);
        const Value l_ce = cross_entropy(g, fwd.logits, answers);
        const Value sm = batch_center(g, m.project_joint(g, p, fwd.joint));
        const Value sa = batch_center(g, m.project_answers(g, p, answer_embeds));
        return g.add(l_ce, combined_barlow(g, sm, sa, cfg).total);
      });
  CHECK(err <= 1e-5);
}

TEST_CASE("predict and top_k") {
  CHECK(predict(Matrix::from_rows({{0, 0, 1}})) == std::vector<int>{2});
  CHECK(predict(Matrix::from_rows({{0.5, 0.5, 0.5}})) == std::vector<int>{0});  // tie -> lowest
  const auto lists = top_k(Matrix::from_rows({{3, 1, 2}}), 2);
  CHECK(lists[0] == std::vector<int>{0, 2});
  const auto tied = top_k(Matrix::from_rows({{1, 1, 0}}), 3);
  CHECK(tied[0] == std::vector<int>{0, 1, 2});
}

TEST_CASE("evaluation ignores the projectors") {
  Model model(small_config());
  Rng rng(37);
  const Matrix images = random_matrix(8, 6, rng);
  const Matrix questions = random_matrix(8, 4, rng);
  const Matrix before = model.eval_logits(images, questions);

  for (auto& [name, m] : model.trainable_params()) {
    if (name.rfind("proj_", 0) == 0) {
      for (long i = 0; i < m->size(); ++i) m->data()[i] = rng.uniform(-9.0, 9.0);
    }
  }
  const Matrix after = model.eval_logits(images, questions);
  CHECK(max_abs_diff(before, after) == 0.0);
  CHECK(predict(before) == predict(after));
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  const std::string path = "test_checkpoint.bin";
  Model model(small_config());
  // Give the weights post-training-like values.
  Rng rng(38);
  for (auto& [name, m] : model.trainable_params()) {
    for (long i = 0; i < m->size(); ++i) m->data()[i] = rng.uniform(-2.0, 2.0);
  }
  save_checkpoint(path, model);
  Model loaded = load_checkpoint(path);

  const auto a = model.named_matrices();
  const auto b = loaded.named_matrices();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first == b[i].first);
    CHECK(max_abs_diff(*a[i].second, *b[i].second) == 0.0);
  }

  const Matrix images = random_matrix(3, 6, rng);
  const Matrix questions = random_matrix(3, 4, rng);
  CHECK(max_abs_diff(model.eval_logits(images, questions),
                     loaded.eval_logits(images, questions)) == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint rejects missing file") {
  CHECK_THROWS_AS(load_checkpoint("no_such_file.bin"), IoError);
}

TEST_CASE("untrained model predicts at chance level") {
  TaskSpec spec;
  spec.n_val = 2048;
  spec.seed = 21;
  const auto [train_set, val_set] = generate(spec);

  ModelConfig mc;
  mc.image_dim = spec.image_dim;
  mc.question_dim = spec.question_dim;
  mc.n_answers = spec.n_answers();
  mc.init_seed = 22;
  const Model model(mc);

  const std::vector<int> idx = val_set.all_indices();
  const std::vector<int> pred =
      predict(model.eval_logits(val_set.images(idx), val_set.questions(idx)));
  int correct = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    correct += pred[i] == val_set.samples[i].answer;
  }
  const double acc = static_cast<double>(correct) / val_set.size();
  const double chance = 1.0 / spec.n_answers();
  CHECK(std::fabs(acc - chance) <= 0.05);

  // Evaluating twice gives the identical result.
  const std::vector<int> again =
      predict(model.eval_logits(val_set.images(idx), val_set.questions(idx)));
  CHECK(pred == again);
}
