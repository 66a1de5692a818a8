#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cob/barlow.hpp"
#include "cob/error.hpp"
#include "test_util.hpp"

using namespace cob;
using cobtest::gradient_check;
using cobtest::random_matrix;

namespace {

BarlowConfig test_cfg(double gamma = 1.0, OffDiagMode mode = OffDiagMode::SquaredOffDiagonal) {
  BarlowConfig cfg;
  cfg.gamma = gamma;
  cfg.off_diag_mode = mode;
  cfg.n_b_dim = 2;
  return cfg;
}

Matrix centered_value(Graph& g, const Matrix& m) {
  return g.value(batch_center(g, g.leaf(m)));
}

}  // namespace

TEST_CASE("batch_center") {
  Graph g;
  SUBCASE("constant column maps to zero") {
    const Matrix out = centered_value(g, Matrix::from_rows({{1}, {1}, {1}, {1}}));
    for (int r = 0; r < 4; ++r) CHECK(out(r, 0) == 0.0);
  }
  SUBCASE("two-point column") {
    const Matrix out = centered_value(g, Matrix::from_rows({{1}, {3}}));
    CHECK(out(0, 0) == -1.0);
    CHECK(out(1, 0) == 1.0);
  }
  SUBCASE("random batch columns have mean below 1e-12") {
    Rng rng(21);
    const Matrix out = centered_value(g, random_matrix(8, 4, rng, -5.0, 5.0));
    for (int c = 0; c < out.cols(); ++c) {
      double mean = 0.0;
      for (int r = 0; r < out.rows(); ++r) mean += out(r, c);
      CHECK(std::fabs(mean / out.rows()) < 1e-12);
    }
  }
  SUBCASE("single-sample batch is degenerate") {
    CHECK_THROWS_AS(batch_center(g, g.leaf(Matrix(1, 3, 1.0))), ContractError);
  }
}

TEST_CASE("correlation forward") {
  const BarlowConfig cfg = test_cfg();

  SUBCASE("auto-correlation has unit diagonal") {
    Graph g;
    Rng rng(22);
    const Value s = batch_center(g, g.leaf(random_matrix(10, 4, rng)));
    const Correlation c = correlation(g, s, s, cfg);
    CHECK(c.kind == CorrelationKind::Auto);
    for (int i = 0; i < 4; ++i) {
      CHECK(g.value(c.values)(i, i) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  SUBCASE("orthogonal centered columns give zero off-diagonal") {
    Graph g;
    const Value s = g.leaf(Matrix::from_rows({{1, 1}, {-1, 1}, {1, -1}, {-1, -1}}));
    const Correlation c = correlation(g, s, s, cfg);
    CHECK(std::fabs(g.value(c.values)(0, 1)) < 1e-9);
    CHECK(std::fabs(g.value(c.values)(1, 0)) < 1e-9);
  }

  SUBCASE("hand case: 2-sample batch gives the all-ones matrix") {
    Graph g;
    const Value s = g.leaf(Matrix::from_rows({{1, 2}, {-1, -2}}));
    const Correlation c = correlation(g, s, s, cfg);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        CHECK(g.value(c.values)(i, j) == doctest::Approx(1.0).epsilon(1e-9));
      }
    }
  }

  SUBCASE("cross kind when the operands are distinct nodes") {
    Graph g;
    Rng rng(23);
    const Matrix m = random_matrix(6, 3, rng);
    const Value s1 = batch_center(g, g.leaf(m));
    const Value s2 = batch_center(g, g.leaf(m));
    CHECK(correlation(g, s1, s2, cfg).kind == CorrelationKind::Cross);
  }

  SUBCASE("transpose symmetry between swapped operands") {
    Graph g;
    Rng rng(24);
    const Value s1 = batch_center(g, g.leaf(random_matrix(8, 3, rng)));
    const Value s2 = batch_center(g, g.leaf(random_matrix(8, 3, rng)));
    const Matrix c12 = g.value(correlation(g, s1, s2, cfg).values);
    const Matrix c21 = g.value(correlation(g, s2, s1, cfg).values);
    CHECK(max_abs_diff(transpose(c12), c21) <= 1e-12);
  }

  SUBCASE("entries bounded by 1 + 1e-9 over random batches") {
    Rng rng(25);
    for (int trial = 0; trial < 20; ++trial) {
      Graph g;
      const Value s1 = batch_center(g, g.leaf(random_matrix(5, 4, rng, -3.0, 3.0)));
      const Value s2 = batch_center(g, g.leaf(random_matrix(5, 4, rng, -3.0, 3.0)));
      const Matrix c = g.value(correlation(g, s1, s2, test_cfg()).values);
      for (long i = 0; i < c.size(); ++i) CHECK(std::fabs(c.data()[i]) <= 1.0 + 1e-9);
    }
  }

  SUBCASE("scale invariance under positive column scaling") {
    Graph g;
    Rng rng(26);
    const Matrix raw = random_matrix(8, 4, rng);
    Matrix scaled = raw;
    for (int r = 0; r < scaled.rows(); ++r) scaled(r, 2) *= 37.5;
    const Value s1 = batch_center(g, g.leaf(raw));
    const Value s2 = batch_center(g, g.leaf(scaled));
    const Matrix c1 = g.value(correlation(g, s1, s1, cfg).values);
    const Matrix c2 = g.value(correlation(g, s2, s2, cfg).values);
    CHECK(max_abs_diff(c1, c2) <= 1e-9);
  }

  SUBCASE("zero-norm column hits the epsilon guard, not a crash") {
    Graph g;
    Matrix m = Matrix::from_rows({{5, 1}, {5, 2}, {5, 3}});  // first column constant
    const Value s = batch_center(g, g.leaf(m));
    const Correlation c = correlation(g, s, s, cfg);
    CHECK(g.value(c.values)(0, 0) == 0.0);
    CHECK(g.value(c.values)(0, 1) == 0.0);
    CHECK(g.value(c.values)(1, 1) == doctest::Approx(1.0).epsilon(1e-9));
    // Gradient stays finite through the guard.
    g.backward(g.sum(g.mul(c.values, c.values)));
    CHECK(g.grad(s).all_finite());
  }
}

TEST_CASE("barlow_loss values") {
  SUBCASE("identity correlation gives zero in both modes") {
    for (OffDiagMode mode : {OffDiagMode::SquaredOffDiagonal, OffDiagMode::PaperLiteral}) {
      Graph g;
      Correlation c{g.leaf(Matrix::identity(3)), CorrelationKind::Auto, 3};
      CHECK(g.scalar(barlow_loss(g, c, test_cfg(1.0, mode))) == doctest::Approx(0.0));
    }
  }
  SUBCASE("all-ones 2x2 with gamma=1 gives 2 in both modes") {
    for (OffDiagMode mode : {OffDiagMode::SquaredOffDiagonal, OffDiagMode::PaperLiteral}) {
      Graph g;
      Correlation c{g.leaf(Matrix(2, 2, 1.0)), CorrelationKind::Auto, 2};
      CHECK(g.scalar(barlow_loss(g, c, test_cfg(1.0, mode))) == doctest::Approx(2.0));
    }
  }
  SUBCASE("off-diagonal 0.5 with gamma=2, squared mode") {
    Graph g;
    Correlation c{g.leaf(Matrix::from_rows({{1, 0.5}, {0.5, 1}})), CorrelationKind::Auto, 2};
    CHECK(g.scalar(barlow_loss(g, c, test_cfg(2.0))) == doctest::Approx(1.0));
  }
  SUBCASE("nonnegative in squared mode for auto-correlations") {
    Rng rng(27);
    for (int trial = 0; trial < 25; ++trial) {
      Graph g;
      const Value s = batch_center(g, g.leaf(random_matrix(6, 4, rng, -2.0, 2.0)));
      const Correlation c = correlation(g, s, s, test_cfg());
      CHECK(g.scalar(barlow_loss(g, c, test_cfg(rng.uniform(0.0, 3.0)))) >= 0.0);
    }
  }
}

TEST_CASE("combined_barlow") {
  SUBCASE("identical projections with orthogonal centered columns vanish") {
    Graph g;
    const Value s = g.leaf(Matrix::from_rows({{1, 1}, {-1, 1}, {1, -1}, {-1, -1}}));
    const BarlowTerms t = combined_barlow(g, s, s, test_cfg());
    CHECK(g.scalar(t.loss_m) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(g.scalar(t.loss_a) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(g.scalar(t.loss_ma) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(g.scalar(t.total) == doctest::Approx(0.0).epsilon(1e-9));
  }

  SUBCASE("auto terms have no invariance contribution; the cross term does") {
    Graph g;
    Rng rng(28);
    const Value m = batch_center(g, g.leaf(random_matrix(64, 8, rng)));
    const Value a = batch_center(g, g.leaf(random_matrix(64, 8, rng)));
    const BarlowTerms t = combined_barlow(g, m, a, test_cfg());
    const Matrix& cm = g.value(t.corr_m.values);
    const Matrix& cma = g.value(t.corr_ma.values);
    double trace_m = 0.0, trace_ma = 0.0;
    for (int i = 0; i < 8; ++i) {
      trace_m += cm(i, i);
      trace_ma += cma(i, i);
    }
    CHECK(std::fabs(trace_m - 8.0) < 1e-9);  // auto diagonal identically 1
    CHECK(std::fabs(trace_ma - 8.0) > 0.1);  // cross diagonal is not
  }

  SUBCASE("2x2 hand case: total equals the sum of three hand-computed losses") {
    Graph g;
    const Value m = g.leaf(Matrix::from_rows({{1, 2}, {-1, -2}}));
    const Value a = g.leaf(Matrix::from_rows({{3, -1}, {-3, 1}}));
    const BarlowTerms t = combined_barlow(g, m, a, test_cfg(1.0));
    // C^M = [[1,1],[1,1]]     -> 0 + (1+1)       = 2
    // C^A = [[1,-1],[-1,1]]   -> 0 + (1+1)       = 2
    // C^MA = [[1,-1],[1,-1]]  -> (0 + 2) + (1+1) = 4
    CHECK(g.scalar(t.loss_m) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(g.scalar(t.loss_a) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(g.scalar(t.loss_ma) == doctest::Approx(4.0).epsilon(1e-9));
    CHECK(g.scalar(t.total) ==
          doctest::Approx(g.scalar(t.loss_m) + g.scalar(t.loss_a) + g.scalar(t.loss_ma)));
  }

  SUBCASE("gradient through centering and both projections matches the oracle") {
    Rng rng(29);
    for (OffDiagMode mode : {OffDiagMode::SquaredOffDiagonal, OffDiagMode::PaperLiteral}) {
      const double err = gradient_check(
          [mode](Graph& g, const std::vector<Value>& p) {
            const Value m = batch_center(g, p[0]);
            const Value a = batch_center(g, p[1]);
            return combined_barlow(g, m, a, test_cfg(0.7, mode)).total;
          },
          {random_matrix(6, 4, rng), random_matrix(6, 4, rng)});
      CHECK(err <= 1e-5);
    }
  }
}
