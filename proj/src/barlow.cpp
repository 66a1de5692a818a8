#include "cob/barlow.hpp"

#include <string>

#include "cob/error.hpp"

namespace cob {

void BarlowConfig::validate() const {
  if (n_b_dim < 2) throw ConfigError("barlow.n_b_dim must be >= 2");
  if (!(gamma >= 0.0)) throw ConfigError("barlow.gamma must be >= 0");
  if (!(epsilon > 0.0)) throw ConfigError("barlow.epsilon must be > 0");
}

Value batch_center(Graph& g, Value s) {
  if (g.value(s).rows() < 2) {
    throw ContractError("batch_center: degenerate batch of " +
                        std::to_string(g.value(s).rows()) + " sample(s), need >= 2");
  }
  return g.center_columns(s);
}

Correlation correlation(Graph& g, Value s1, Value s2, const BarlowConfig& cfg) {
  require_same_shape(g.value(s1), g.value(s2), "correlation");
  const int dim = g.value(s1).cols();

  const Value numerator = g.matmul(g.transpose(s1), s2);
  const Value norms1 = g.sqrt(g.col_sums(g.mul(s1, s1)));  // 1 x N
  const Value norms2 = s1 == s2 ? norms1 : g.sqrt(g.col_sums(g.mul(s2, s2)));
  const Value denominator = g.add_scalar(g.matmul(g.transpose(norms1), norms2), cfg.epsilon);

  Correlation c;
  c.values = g.div(numerator, denominator);
  c.kind = s1 == s2 ? CorrelationKind::Auto : CorrelationKind::Cross;
  c.dim = dim;
  return c;
}

Value barlow_loss(Graph& g, const Correlation& c, const BarlowConfig& cfg) {
  const Matrix& cv = g.value(c.values);
  if (cv.rows() != cv.cols()) {
    throw ShapeError("barlow_loss: correlation matrix is " + cv.shape_str() + ", not square");
  }
  const int n = cv.rows();

  // sum_i (1 - C_ii) = N - trace(C)
  const Value invariance = g.add_scalar(g.scale(g.trace(c.values), -1.0), static_cast<double>(n));

  Value off_diag;
  if (cfg.off_diag_mode == OffDiagMode::SquaredOffDiagonal) {
    const Value sq = g.mul(c.values, c.values);
    off_diag = g.sub(g.sum(sq), g.trace(sq));
  } else {
    off_diag = g.sub(g.sum(c.values), g.trace(c.values));
  }
  return g.add(invariance, g.scale(off_diag, cfg.gamma));
}

BarlowTerms combined_barlow(Graph& g, Value m_proj, Value a_proj, const BarlowConfig& cfg) {
  require_same_shape(g.value(m_proj), g.value(a_proj), "combined_barlow");

  BarlowTerms t;
  t.corr_m = correlation(g, m_proj, m_proj, cfg);
  t.corr_a = correlation(g, a_proj, a_proj, cfg);
  t.corr_ma = correlation(g, m_proj, a_proj, cfg);
  t.loss_m = barlow_loss(g, t.corr_m, cfg);
  t.loss_a = barlow_loss(g, t.corr_a, cfg);
  t.loss_ma = barlow_loss(g, t.corr_ma, cfg);
  t.total = g.add(g.add(t.loss_m, t.loss_a), t.loss_ma);
  return t;
}

}  // namespace cob
