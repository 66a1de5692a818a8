#pragma once

#include "cob/autodiff.hpp"
#include "cob/matrix.hpp"

namespace cob {

/// Form of the off-diagonal penalty term.
///
/// SquaredOffDiagonal is the default: gamma * sum_{i != j} C_ij^2, which is a
/// distance to the identity and is bounded below. PaperLiteral keeps the
/// unsquared off-diagonal sum gamma * sum_{i != j} C_ij for fidelity
/// experiments; it can reward large negative correlations and is not used by
/// the default configuration.
enum class OffDiagMode { PaperLiteral, SquaredOffDiagonal };

struct BarlowConfig {
  int n_b_dim = 32;       // projector output dimensionality
  double gamma = 0.05;    // off-diagonal weight
  double epsilon = 1e-12; // denominator guard
  OffDiagMode off_diag_mode = OffDiagMode::SquaredOffDiagonal;

  void validate() const;
};

enum class CorrelationKind { Auto, Cross };

/// A correlation matrix still attached to its graph (differentiable).
struct Correlation {
  Value values;          // N x N node
  CorrelationKind kind;  // Auto iff both inputs were the same node
  int dim = 0;
};

/// Materialized correlation matrix (analysis / export path).
struct CorrelationMatrix {
  Matrix values;
  CorrelationKind kind = CorrelationKind::Cross;
};

/// Batch normalization along the batch dimension, realized as mean-centering:
/// every column of the result has mean zero. Scale normalization happens in
/// the correlation denominator, so centering alone is sufficient.
/// Throws ContractError for batches of fewer than 2 rows.
Value batch_center(Graph& g, Value s);

/// Cross/auto-correlation of two same-shape batch-centered n_b x N matrices:
///   C_ij = sum_k s1[k,i]*s2[k,j] / (|col_i(s1)| * |col_j(s2)| + epsilon)
/// A zero-norm column hits the epsilon guard and yields zero correlation.
Correlation correlation(Graph& g, Value s1, Value s2, const BarlowConfig& cfg);

/// Decorrelation loss of one correlation matrix:
///   sum_i (1 - C_ii) + gamma * off_diag_term(C)
Value barlow_loss(Graph& g, const Correlation& c, const BarlowConfig& cfg);

struct BarlowTerms {
  Value loss_m;   // auto-correlation loss of the joint projection
  Value loss_a;   // auto-correlation loss of the answer projection
  Value loss_ma;  // cross-correlation loss between the two
  Value total;    // sum of the three
  Correlation corr_m, corr_a, corr_ma;
};

/// The combined redundancy-reduction loss over the two projected views.
/// Inputs must already be batch-centered projections of the same batch.
BarlowTerms combined_barlow(Graph& g, Value m_proj, Value a_proj, const BarlowConfig& cfg);

}  // namespace cob
