#pragma once

#include <functional>
#include <vector>

#include "cob/autodiff.hpp"
#include "cob/gradcheck.hpp"
#include "cob/matrix.hpp"
#include "cob/rng.hpp"

namespace cobtest {

inline cob::Matrix random_matrix(int rows, int cols, cob::Rng& rng, double lo = -1.0,
                                 double hi = 1.0) {
  cob::Matrix m(rows, cols);
  for (long i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

/// Build a scalar loss from graph leaves created from `params` (in order) and
/// compare backward() gradients against the central-difference oracle.
/// Returns the worst relative error over all parameter coordinates.
inline double gradient_check(
    const std::function<cob::Value(cob::Graph&, const std::vector<cob::Value>&)>& build,
    std::vector<cob::Matrix> params, double h = 1e-5) {
  using namespace cob;

  // Analytic gradients.
  std::vector<Matrix> analytic;
  {
    Graph g;
    std::vector<Value> leaves;
    leaves.reserve(params.size());
    for (const Matrix& p : params) leaves.push_back(g.leaf(p));
    const Value loss = build(g, leaves);
    g.backward(loss);
    for (const Value v : leaves) analytic.push_back(g.grad(v));
  }

  // Finite-difference oracle (forward evaluations only).
  std::vector<Matrix*> ptrs;
  for (Matrix& p : params) ptrs.push_back(&p);
  const auto f = [&]() {
    Graph g;
    std::vector<Value> leaves;
    leaves.reserve(params.size());
    for (const Matrix& p : params) leaves.push_back(g.leaf(p));
    return g.scalar(build(g, leaves));
  };
  const std::vector<Matrix> numeric = finite_difference_gradient(f, ptrs, h);

  return max_relative_error(analytic, numeric);
}

/// Weighted sum of all entries with fixed pseudo-random weights; unlike a
/// plain sum it catches element-permutation bugs in backward rules.
inline cob::Value weighted_sum(cob::Graph& g, cob::Value x, uint64_t seed = 7) {
  cob::Rng rng(seed);
  const cob::Matrix& v = g.value(x);
  cob::Matrix w(v.rows(), v.cols());
  for (long i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(0.25, 1.75);
  return g.sum(g.mul(x, g.leaf(std::move(w))));
}

}  // namespace cobtest

#include "cob/model.hpp"

namespace cobtest {

/// Backward() vs the finite-difference oracle over every trainable parameter
/// of a model, for an arbitrary loss builder. Parameters the builder never
/// binds must receive zero analytic gradient; the oracle confirms it.
inline double model_gradient_check(
    cob::Model& model,
    const std::function<cob::Value(cob::Graph&, cob::ParamBinder&, cob::Model&)>& build,
    double h = 1e-5) {
  using namespace cob;

  std::vector<std::pair<std::string, Matrix*>> params = model.trainable_params();

  std::vector<Matrix> analytic;
  {
    Graph g;
    ParamBinder p(g);
    const Value loss = build(g, p, model);
    g.backward(loss);
    for (const auto& [name, host] : params) {
      Matrix grad(host->rows(), host->cols());
      for (const ParamBinder::Bound& b : p.bound()) {
        if (b.name == name) {
          grad = g.grad(b.node);
          break;
        }
      }
      analytic.push_back(std::move(grad));
    }
  }

  std::vector<Matrix*> ptrs;
  for (auto& [name, host] : params) ptrs.push_back(host);
  const auto f = [&]() {
    Graph g;
    ParamBinder p(g);
    return g.scalar(build(g, p, model));
  };
  const std::vector<Matrix> numeric = cob::finite_difference_gradient(f, ptrs, h);

  return cob::max_relative_error(analytic, numeric);
}

/// Ridge least-squares probe: fit W minimizing |XW - Y|^2 + delta|W|^2 via
/// Gaussian elimination on the normal equations. Test-only oracle, fully
/// independent of the autodiff path.
inline cob::Matrix least_squares(const cob::Matrix& x, const cob::Matrix& y,
                                 double delta = 1e-6) {
  using cob::Matrix;
  const Matrix xt = cob::transpose(x);
  Matrix a = cob::matmul(xt, x);  // d x d
  for (int i = 0; i < a.rows(); ++i) a(i, i) += delta;
  Matrix b = cob::matmul(xt, y);  // d x k

  const int n = a.rows();
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::fabs(a(r, col)) > std::fabs(a(pivot, col))) pivot = r;
    }
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(a(col, c), a(pivot, c));
      for (int c = 0; c < b.cols(); ++c) std::swap(b(col, c), b(pivot, c));
    }
    const double d = a(col, col);
    for (int r = col + 1; r < n; ++r) {
      const double f = a(r, col) / d;
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      for (int c = 0; c < b.cols(); ++c) b(r, c) -= f * b(col, c);
    }
  }
  Matrix w(n, b.cols());
  for (int c = 0; c < b.cols(); ++c) {
    for (int r = n - 1; r >= 0; --r) {
      double s = b(r, c);
      for (int k = r + 1; k < n; ++k) s -= a(r, k) * w(k, c);
      w(r, c) = s / a(r, r);
    }
  }
  return w;
}

/// Accuracy of the ridge probe trained on (x_train -> one-hot answers) and
/// scored by argmax on x_eval.
inline double probe_accuracy(const cob::Matrix& x_train, const std::vector<int>& y_train,
                             const cob::Matrix& x_eval, const std::vector<int>& y_eval,
                             int n_classes) {
  using cob::Matrix;
  Matrix one_hot(x_train.rows(), n_classes);
  for (int r = 0; r < x_train.rows(); ++r) one_hot(r, y_train[static_cast<size_t>(r)]) = 1.0;
  const Matrix w = least_squares(x_train, one_hot);
  const Matrix scores = cob::matmul(x_eval, w);
  const std::vector<int> pred = cob::predict(scores);
  int correct = 0;
  for (size_t i = 0; i < pred.size(); ++i) correct += pred[i] == y_eval[i];
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

/// Append a constant-1 column (bias feature for the probes).
inline cob::Matrix with_bias_column(const cob::Matrix& x) {
  cob::Matrix out(x.rows(), x.cols() + 1);
  for (int r = 0; r < x.rows(); ++r) {
    for (int c = 0; c < x.cols(); ++c) out(r, c) = x(r, c);
    out(r, x.cols()) = 1.0;
  }
  return out;
}

}  // namespace cobtest
