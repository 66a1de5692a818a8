#include "cob/autodiff.hpp"

#include <cmath>
#include <utility>

namespace cob {

Value Graph::push(Matrix value, std::array<int, 2> parents,
                  std::function<void(Graph&, const Node&)> back) {
  Node n;
  n.grad = Matrix(value.rows(), value.cols());
  n.value = std::move(value);
  n.parents = parents;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Value{static_cast<int>(nodes_.size()) - 1};
}

const Graph::Node& Graph::node(Value v) const {
  if (!v.valid() || v.id >= static_cast<int>(nodes_.size())) {
    throw ContractError("Graph: invalid value handle");
  }
  return nodes_[static_cast<size_t>(v.id)];
}

void Graph::check_binary_same_shape(Value a, Value b, const char* op) const {
  require_same_shape(node(a).value, node(b).value, op);
}

double Graph::scalar(Value v) const {
  const Matrix& m = node(v).value;
  if (m.rows() != 1 || m.cols() != 1) {
    throw ContractError("Graph::scalar: node is " + m.shape_str() + ", expected 1x1");
  }
  return m(0, 0);
}

Value Graph::leaf(Matrix value) { return push(std::move(value), {-1, -1}, nullptr); }

Value Graph::matmul(Value av, Value bv) {
  const Matrix& a = node(av).value;
  const Matrix& b = node(bv).value;
  Matrix out = cob::matmul(a, b);
  const int ai = av.id, bi = bv.id;
  return push(std::move(out), {ai, bi}, [ai, bi](Graph& g, const Node& n) {
    Node& a = g.parent(ai);
    Node& b = g.parent(bi);
    const Matrix da = cob::matmul(n.grad, cob::transpose(b.value));
    const Matrix db = cob::matmul(cob::transpose(a.value), n.grad);
    for (long i = 0; i < da.size(); ++i) a.grad.data()[i] += da.data()[i];
    for (long i = 0; i < db.size(); ++i) b.grad.data()[i] += db.data()[i];
  });
}

Value Graph::add(Value av, Value bv) {
  check_binary_same_shape(av, bv, "add");
  Matrix out = cob::add(node(av).value, node(bv).value);
  const int ai = av.id, bi = bv.id;
  return push(std::move(out), {ai, bi}, [ai, bi](Graph& g, const Node& n) {
    Node& a = g.parent(ai);
    Node& b = g.parent(bi);
    for (long i = 0; i < n.grad.size(); ++i) {
      a.grad.data()[i] += n.grad.data()[i];
      b.grad.data()[i] += n.grad.data()[i];
    }
  });
}

Value Graph::sub(Value av, Value bv) {
  check_binary_same_shape(av, bv, "sub");
  Matrix out = cob::sub(node(av).value, node(bv).value);
  const int ai = av.id, bi = bv.id;
  return push(std::move(out), {ai, bi}, [ai, bi](Graph& g, const Node& n) {
    Node& a = g.parent(ai);
    Node& b = g.parent(bi);
    for (long i = 0; i < n.grad.size(); ++i) {
      a.grad.data()[i] += n.grad.data()[i];
      b.grad.data()[i] -= n.grad.data()[i];
    }
  });
}

Value Graph::mul(Value av, Value bv) {
  check_binary_same_shape(av, bv, "mul");
  Matrix out = cob::hadamard(node(av).value, node(bv).value);
  const int ai = av.id, bi = bv.id;
  return push(std::move(out), {ai, bi}, [ai, bi](Graph& g, const Node& n) {
    Node& a = g.parent(ai);
    Node& b = g.parent(bi);
    for (long i = 0; i < n.grad.size(); ++i) {
      a.grad.data()[i] += n.grad.data()[i] * b.value.data()[i];
      b.grad.data()[i] += n.grad.data()[i] * a.value.data()[i];
    }
  });
}

Value Graph::div(Value av, Value bv) {
  check_binary_same_shape(av, bv, "div");
  const Matrix& a = node(av).value;
  const Matrix& b = node(bv).value;
  Matrix out(a.rows(), a.cols());
  for (long i = 0; i < out.size(); ++i) {
    out.data()[i] = a.data()[i] / b.data()[i];
  }
  if (!out.all_finite()) throw NumericError("div: non-finite result (zero denominator?)");
  const int ai = av.id, bi = bv.id;
  return push(std::move(out), {ai, bi}, [ai, bi](Graph& g, const Node& n) {
    Node& a = g.parent(ai);
    Node& b = g.parent(bi);
    for (long i = 0; i < n.grad.size(); ++i) {
      const double gi = n.grad.data()[i];
      const double bi_v = b.value.data()[i];
      a.grad.data()[i] += gi / bi_v;
      b.grad.data()[i] -= gi * n.value.data()[i] / bi_v;
    }
  });
}

Value Graph::add_rowvec(Value av, Value rowv) {
  const Matrix& a = node(av).value;
  const Matrix& row = node(rowv).value;
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("add_rowvec: row must be 1x" + std::to_string(a.cols()) + ", got " +
                     row.shape_str());
  }
  Matrix out = a;
  for (int r = 0; r < out.rows(); ++r) {
    for (int c = 0; c < out.cols(); ++c) out(r, c) += row(0, c);
  }
  const int ai = av.id, ri = rowv.id;
  return push(std::move(out), {ai, ri}, [ai, ri](Graph& g, const Node& n) {
    Node& a = g.parent(ai);
    Node& row = g.parent(ri);
    for (long i = 0; i < n.grad.size(); ++i) a.grad.data()[i] += n.grad.data()[i];
    for (int r = 0; r < n.grad.rows(); ++r) {
      for (int c = 0; c < n.grad.cols(); ++c) row.grad(0, c) += n.grad(r, c);
    }
  });
}

Value Graph::concat_cols(Value av, Value bv) {
  const Matrix& a = node(av).value;
  const Matrix& b = node(bv).value;
  if (a.rows() != b.rows()) {
    throw ShapeError("concat_cols: row counts differ " + a.shape_str() + " vs " + b.shape_str());
  }
  Matrix out(a.rows(), a.cols() + b.cols());
  for (int r = 0; r < a.rows(); ++r) {
    for (int c = 0; c < a.cols(); ++c) out(r, c) = a(r, c);
    for (int c = 0; c < b.cols(); ++c) out(r, a.cols() + c) = b(r, c);
  }
  const int ai = av.id, bi = bv.id;
  const int split = a.cols();
  return push(std::move(out), {ai, bi}, [ai, bi, split](Graph& g, const Node& n) {
    Node& a = g.parent(ai);
    Node& b = g.parent(bi);
    for (int r = 0; r < n.grad.rows(); ++r) {
      for (int c = 0; c < split; ++c) a.grad(r, c) += n.grad(r, c);
      for (int c = split; c < n.grad.cols(); ++c) b.grad(r, c - split) += n.grad(r, c);
    }
  });
}

Value Graph::relu(Value av) {
  const Matrix& a = node(av).value;
  Matrix out = a;
  for (long i = 0; i < out.size(); ++i) {
    if (out.data()[i] < 0.0) out.data()[i] = 0.0;
  }
  const int ai = av.id;
  // Subgradient at 0 is 0 (strict comparison below).
  return push(std::move(out), {ai, -1}, [ai](Graph& g, const Node& n) {
    Node& a = g.parent(ai);
    for (long i = 0; i < n.grad.size(); ++i) {
      if (a.value.data()[i] > 0.0) a.grad.data()[i] += n.grad.data()[i];
    }
  });
}

Value Graph::exp(Value av) {
  const Matrix& a = node(av).value;
  Matrix out(a.rows(), a.cols());
  for (long i = 0; i < out.size(); ++i) out.data()[i] = std::exp(a.data()[i]);
  if (!out.all_finite()) throw NumericError("exp: overflow");
  const int ai = av.id;
  return push(std::move(out), {ai, -1}, [ai](Graph& g, const Node& n) {
    Node& a = g.parent(ai);
    for (long i = 0; i < n.grad.size(); ++i) {
      a.grad.data()[i] += n.grad.data()[i] * n.value.data()[i];
    }
  });
}

Value Graph::log(Value av) {
  const Matrix& a = node(av).value;
  Matrix out(a.rows(), a.cols());
  for (long i = 0; i < out.size(); ++i) {
    if (!(a.data()[i] > 0.0)) throw NumericError("log: non-positive input");
    out.data()[i] = std::log(a.data()[i]);
  }
  const int ai = av.id;
  return push(std::move(out), {ai, -1}, [ai](Graph& g, const Node& n) {
    Node& a = g.parent(ai);
    for (long i = 0; i < n.grad.size(); ++i) {
      a.grad.data()[i] += n.grad.data()[i] / a.value.data()[i];
    }
  });
}

Value Graph::sqrt(Value av) {
  const Matrix& a = node(av).value;
  Matrix out(a.rows(), a.cols());
  for (long i = 0; i < out.size(); ++i) {
    if (a.data()[i] < 0.0) throw NumericError("sqrt: negative input");
    out.data()[i] = std::sqrt(a.data()[i]);
  }
  const int ai = av.id;
  // At an exact zero the derivative is unbounded; a zero upstream gradient
  // still yields a zero (not NaN) contribution.
  return push(std::move(out), {ai, -1}, [ai](Graph& g, const Node& n) {
    Node& a = g.parent(ai);
    for (long i = 0; i < n.grad.size(); ++i) {
      const double gi = n.grad.data()[i];
      if (gi != 0.0) a.grad.data()[i] += gi / (2.0 * n.value.data()[i]);
    }
  });
}

Value Graph::scale(Value av, double k) {
  Matrix out = cob::scale(node(av).value, k);
  const int ai = av.id;
  return push(std::move(out), {ai, -1}, [ai, k](Graph& g, const Node& n) {
    Node& a = g.parent(ai);
    for (long i = 0; i < n.grad.size(); ++i) a.grad.data()[i] += k * n.grad.data()[i];
  });
}

Value Graph::add_scalar(Value av, double k) {
  Matrix out = node(av).value;
  for (long i = 0; i < out.size(); ++i) out.data()[i] += k;
  const int ai = av.id;
  return push(std::move(out), {ai, -1}, [ai](Graph& g, const Node& n) {
    Node& a = g.parent(ai);
    for (long i = 0; i < n.grad.size(); ++i) a.grad.data()[i] += n.grad.data()[i];
  });
}

Value Graph::transpose(Value av) {
  Matrix out = cob::transpose(node(av).value);
  const int ai = av.id;
  return push(std::move(out), {ai, -1}, [ai](Graph& g, const Node& n) {
    Node& a = g.parent(ai);
    for (int r = 0; r < n.grad.rows(); ++r) {
      for (int c = 0; c < n.grad.cols(); ++c) a.grad(c, r) += n.grad(r, c);
    }
  });
}

Value Graph::sum(Value av) {
  const Matrix& a = node(av).value;
  double s = 0.0;
  for (long i = 0; i < a.size(); ++i) s += a.data()[i];
  Matrix out(1, 1);
  out(0, 0) = s;
  const int ai = av.id;
  return push(std::move(out), {ai, -1}, [ai](Graph& g, const Node& n) {
    Node& a = g.parent(ai);
    const double gi = n.grad(0, 0);
    for (long i = 0; i < a.grad.size(); ++i) a.grad.data()[i] += gi;
  });
}

Value Graph::trace(Value av) {
  const Matrix& a = node(av).value;
  if (a.rows() != a.cols()) throw ShapeError("trace: matrix is " + a.shape_str() + ", not square");
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i) s += a(i, i);
  Matrix out(1, 1);
  out(0, 0) = s;
  const int ai = av.id;
  return push(std::move(out), {ai, -1}, [ai](Graph& g, const Node& n) {
    Node& a = g.parent(ai);
    const double gi = n.grad(0, 0);
    for (int i = 0; i < a.grad.rows(); ++i) a.grad(i, i) += gi;
  });
}

Value Graph::col_sums(Value av) {
  const Matrix& a = node(av).value;
  Matrix out(1, a.cols());
  for (int r = 0; r < a.rows(); ++r) {
    for (int c = 0; c < a.cols(); ++c) out(0, c) += a(r, c);
  }
  const int ai = av.id;
  return push(std::move(out), {ai, -1}, [ai](Graph& g, const Node& n) {
    Node& a = g.parent(ai);
    for (int r = 0; r < a.grad.rows(); ++r) {
      for (int c = 0; c < a.grad.cols(); ++c) a.grad(r, c) += n.grad(0, c);
    }
  });
}

Value Graph::row_sums(Value av) {
  const Matrix& a = node(av).value;
  Matrix out(a.rows(), 1);
  for (int r = 0; r < a.rows(); ++r) {
    for (int c = 0; c < a.cols(); ++c) out(r, 0) += a(r, c);
  }
  const int ai = av.id;
  return push(std::move(out), {ai, -1}, [ai](Graph& g, const Node& n) {
    Node& a = g.parent(ai);
    for (int r = 0; r < a.grad.rows(); ++r) {
      for (int c = 0; c < a.grad.cols(); ++c) a.grad(r, c) += n.grad(r, 0);
    }
  });
}

Value Graph::center_columns(Value av) {
  const Matrix& a = node(av).value;
  Matrix out = a;
  for (int c = 0; c < a.cols(); ++c) {
    double mean = 0.0;
    for (int r = 0; r < a.rows(); ++r) mean += a(r, c);
    mean /= a.rows() > 0 ? a.rows() : 1;
    for (int r = 0; r < a.rows(); ++r) out(r, c) -= mean;
  }
  const int ai = av.id;
  // Centering is linear and self-adjoint: the backward map is the same
  // projection applied to the incoming gradient.
  return push(std::move(out), {ai, -1}, [ai](Graph& g, const Node& n) {
    Node& a = g.parent(ai);
    for (int c = 0; c < n.grad.cols(); ++c) {
      double mean = 0.0;
      for (int r = 0; r < n.grad.rows(); ++r) mean += n.grad(r, c);
      mean /= n.grad.rows() > 0 ? n.grad.rows() : 1;
      for (int r = 0; r < n.grad.rows(); ++r) a.grad(r, c) += n.grad(r, c) - mean;
    }
  });
}

Value Graph::row_standardize(Value av, double epsilon) {
  const Matrix& a = node(av).value;
  if (a.cols() < 1) throw ShapeError("row_standardize: empty rows");
  if (!(epsilon > 0.0)) throw ContractError("row_standardize: epsilon must be > 0");
  Matrix out(a.rows(), a.cols());
  const int cdim = a.cols();
  for (int r = 0; r < a.rows(); ++r) {
    double mean = 0.0;
    for (int c = 0; c < cdim; ++c) mean += a(r, c);
    mean /= cdim;
    double var = 0.0;
    for (int c = 0; c < cdim; ++c) {
      const double d = a(r, c) - mean;
      var += d * d;
    }
    var /= cdim;
    const double inv_sd = 1.0 / std::sqrt(var + epsilon);
    for (int c = 0; c < cdim; ++c) out(r, c) = (a(r, c) - mean) * inv_sd;
  }
  const int ai = av.id;
  return push(std::move(out), {ai, -1}, [ai, epsilon](Graph& g, const Node& n) {
    Node& a = g.parent(ai);
    const int cdim = n.value.cols();
    for (int r = 0; r < n.value.rows(); ++r) {
      double mean = 0.0;
      for (int c = 0; c < cdim; ++c) mean += a.value(r, c);
      mean /= cdim;
      double var = 0.0;
      for (int c = 0; c < cdim; ++c) {
        const double d = a.value(r, c) - mean;
        var += d * d;
      }
      var /= cdim;
      const double inv_sd = 1.0 / std::sqrt(var + epsilon);
      double g_mean = 0.0, gy_mean = 0.0;
      for (int c = 0; c < cdim; ++c) {
        g_mean += n.grad(r, c);
        gy_mean += n.grad(r, c) * n.value(r, c);
      }
      g_mean /= cdim;
      gy_mean /= cdim;
      for (int c = 0; c < cdim; ++c) {
        a.grad(r, c) += inv_sd * (n.grad(r, c) - g_mean - n.value(r, c) * gy_mean);
      }
    }
  });
}

Value Graph::gather_cols(Value av, std::vector<int> idx) {
  const Matrix& a = node(av).value;
  if (static_cast<int>(idx.size()) != a.rows()) {
    throw ShapeError("gather_cols: index count " + std::to_string(idx.size()) +
                     " != rows " + std::to_string(a.rows()));
  }
  Matrix out(a.rows(), 1);
  for (int r = 0; r < a.rows(); ++r) {
    if (idx[static_cast<size_t>(r)] < 0 || idx[static_cast<size_t>(r)] >= a.cols()) {
      throw std::out_of_range("gather_cols: index " +
                              std::to_string(idx[static_cast<size_t>(r)]) +
                              " out of range for " + a.shape_str());
    }
    out(r, 0) = a(r, idx[static_cast<size_t>(r)]);
  }
  const int ai = av.id;
  return push(std::move(out), {ai, -1},
              [ai, idx = std::move(idx)](Graph& g, const Node& n) {
                Node& a = g.parent(ai);
                for (int r = 0; r < n.grad.rows(); ++r) {
                  a.grad(r, idx[static_cast<size_t>(r)]) += n.grad(r, 0);
                }
              });
}

void Graph::backward(Value loss) {
  const Node& l = node(loss);
  if (l.value.rows() != 1 || l.value.cols() != 1) {
    throw ContractError("backward: loss node is " + l.value.shape_str() + ", expected 1x1");
  }
  if (backward_done_) {
    throw ContractError("backward: already called on this graph");
  }
  backward_done_ = true;

  // Mark nodes reachable from the loss; untouched subgraphs stay untouched.
  std::vector<char> reachable(nodes_.size(), 0);
  std::vector<int> stack{loss.id};
  reachable[static_cast<size_t>(loss.id)] = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int p : nodes_[static_cast<size_t>(u)].parents) {
      if (p >= 0 && !reachable[static_cast<size_t>(p)]) {
        reachable[static_cast<size_t>(p)] = 1;
        stack.push_back(p);
      }
    }
  }

  nodes_[static_cast<size_t>(loss.id)].grad(0, 0) = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (reachable[static_cast<size_t>(i)] && n.back) n.back(*this, n);
  }
}

}  // namespace cob
