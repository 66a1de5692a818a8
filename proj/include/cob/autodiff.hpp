#pragma once

#include <array>
#include <functional>
#include <vector>

#include "cob/matrix.hpp"

namespace cob {

class Graph;

/// Opaque handle to a node owned by a Graph.
struct Value {
  int id = -1;
  bool valid() const { return id >= 0; }
  friend bool operator==(Value a, Value b) { return a.id == b.id; }
};

/// Reverse-mode autodiff over matrix-valued nodes.
///
/// Values are computed eagerly at construction; backward() walks the tape in
/// reverse insertion order, which is a valid reverse-topological order because
/// operands always precede their results. Accumulation order is therefore
/// deterministic: identical graphs produce bit-identical gradients.
///
/// A graph is built once, backward() is called at most once, and the graph is
/// discarded (the training loop builds a fresh graph per batch).
class Graph {
 public:
  /// Insert a leaf (input or parameter). Leaves have gradients like any node.
  Value leaf(Matrix value);

  Value matmul(Value a, Value b);
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value mul(Value a, Value b);
  Value div(Value a, Value b);
  /// Broadcast-add a 1xC row vector to every row of a.
  Value add_rowvec(Value a, Value row);
  /// [a | b] along columns; row counts must match.
  Value concat_cols(Value a, Value b);

  Value relu(Value a);
  Value exp(Value a);
  Value log(Value a);
  Value sqrt(Value a);
  Value scale(Value a, double k);
  Value add_scalar(Value a, double k);

  Value transpose(Value a);
  Value sum(Value a);        // 1x1
  Value trace(Value a);      // 1x1, square input
  Value col_sums(Value a);   // 1xC
  Value row_sums(Value a);   // Rx1
  /// Subtract each column's mean from the column.
  Value center_columns(Value a);
  /// Per-row standardization to zero mean / unit variance across columns
  /// (population variance, epsilon inside the square root).
  Value row_standardize(Value a, double epsilon);
  /// out[k,0] = a[k, idx[k]]; idx.size() must equal a.rows().
  Value gather_cols(Value a, std::vector<int> idx);

  /// Accumulate d(loss)/d(node) into every node reachable from loss.
  /// loss must be 1x1. Call at most once per graph.
  void backward(Value loss);

  const Matrix& value(Value v) const { return node(v).value; }
  const Matrix& grad(Value v) const { return node(v).grad; }
  /// Value of a 1x1 node.
  double scalar(Value v) const;
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::array<int, 2> parents{-1, -1};
    // Accumulates into the parents' grads; null for leaves.
    std::function<void(Graph&, const Node&)> back;
  };

  Value push(Matrix value, std::array<int, 2> parents,
             std::function<void(Graph&, const Node&)> back);
  const Node& node(Value v) const;
  Node& parent(int id) { return nodes_[static_cast<size_t>(id)]; }
  void check_binary_same_shape(Value a, Value b, const char* op) const;

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace cob
