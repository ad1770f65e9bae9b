#pragma once

#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "hetcons/linalg.hpp"

namespace hetcons {

/// Directed edge as written in scenario files: information flows from
/// `from` to `to`. Node indices are 1-based.
struct Edge {
  int from = 0;
  int to = 0;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Weighted directed communication graph. weight(i, j) is the weight agent i
/// places on information received from agent j (0-based indices).
class DiGraph {
 public:
  /// Empty graph on n nodes.
  explicit DiGraph(int n);

  /// From a full weight matrix; validates nonnegativity, finiteness and the
  /// zero diagonal.
  static DiGraph from_weights(const Matrix& weights);

  /// From a 1-based (from, to, weight) edge list.
  static DiGraph from_edges(int n, std::span<const Edge> edges);

  /// Recovers the adjacency from a Laplacian (a_ij = -L_ij off the diagonal).
  static DiGraph from_laplacian(const Matrix& laplacian);

  int size() const { return static_cast<int>(weights_.rows()); }
  double weight(int i, int j) const { return weights_(i, j); }
  const Matrix& weights() const { return weights_; }

  /// Edge list (1-based, row-major order of the receiving node).
  std::vector<Edge> edges() const;

  double total_weight() const { return weights_.sum(); }

  friend bool operator==(const DiGraph& a, const DiGraph& b) {
    return a.weights_ == b.weights_;
  }

 private:
  explicit DiGraph(Matrix weights) : weights_(std::move(weights)) {}
  Matrix weights_;
};

namespace graph {

/// L = D - A with D the diagonal of in-degrees.
Matrix laplacian(const DiGraph& g);

/// True iff some root reaches every node along directed edges.
bool has_spanning_tree(const DiGraph& g);

/// True iff in-degree equals out-degree at every node.
bool is_balanced(const DiGraph& g);

/// Entrywise sum of the weights; all graphs must share the node count.
DiGraph graph_union(std::span<const DiGraph> graphs);

/// Eigenvalue with the smallest positive real part, skipping the (near-)zero
/// eigenvalues. Ties go to the smallest |Im|, then to Im >= 0.
Complex lambda_min_nonzero(const Matrix& m);

// Shipped topologies.
DiGraph directed_cycle(int n);
/// 1 -> 2 -> 3 (nodes 4, 5 isolated), on 5 nodes.
DiGraph default_switching_first();
/// 3 -> 4 -> 5 -> 1 (node 2 isolated), on 5 nodes.
DiGraph default_switching_second();

}  // namespace graph
}  // namespace hetcons
