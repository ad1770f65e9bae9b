#include "hetcons/graph.hpp"

#include <cmath>
#include <limits>

namespace hetcons {

DiGraph::DiGraph(int n) {
  if (n < 1) {
    throw Error(ErrorCode::InvalidDimension, "DiGraph: node count must be >= 1");
  }
  weights_ = Matrix::Zero(n, n);
}

DiGraph DiGraph::from_weights(const Matrix& weights) {
  if (weights.rows() != weights.cols() || weights.rows() < 1) {
    throw Error(ErrorCode::NonSquare, "DiGraph: weight matrix must be square");
  }
  if (!weights.allFinite() || (weights.array() < 0.0).any()) {
    throw Error(ErrorCode::InvalidArgument,
                "DiGraph: weights must be finite and nonnegative");
  }
  if (weights.diagonal().cwiseAbs().maxCoeff() != 0.0) {
    throw Error(ErrorCode::InvalidArgument, "DiGraph: self-loops are not allowed");
  }
  return DiGraph(weights);
}

DiGraph DiGraph::from_edges(int n, std::span<const Edge> edges) {
  DiGraph g(n);
  for (const Edge& e : edges) {
    if (e.from < 1 || e.from > n || e.to < 1 || e.to > n) {
      throw Error(ErrorCode::InvalidArgument,
                  "DiGraph: edge endpoint out of range 1.." + std::to_string(n));
    }
    if (e.from == e.to) {
      throw Error(ErrorCode::InvalidArgument, "DiGraph: self-loops are not allowed");
    }
    if (!std::isfinite(e.weight) || e.weight <= 0.0) {
      throw Error(ErrorCode::InvalidArgument,
                  "DiGraph: edge weights must be finite and positive");
    }
    double& slot = g.weights_(e.to - 1, e.from - 1);
    if (slot != 0.0) {
      throw Error(ErrorCode::InvalidArgument,
                  "DiGraph: duplicate edge " + std::to_string(e.from) + "->" +
                      std::to_string(e.to));
    }
    slot = e.weight;
  }
  return g;
}

DiGraph DiGraph::from_laplacian(const Matrix& laplacian) {
  if (laplacian.rows() != laplacian.cols() || laplacian.rows() < 1) {
    throw Error(ErrorCode::NonSquare, "DiGraph: Laplacian must be square");
  }
  Matrix w = -laplacian;
  w.diagonal().setZero();
  const double scale = std::max(1.0, laplacian.cwiseAbs().maxCoeff());
  if ((w.array() < -1e-12 * scale).any() ||
      (laplacian.rowwise().sum().cwiseAbs().array() > 1e-9 * scale).any()) {
    throw Error(ErrorCode::InvalidArgument,
                "DiGraph: matrix is not a graph Laplacian");
  }
  return from_weights(w.cwiseMax(0.0));
}

std::vector<Edge> DiGraph::edges() const {
  std::vector<Edge> out;
  for (int i = 0; i < size(); ++i) {
    for (int j = 0; j < size(); ++j) {
      if (weights_(i, j) > 0.0) out.push_back({j + 1, i + 1, weights_(i, j)});
    }
  }
  return out;
}

namespace graph {

Matrix laplacian(const DiGraph& g) {
  Matrix l = -g.weights();
  l.diagonal() = g.weights().rowwise().sum();
  return l;
}

bool has_spanning_tree(const DiGraph& g) {
  const int n = g.size();
  // Edge j -> i exists when a_ij > 0.
  for (int root = 0; root < n; ++root) {
    std::vector<bool> seen(n, false);
    std::vector<int> stack{root};
    seen[root] = true;
    int reached = 1;
    while (!stack.empty()) {
      const int j = stack.back();
      stack.pop_back();
      for (int i = 0; i < n; ++i) {
        if (!seen[i] && g.weight(i, j) > 0.0) {
          seen[i] = true;
          ++reached;
          stack.push_back(i);
        }
      }
    }
    if (reached == n) return true;
  }
  return false;
}

bool is_balanced(const DiGraph& g) {
  const Vector in = g.weights().rowwise().sum();
  const Vector out = g.weights().colwise().sum().transpose();
  const double tol = 1e-12 * std::max(1.0, g.total_weight());
  return ((in - out).cwiseAbs().array() <= tol).all();
}

DiGraph graph_union(std::span<const DiGraph> graphs) {
  if (graphs.empty()) {
    throw Error(ErrorCode::InvalidArgument, "graph_union: need at least one graph");
  }
  Matrix w = graphs.front().weights();
  for (const DiGraph& g : graphs.subspan(1)) {
    if (g.size() != graphs.front().size()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "graph_union: graphs have different node counts");
    }
    w += g.weights();
  }
  return DiGraph::from_weights(w);
}

Complex lambda_min_nonzero(const Matrix& m) {
  const Spectrum spectrum = linalg::eig(m);
  const double scale = std::max(1.0, linalg::norm(m));
  const double zero_tol = 1e-9 * linalg::norm(m);
  const double tie_tol = 1e-9 * scale;
  bool found = false;
  Complex best;
  for (const Complex& z : spectrum) {
    if (!(z.real() > zero_tol)) continue;
    if (!found) {
      best = z;
      found = true;
      continue;
    }
    if (z.real() < best.real() - tie_tol) {
      best = z;
    } else if (std::abs(z.real() - best.real()) <= tie_tol) {
      if (std::abs(z.imag()) < std::abs(best.imag()) - tie_tol) {
        best = z;
      } else if (std::abs(std::abs(z.imag()) - std::abs(best.imag())) <= tie_tol &&
                 z.imag() >= 0.0 && best.imag() < 0.0) {
        best = z;
      }
    }
  }
  if (!found) {
    throw Error(ErrorCode::AllZero,
                "lambda_min_nonzero: no eigenvalue with positive real part");
  }
  return best;
}

DiGraph directed_cycle(int n) {
  if (n < 2) return DiGraph(n);
  std::vector<Edge> edges;
  for (int i = 1; i <= n; ++i) edges.push_back({i, i % n + 1, 1.0});
  return DiGraph::from_edges(n, edges);
}

DiGraph default_switching_first() {
  const Edge edges[] = {{1, 2, 1.0}, {2, 3, 1.0}};
  return DiGraph::from_edges(5, edges);
}

DiGraph default_switching_second() {
  const Edge edges[] = {{3, 4, 1.0}, {4, 5, 1.0}, {5, 1, 1.0}};
  return DiGraph::from_edges(5, edges);
}

}  // namespace graph
}  // namespace hetcons
