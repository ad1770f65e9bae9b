#include "hetcons/switching.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace hetcons {
namespace {

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : state_(mix(mix(seed) ^ mix(stream * kGolden + 0x632BE59BD9B4E019ULL))) {}

std::uint64_t Rng::next() {
  state_ += kGolden;
  return mix(state_);
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::exponential(double rate) { return -std::log1p(-uniform()) / rate; }

namespace switching {

void validate_generator(const Matrix& q) {
  if (q.rows() != q.cols() || q.rows() < 1) {
    throw Error(ErrorCode::NonSquare, "generator must be a nonempty square matrix");
  }
  if (!q.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "generator entries must be finite");
  }
  const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  for (int i = 0; i < q.rows(); ++i) {
    for (int j = 0; j < q.cols(); ++j) {
      if (i != j && q(i, j) < 0.0) {
        throw Error(ErrorCode::InvalidArgument,
                    "generator off-diagonal entries must be >= 0");
      }
    }
    if (std::abs(q.row(i).sum()) > 1e-12 * scale) {
      throw Error(ErrorCode::InvalidArgument, "generator rows must sum to 0");
    }
  }
}

Vector stationary_distribution(const Matrix& q) {
  validate_generator(q);
  const int l = static_cast<int>(q.rows());
  // Irreducible iff every mode reaches every other along positive rates.
  for (int root = 0; root < l; ++root) {
    std::vector<bool> seen(l, false);
    std::vector<int> stack{root};
    seen[root] = true;
    while (!stack.empty()) {
      const int k = stack.back();
      stack.pop_back();
      for (int j = 0; j < l; ++j) {
        if (!seen[j] && j != k && q(k, j) > 0.0) {
          seen[j] = true;
          stack.push_back(j);
        }
      }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw Error(ErrorCode::Reducible, "Markov chain is not irreducible");
    }
  }
  Matrix aug(l + 1, l);
  aug.topRows(l) = q.transpose();
  aug.row(l).setOnes();
  Vector rhs = Vector::Zero(l + 1);
  rhs[l] = 1.0;
  Vector pi = aug.colPivHouseholderQr().solve(rhs);
  const double residual = (q.transpose() * pi).norm();
  if (!pi.allFinite() || residual > 1e-10 * std::max(1.0, linalg::norm(q)) ||
      std::abs(pi.sum() - 1.0) > 1e-12 || (pi.array() <= 0.0).any()) {
    throw Error(ErrorCode::SingularSystem, "stationary distribution solve failed");
  }
  return pi;
}

MarkovTopology make_topology(std::vector<DiGraph> graphs, Matrix generator) {
  if (graphs.empty()) {
    throw Error(ErrorCode::InvalidArgument, "switching topology needs at least one graph");
  }
  for (const DiGraph& g : graphs) {
    if (g.size() != graphs.front().size()) {
      throw Error(ErrorCode::DimensionMismatch, "switching graphs differ in node count");
    }
  }
  if (generator.rows() != static_cast<int>(graphs.size())) {
    throw Error(ErrorCode::DimensionMismatch,
                "generator size does not match the number of graphs");
  }
  MarkovTopology mt;
  mt.pi = stationary_distribution(generator);
  mt.graphs = std::move(graphs);
  mt.generator = std::move(generator);
  return mt;
}

std::vector<ModeInterval> sample_path(const MarkovTopology& mt, double t_end,
                                      std::uint64_t seed, std::uint64_t run_index) {
  if (!(t_end > 0.0) || !std::isfinite(t_end)) {
    throw Error(ErrorCode::InvalidArgument, "sample_path: t_end must be > 0");
  }
  Rng rng(seed, run_index);
  const int l = mt.modes();
  const auto draw = [&](const auto& weight, double total) {
    double u = rng.uniform() * total;
    int last = -1;
    for (int k = 0; k < l; ++k) {
      const double w = weight(k);
      if (w <= 0.0) continue;
      last = k;
      if (u < w) return k;
      u -= w;
    }
    return last;
  };

  std::vector<ModeInterval> path;
  int mode = draw([&](int k) { return mt.pi[k]; }, mt.pi.sum());
  double t = 0.0;
  while (true) {
    const double rate = -mt.generator(mode, mode);
    const double hold = rate <= 1e-15 ? t_end : rng.exponential(rate);
    const double to = t + hold;
    if (to >= t_end) {
      path.push_back({mode, t, t_end});
      return path;
    }
    path.push_back({mode, t, to});
    t = to;
    const int from = mode;
    mode = draw([&](int k) { return k == from ? 0.0 : mt.generator(from, k); }, rate);
  }
}

int mode_at(std::span<const ModeInterval> path, double t) {
  const auto it = std::upper_bound(path.begin(), path.end(), t,
                                   [](double v, const ModeInterval& m) { return v < m.to; });
  return it == path.end() ? path.back().mode : it->mode;
}

DiGraph union_graph(const MarkovTopology& mt) { return graph::graph_union(mt.graphs); }

A4Report check_A4(const MarkovTopology& mt) {
  A4Report report;
  const DiGraph u = union_graph(mt);
  report.union_has_spanning_tree = graph::has_spanning_tree(u);
  report.union_balanced = graph::is_balanced(u);
  for (const DiGraph& g : mt.graphs) {
    report.per_graph.push_back({graph::has_spanning_tree(g), graph::is_balanced(g)});
  }
  return report;
}

double lambda_min_symmetric_part(const Matrix& laplacian) {
  const int n = static_cast<int>(laplacian.rows());
  if (n < 2) {
    throw Error(ErrorCode::InvalidDimension, "need at least two agents");
  }
  // Columns 2..n of the Householder Q of the all-ones vector span its
  // orthogonal complement.
  const Matrix q = Eigen::HouseholderQR<Matrix>(Matrix::Ones(n, 1)).householderQ();
  const Matrix basis = q.rightCols(n - 1);
  const Matrix s = laplacian + laplacian.transpose();
  const Matrix reduced = basis.transpose() * s * basis;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(reduced, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::ConvergenceFailure, "symmetric eigensolver did not converge");
  }
  return solver.eigenvalues().minCoeff();
}

double speed_bound(const MarkovTopology& mt, const ConsensusGain& gain,
                   const CompanionSystem& cs) {
  if (gain.rank != GainRank::One || !gain.q1) {
    throw Error(ErrorCode::NotRankOne, "speed bound requires a rank-one gain");
  }
  if (!check_A4(mt).passes()) {
    throw Error(ErrorCode::A4Violated,
                "union graph must be balanced and have a spanning tree");
  }
  const double pi_min = mt.pi.minCoeff();
  const double lambda = lambda_min_symmetric_part(graph::laplacian(union_graph(mt)));
  return pi_min * gain.mu * std::sqrt(*gain.q1 * gain.r_hat) * cs.B.dot(cs.nu) * lambda;
}

Matrix mean_laplacian(const MarkovTopology& mt) {
  Matrix l = Matrix::Zero(mt.nodes(), mt.nodes());
  for (int k = 0; k < mt.modes(); ++k) l += mt.pi[k] * graph::laplacian(mt.graphs[k]);
  return l;
}

}  // namespace switching
}  // namespace hetcons
