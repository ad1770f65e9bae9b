#include "hetcons/graph.hpp"

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "support.hpp"

namespace hetcons {
namespace {

int zero_eigenvalue_count(const Matrix& l) {
  int zeros = 0;
  for (const Complex& z : linalg::eig(l)) {
    if (std::abs(z) < 1e-6) ++zeros;
  }
  return zeros;
}

TEST(DiGraphTest, EdgesAreOneBasedFromTo) {
  const Edge edges[] = {{1, 2, 0.5}, {3, 1, 2.0}};
  const DiGraph g = DiGraph::from_edges(3, edges);
  EXPECT_EQ(g.weight(1, 0), 0.5);  // node 2 listens to node 1
  EXPECT_EQ(g.weight(0, 2), 2.0);
  EXPECT_EQ(g.total_weight(), 2.5);
  const std::vector<Edge> back = g.edges();
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(DiGraph::from_edges(3, back), g);
}

TEST(DiGraphTest, RejectsMalformedEdges) {
  const Edge self[] = {{2, 2, 1.0}};
  const Edge range[] = {{1, 4, 1.0}};
  const Edge weight[] = {{1, 2, 0.0}};
  const Edge dup[] = {{1, 2, 1.0}, {1, 2, 3.0}};
  EXPECT_THROW(DiGraph::from_edges(3, self), Error);
  EXPECT_THROW(DiGraph::from_edges(3, range), Error);
  EXPECT_THROW(DiGraph::from_edges(3, weight), Error);
  EXPECT_THROW(DiGraph::from_edges(3, dup), Error);
  EXPECT_THROW(DiGraph(0), Error);
}

TEST(LaplacianTest, RowSumsVanishAndRoundTrip) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const DiGraph g = testing::random_graph(rng, 2 + trial % 5, 0.4);
    const Matrix l = graph::laplacian(g);
    EXPECT_LE(l.rowwise().sum().cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(DiGraph::from_laplacian(l), g);
  }
}

TEST(LaplacianTest, DirectedCycleSpectrum) {
  // 1 - exp(2 pi i k / n) for k = 0..n-1.
  const int n = 5;
  const Spectrum s = linalg::eig(graph::laplacian(graph::directed_cycle(n)));
  Spectrum expected;
  for (int k = 0; k < n; ++k) {
    expected.push_back(1.0 - std::polar(1.0, 2.0 * std::numbers::pi * k / n));
  }
  EXPECT_LE(linalg::multiset_distance(s, expected), 1e-12);
}

TEST(SpanningTreeTest, MatchesSingleZeroEigenvalueExhaustively) {
  for (int n = 1; n <= 3; ++n) {
    const unsigned slots = n * (n - 1);
    for (unsigned mask = 0; mask < (1u << slots); ++mask) {
      const DiGraph g = testing::graph_from_mask(n, mask);
      EXPECT_EQ(graph::has_spanning_tree(g), zero_eigenvalue_count(graph::laplacian(g)) == 1)
          << "n=" << n << " mask=" << mask;
    }
  }
}

TEST(SpanningTreeTest, DefaultSwitchingPair) {
  const DiGraph g1 = graph::default_switching_first();
  const DiGraph g2 = graph::default_switching_second();
  EXPECT_FALSE(graph::has_spanning_tree(g1));
  EXPECT_FALSE(graph::has_spanning_tree(g2));
  EXPECT_FALSE(graph::is_balanced(g1));
  EXPECT_FALSE(graph::is_balanced(g2));
  const DiGraph both[] = {g1, g2};
  const DiGraph u = graph::graph_union(both);
  EXPECT_TRUE(graph::has_spanning_tree(u));
  EXPECT_TRUE(graph::is_balanced(u));
  EXPECT_EQ(u, graph::directed_cycle(5));
}

TEST(BalanceTest, SmallCases) {
  EXPECT_TRUE(graph::is_balanced(graph::directed_cycle(4)));
  const Edge path[] = {{1, 2, 1.0}, {2, 3, 1.0}};
  EXPECT_FALSE(graph::is_balanced(DiGraph::from_edges(3, path)));
  EXPECT_TRUE(graph::is_balanced(DiGraph(3)));
}

TEST(UnionTest, SizeMismatch) {
  const DiGraph gs[] = {DiGraph(2), DiGraph(3)};
  try {
    graph::graph_union(gs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(LambdaMinTest, ThreeCycle) {
  const Complex z = graph::lambda_min_nonzero(graph::laplacian(graph::directed_cycle(3)));
  EXPECT_NEAR(z.real(), 1.5, 1e-12);
  EXPECT_NEAR(z.imag(), std::sqrt(3.0) / 2.0, 1e-12);  // tie broken towards Im >= 0
}

TEST(LambdaMinTest, AllZero) {
  try {
    graph::lambda_min_nonzero(Matrix::Zero(3, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AllZero);
  }
}

}  // namespace
}  // namespace hetcons
