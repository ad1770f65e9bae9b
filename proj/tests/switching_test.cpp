#include "hetcons/switching.hpp"

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "support.hpp"

namespace hetcons {
namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidArgument;
}

CompanionSystem benchmark_target() {
  const Complex poles[] = {{-1.0, 0.0}, {-2.0, 0.0}};
  return synthesis::design_companion(poles);
}

TEST(RngTest, StreamsAreReproducibleAndDistinct) {
  Rng a(7, 3), b(7, 3), c(7, 4), d(8, 3);
  for (int k = 0; k < 100; ++k) {
    const std::uint64_t x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
    EXPECT_NE(x, d.next());
  }
}

TEST(RngTest, UniformAndExponentialMoments) {
  Rng rng(11);
  const int n = 200000;
  double su = 0.0, se = 0.0;
  for (int k = 0; k < n; ++k) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    se += rng.exponential(4.0);
  }
  EXPECT_NEAR(su / n, 0.5, 5e-3);
  EXPECT_NEAR(se / n, 0.25, 5e-3);
}

TEST(StationaryDistributionTest, Examples) {
  Matrix q(2, 2);
  q << -1, 1, 1, -1;
  const Vector pi = switching::stationary_distribution(q);
  EXPECT_NEAR(pi[0], 0.5, 1e-12);
  EXPECT_NEAR(pi[1], 0.5, 1e-12);
  q << -2, 2, 1, -1;
  const Vector pi2 = switching::stationary_distribution(q);
  EXPECT_NEAR(pi2[0], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(pi2[1], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(switching::stationary_distribution(Matrix::Zero(1, 1))[0], 1.0, 1e-15);
}

TEST(StationaryDistributionTest, RandomGeneratorsSatisfyBalance) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> w(0.1, 3.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int l = 2 + trial % 4;
    Matrix q = Matrix::Zero(l, l);
    for (int i = 0; i < l; ++i) {
      for (int j = 0; j < l; ++j) {
        if (i != j) q(i, j) = w(rng);
      }
      q(i, i) = -q.row(i).sum();
    }
    const Vector pi = switching::stationary_distribution(q);
    EXPECT_LE((pi.transpose() * q).norm(), 1e-10);
    EXPECT_NEAR(pi.sum(), 1.0, 1e-12);
    EXPECT_GT(pi.minCoeff(), 0.0);
  }
}

TEST(StationaryDistributionTest, Reducible) {
  Matrix q(3, 3);
  q << -1, 1, 0, 1, -1, 0, 0, 0, 0;
  EXPECT_EQ(code_of([&] { switching::stationary_distribution(q); }), ErrorCode::Reducible);
  Matrix absorbing(2, 2);
  absorbing << -1, 1, 0, 0;
  EXPECT_EQ(code_of([&] { switching::stationary_distribution(absorbing); }),
            ErrorCode::Reducible);
}

TEST(GeneratorTest, Validation) {
  Matrix neg(2, 2);
  neg << 1, -1, 1, -1;
  EXPECT_THROW(switching::validate_generator(neg), Error);
  Matrix rows(2, 2);
  rows << -1, 2, 1, -1;
  EXPECT_THROW(switching::validate_generator(rows), Error);
  EXPECT_THROW(switching::validate_generator(Matrix::Zero(2, 3)), Error);
}

TEST(SamplePathTest, SingleModeIsOneInterval) {
  const DiGraph g[] = {graph::directed_cycle(3)};
  const MarkovTopology mt = switching::make_topology({g[0]}, Matrix::Zero(1, 1));
  const auto path = switching::sample_path(mt, 12.5, 3);
  ASSERT_EQ(path.size(), 1u);
  EXPECT_EQ(path[0].mode, 0);
  EXPECT_EQ(path[0].from, 0.0);
  EXPECT_EQ(path[0].to, 12.5);
}

TEST(SamplePathTest, TilesTheHorizonAndToggles) {
  const MarkovTopology mt = testing::default_switching();
  for (std::uint64_t run = 0; run < 20; ++run) {
    const auto path = switching::sample_path(mt, 30.0, 7, run);
    ASSERT_FALSE(path.empty());
    EXPECT_EQ(path.front().from, 0.0);
    EXPECT_EQ(path.back().to, 30.0);
    for (std::size_t k = 0; k < path.size(); ++k) {
      EXPECT_LT(path[k].from, path[k].to);
      if (k > 0) {
        EXPECT_EQ(path[k].from, path[k - 1].to);
        EXPECT_NE(path[k].mode, path[k - 1].mode);
      }
    }
  }
}

TEST(SamplePathTest, DeterministicPerSeedAndRun) {
  const MarkovTopology mt = testing::default_switching();
  const auto a = switching::sample_path(mt, 50.0, 9, 4);
  const auto b = switching::sample_path(mt, 50.0, 9, 4);
  const auto c = switching::sample_path(mt, 50.0, 9, 5);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].mode, b[k].mode);
    EXPECT_EQ(a[k].to, b[k].to);
  }
  EXPECT_FALSE(a.size() == c.size() && a.front().to == c.front().to);
}

TEST(SamplePathTest, MeanHoldingTime) {
  const MarkovTopology mt = testing::default_switching();
  const auto path = switching::sample_path(mt, 2e4, 1);
  // Drop the last interval, which is cut off by the horizon.
  ASSERT_GT(path.size(), 10001u);
  double total = 0.0;
  for (std::size_t k = 0; k < 10000; ++k) total += path[k].to - path[k].from;
  const double mean = total / 10000.0;
  EXPECT_GE(mean, 0.98);
  EXPECT_LE(mean, 1.02);
}

TEST(SamplePathTest, OccupancyMatchesStationaryDistribution) {
  Matrix q(2, 2);
  q << -2, 2, 1, -1;
  const MarkovTopology asym = switching::make_topology(
      {graph::default_switching_first(), graph::default_switching_second()}, q);
  for (const MarkovTopology& mt : {testing::default_switching(), asym}) {
    const double horizon = 1e4;
    const auto path = switching::sample_path(mt, horizon, 2);
    std::vector<double> time(mt.modes(), 0.0);
    for (const ModeInterval& iv : path) time[iv.mode] += iv.to - iv.from;
    for (int k = 0; k < mt.modes(); ++k) EXPECT_NEAR(time[k] / horizon, mt.pi[k], 0.02);
  }
}

TEST(SamplePathTest, ModeAtIsRightContinuous) {
  const std::vector<ModeInterval> path{{0, 0.0, 1.0}, {1, 1.0, 2.5}, {0, 2.5, 3.0}};
  EXPECT_EQ(switching::mode_at(path, 0.0), 0);
  EXPECT_EQ(switching::mode_at(path, 0.999), 0);
  EXPECT_EQ(switching::mode_at(path, 1.0), 1);
  EXPECT_EQ(switching::mode_at(path, 2.5), 0);
  EXPECT_EQ(switching::mode_at(path, 3.0), 0);
}

TEST(A4Test, DefaultPair) {
  const A4Report report = switching::check_A4(testing::default_switching());
  EXPECT_TRUE(report.passes());
  ASSERT_EQ(report.per_graph.size(), 2u);
  for (const GraphStatus& g : report.per_graph) {
    EXPECT_FALSE(g.has_spanning_tree);
    EXPECT_FALSE(g.balanced);
  }
}

TEST(A4Test, SingleBalancedGraphAndEmptyGraphs) {
  const MarkovTopology one = switching::make_topology({graph::directed_cycle(4)}, Matrix::Zero(1, 1));
  EXPECT_TRUE(switching::check_A4(one).passes());
  Matrix q(2, 2);
  q << -1, 1, 1, -1;
  const MarkovTopology empty = switching::make_topology({DiGraph(3), DiGraph(3)}, q);
  const A4Report report = switching::check_A4(empty);
  EXPECT_FALSE(report.union_has_spanning_tree);
  EXPECT_FALSE(report.passes());
}

TEST(LambdaMinSymmetricTest, FiveCycle) {
  const double expected = 2.0 - 2.0 * std::cos(2.0 * std::numbers::pi / 5.0);
  EXPECT_NEAR(switching::lambda_min_symmetric_part(graph::laplacian(graph::directed_cycle(5))),
              expected, 1e-12);
}

TEST(LambdaMinSymmetricTest, CompleteGraph) {
  // L + L^T = 2 (n I - 1 1^T) has eigenvalue 2n on the complement of 1.
  const int n = 4;
  const Matrix w = Matrix::Ones(n, n) - Matrix::Identity(n, n);
  EXPECT_NEAR(switching::lambda_min_symmetric_part(graph::laplacian(DiGraph::from_weights(w))),
              2.0 * n, 1e-12);
  EXPECT_EQ(code_of([] { switching::lambda_min_symmetric_part(Matrix::Zero(1, 1)); }),
            ErrorCode::InvalidDimension);
}

TEST(SpeedBoundTest, DefaultPair) {
  const CompanionSystem cs = benchmark_target();
  const MarkovTopology mt = testing::default_switching();
  const double bound = switching::speed_bound(mt, synthesis::rank_one_gain(cs, 1, 1, 1), cs);
  EXPECT_NEAR(bound, 0.5 * (2.0 - 2.0 * std::cos(2.0 * std::numbers::pi / 5.0)), 1e-12);
  EXPECT_NEAR(bound, 0.6910, 1e-4);
  const double doubled = switching::speed_bound(mt, synthesis::rank_one_gain(cs, 2, 1, 1), cs);
  EXPECT_NEAR(doubled, 2.0 * bound, 1e-12);
}

TEST(SpeedBoundTest, SingleModeHasNoStationaryDiscount) {
  const CompanionSystem cs = benchmark_target();
  const DiGraph g = graph::directed_cycle(4);
  const MarkovTopology mt = switching::make_topology({g}, Matrix::Zero(1, 1));
  const ConsensusGain gain = synthesis::rank_one_gain(cs, 0.7, 2.0, 0.5);
  const double expected = 0.7 * std::sqrt(2.0 * 0.5) * cs.B.dot(cs.nu) *
                          switching::lambda_min_symmetric_part(graph::laplacian(g));
  EXPECT_NEAR(switching::speed_bound(mt, gain, cs), expected, 1e-12);
}

TEST(SpeedBoundTest, MonotoneInGainParameters) {
  const CompanionSystem cs = benchmark_target();
  const MarkovTopology mt = testing::default_switching();
  double last = 0.0;
  for (double x : {0.01, 0.1, 0.5, 1.0, 3.0, 10.0}) {
    const double by_mu = switching::speed_bound(mt, synthesis::rank_one_gain(cs, x, 1, 1), cs);
    const double by_q1 = switching::speed_bound(mt, synthesis::rank_one_gain(cs, 1, x, 1), cs);
    const double by_r = switching::speed_bound(mt, synthesis::rank_one_gain(cs, 1, 1, x), cs);
    EXPECT_GE(by_mu, last);
    EXPECT_NEAR(by_q1, by_r, 1e-12);
    last = by_mu;
  }
}

TEST(SpeedBoundTest, BalancedAdditionsNeverDecreaseLambdaMin) {
  // A single directed edge can lower the bound; a bidirectional pair adds a
  // PSD term to L + L^T and cannot.
  for (int n = 2; n <= 4; ++n) {
    const unsigned slots = n * (n - 1);
    for (unsigned mask = 0; mask < (1u << slots); ++mask) {
      const DiGraph g = testing::graph_from_mask(n, mask);
      if (!graph::is_balanced(g)) continue;
      const Matrix w = graph::laplacian(g).diagonal().asDiagonal().toDenseMatrix() -
                       graph::laplacian(g);
      const double base = switching::lambda_min_symmetric_part(graph::laplacian(g));
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          Matrix w2 = w;
          w2(i, j) += 1.0;
          w2(j, i) += 1.0;
          const double after =
              switching::lambda_min_symmetric_part(graph::laplacian(DiGraph::from_weights(w2)));
          EXPECT_GE(after, base - 1e-12) << "n=" << n << " mask=" << mask;
        }
      }
    }
  }
}

TEST(SpeedBoundTest, Errors) {
  const CompanionSystem cs = benchmark_target();
  const MarkovTopology mt = testing::default_switching();
  const ConsensusGain full = synthesis::full_gain(cs, 1.0, Matrix::Identity(3, 3), 1.0);
  EXPECT_EQ(code_of([&] { switching::speed_bound(mt, full, cs); }), ErrorCode::NotRankOne);
  const Edge path[] = {{1, 2, 1.0}, {2, 3, 1.0}};
  const MarkovTopology unbalanced =
      switching::make_topology({DiGraph::from_edges(3, path)}, Matrix::Zero(1, 1));
  EXPECT_EQ(code_of([&] {
              switching::speed_bound(unbalanced, synthesis::rank_one_gain(cs, 1, 1, 1), cs);
            }),
            ErrorCode::A4Violated);
}

TEST(MeanLaplacianTest, StationaryAverage) {
  Matrix q(2, 2);
  q << -2, 2, 1, -1;
  const DiGraph g1 = graph::default_switching_first(), g2 = graph::default_switching_second();
  const MarkovTopology mt = switching::make_topology({g1, g2}, q);
  const Matrix expected =
      graph::laplacian(g1) / 3.0 + 2.0 * graph::laplacian(g2) / 3.0;
  EXPECT_LE((switching::mean_laplacian(mt) - expected).norm(), 1e-12);
}

TEST(MakeTopologyTest, RejectsInconsistentInput) {
  Matrix q(2, 2);
  q << -1, 1, 1, -1;
  EXPECT_THROW(switching::make_topology({DiGraph(3)}, q), Error);
  EXPECT_THROW(switching::make_topology({DiGraph(3), DiGraph(4)}, q), Error);
  EXPECT_THROW(switching::make_topology({}, Matrix::Zero(0, 0)), Error);
}

}  // namespace
}  // namespace hetcons
