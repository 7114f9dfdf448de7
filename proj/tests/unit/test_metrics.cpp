#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "chaneff/error.hpp"
#include "chaneff/metrics.hpp"
#include "oracles.hpp"

using namespace chaneff;
using metrics::Rows;
using stimulus::ChannelId;

namespace {

Rows circle_rows(std::size_t steps) {
  Rows rows;
  for (std::size_t j = 0; j < steps; ++j) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(steps - 1);
    rows.push_back({std::cos(a), std::sin(a), 0.0});
  }
  return rows;
}

Rows transform_rows(const Rows& rows, const Eigen::MatrixXd& q) {
  Rows out;
  for (const auto& r : rows) {
    const Eigen::VectorXd v = q * Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
    out.emplace_back(v.data(), v.data() + v.size());
  }
  return out;
}

Eigen::MatrixXd random_orthogonal(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = g(rng);
  return Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
}

}  // namespace

// --- linearity ---------------------------------------------------------------

TEST(Linearity, MatchesJacobiOracleOnRandomFixtures) {
  std::mt19937_64 rng(7);
  const std::pair<std::size_t, std::size_t> shapes[] = {{5, 3}, {40, 8}, {12, 64}, {200, 16}, {30, 128}};
  for (auto [n, d] : shapes) {
    const Rows rows = oracle::anisotropic_rows(rng, n, d);
    EXPECT_NEAR(metrics::explained_variance_ratio(rows), oracle::linearity(rows), 1e-9)
        << n << "x" << d;
  }
}

TEST(Linearity, CollinearPointsScoreOne) {
  Rows rows;
  for (int i = 0; i < 50; ++i) {
    const double s = 0.3 * i - 2.0;
    rows.push_back({1.0 + 2.0 * s, -3.0 + 0.5 * s, 4.0, 7.0 - s});
  }
  EXPECT_NEAR(metrics::explained_variance_ratio(rows), 1.0, 1e-9);
}

TEST(Linearity, CircleIsHalf) {
  EXPECT_NEAR(metrics::explained_variance_ratio(circle_rows(1000)), 0.5, 1e-3);
  // Closed grid repeats its first point, so short sweeps sit slightly above 0.5.
  EXPECT_NEAR(metrics::explained_variance_ratio(circle_rows(200)), 0.502487562, 1e-6);
}

TEST(Linearity, ZeroVarianceIsDegenerate) {
  const Rows rows(10, std::vector<double>(4, 0.5));
  try {
    metrics::explained_variance_ratio(rows);
    FAIL() << "expected DegenerateError";
  } catch (const DegenerateError& e) {
    EXPECT_STREQ(e.what(), "degenerate sweep: zero variance");
  }
}

TEST(Linearity, RejectsTooFewOrRaggedRows) {
  EXPECT_THROW(metrics::explained_variance_ratio({{1.0}, {2.0}}), DomainError);
  EXPECT_THROW(metrics::explained_variance_ratio({{1.0, 2.0}, {2.0}, {3.0, 1.0}}), DomainError);
}

TEST(Linearity, InvariantUnderPermutationRotationScaleAndShift) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Rows rows = oracle::anisotropic_rows(rng, 60, 6);
    const double base = metrics::explained_variance_ratio(rows);

    Rows perm = rows;
    std::shuffle(perm.begin(), perm.end(), rng);
    EXPECT_NEAR(metrics::explained_variance_ratio(perm), base, 1e-9);

    EXPECT_NEAR(metrics::explained_variance_ratio(transform_rows(rows, random_orthogonal(rng, 6))), base,
                1e-9);

    Rows scaled = rows;
    for (auto& r : scaled)
      for (double& v : r) v = -3.5 * v + 11.0;
    EXPECT_NEAR(metrics::explained_variance_ratio(scaled), base, 1e-9);
  }
}

TEST(Linearity, ResultCarriesShape) {
  const auto r = metrics::linearity(ChannelId::Tilt, circle_rows(10));
  EXPECT_EQ(r.channel, ChannelId::Tilt);
  EXPECT_EQ(r.n, 10u);
  EXPECT_EQ(r.dim, 3u);
}

// --- distances and smoothing ----------------------------------------------------

TEST(Distances, MatchOracleAndProperties) {
  std::mt19937_64 rng(3);
  const Rows rows = oracle::random_rows(rng, 100, 12);
  const auto d = metrics::consecutive_distances(rows);
  const auto ref = oracle::distances(rows);
  ASSERT_EQ(d.size(), 99u);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_NEAR(d[i], ref[i], 1e-12);
    EXPECT_GE(d[i], 0.0);
  }
  Rows moved = rows;
  for (auto& r : moved)
    for (double& v : r) v = 2.5 * v + 100.0;
  const auto d2 = metrics::consecutive_distances(moved);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(d2[i], 2.5 * d[i], 1e-9);
}

TEST(Smoothing, AutoSigma) {
  EXPECT_EQ(metrics::auto_sigma(1000), 32);
  EXPECT_EQ(metrics::auto_sigma(1024), 32);
  EXPECT_EQ(metrics::auto_sigma(1023), 32);
  EXPECT_EQ(metrics::auto_sigma(992), 31);  // 31.4960...
  EXPECT_EQ(metrics::auto_sigma(993), 32);  // 31.5119...
  EXPECT_EQ(metrics::auto_sigma(200), 14);
  EXPECT_EQ(metrics::auto_sigma(12), 3);
}

TEST(Smoothing, KernelShape) {
  const auto w = metrics::gaussian_kernel(32.0);
  ASSERT_EQ(w.size(), 257u);
  EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-15);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_DOUBLE_EQ(w[i], w[w.size() - 1 - i]);
  EXPECT_EQ(metrics::gaussian_kernel(1.0).size(), 9u);
}

TEST(Smoothing, FrozenReflectValues) {
  const std::vector<double> ramp{0, 1, 2, 3, 4};
  const auto s = metrics::smooth(ramp, 1.0);
  const double expected[] = {0.42704095, 1.06782203, 2.0, 2.93217797, 3.57295905};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(s[i], expected[i], 1e-8);

  const std::vector<double> impulse{0, 0, 0, 1, 0, 0, 0, 0};
  const auto t = metrics::smooth(impulse, 1.5);
  const double expected2[] = {0.04359175, 0.11036937, 0.21305675, 0.26596426,
                              0.21296753, 0.10934117, 0.03608357, 0.0086256};
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(t[i], expected2[i], 1e-8);
}

TEST(Smoothing, MatchesNaiveOracleWhenKernelExceedsSignal) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t n : {3u, 7u, 50u, 999u}) {
    std::vector<double> x(n);
    for (double& v : x) v = u(rng);
    for (double sigma : {0.5, 3.0, 32.0}) {
      const auto s = metrics::smooth(x, sigma);
      const auto ref = oracle::smooth(x, sigma);
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(s[i], ref[i], 1e-12) << n << " " << sigma;
    }
  }
}

TEST(Smoothing, PreservesMeanAndSign) {
  std::mt19937_64 rng(9);
  std::exponential_distribution<double> e(2.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(300 + 17 * trial);
    for (double& v : x) v = e(rng);
    const auto s = metrics::smooth(x, 1.0 + trial);
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    const double ms = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    EXPECT_NEAR(ms, mx, 1e-9);
    EXPECT_GE(*std::min_element(s.begin(), s.end()), 0.0);
  }
}

// --- peaks ---------------------------------------------------------------------

TEST(Peaks, FrozenPlateauAndProminence) {
  const std::vector<double> x{0, 1, 0, 2, 2, 2, 0, 3, 1};
  const auto p = metrics::detect_peaks(x, 0.05);
  EXPECT_EQ(p.indices, (std::vector<std::size_t>{1, 4, 7}));
  EXPECT_EQ(p.prominences, (std::vector<double>{1, 2, 2}));
  EXPECT_EQ(p.regions(), 4u);

  const std::vector<double> y{1, 3, 2, 5, 4, 4, 6, 0, 2, 1};
  const auto q = metrics::detect_peaks(y, 0.05);
  EXPECT_EQ(q.indices, (std::vector<std::size_t>{1, 3, 6, 8}));
  EXPECT_EQ(q.prominences, (std::vector<double>{1, 1, 5, 1}));
  // 0.2 of the range (1.2) removes the three unit-prominence peaks.
  EXPECT_EQ(metrics::detect_peaks(y, 0.2).indices, (std::vector<std::size_t>{6}));
}

TEST(Peaks, ConstantAndMonotoneSignalsHaveNone) {
  EXPECT_EQ(metrics::detect_peaks(std::vector<double>(20, 1.5)).count(), 0u);
  std::vector<double> ramp(20);
  std::iota(ramp.begin(), ramp.end(), 0.0);
  EXPECT_EQ(metrics::detect_peaks(ramp).count(), 0u);
  EXPECT_EQ(metrics::detect_peaks(ramp).regions(), 1u);
}

TEST(Peaks, MatchBruteForceOnRandomSignals) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> level(0, 6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(40);
    for (double& v : x) v = level(rng);  // coarse levels force plateaus
    const auto p = metrics::detect_peaks(x, 0.1);
    const auto ref = oracle::peaks(x, 0.1);
    ASSERT_EQ(p.count(), ref.size()) << trial;
    for (std::size_t k = 0; k < ref.size(); ++k) {
      EXPECT_EQ(p.indices[k], ref[k].index);
      EXPECT_DOUBLE_EQ(p.prominences[k], ref[k].prominence);
    }
  }
}

TEST(Peaks, InvariantUnderShiftAndPositiveAffine) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(120);
    for (double& v : x) v = g(rng);
    const auto s = metrics::smooth(x, 2.0);
    const auto base = metrics::detect_peaks(s);
    std::vector<double> shifted(s), affine(s);
    for (double& v : shifted) v += 1000.0 * g(rng);
    const double a = std::exp(g(rng)), b = g(rng);
    for (double& v : affine) v = a * v + b;
    // Shifts by a constant change rounding; compare indices only.
    EXPECT_EQ(metrics::detect_peaks(affine).indices, base.indices);
    const double c = 0.25;
    std::vector<double> exact(s);
    for (double& v : exact) v += c;
    EXPECT_EQ(metrics::detect_peaks(exact).indices, base.indices);
  }
}

TEST(Peaks, RejectsBadInput) {
  EXPECT_THROW(metrics::detect_peaks(std::vector<double>{1, 2}), DomainError);
  EXPECT_THROW(metrics::detect_peaks(std::vector<double>{1, 2, 1}, 0.0), DomainError);
  EXPECT_THROW(metrics::detect_peaks(std::vector<double>{1, 2, 1}, 1.0), DomainError);
}

TEST(DistanceProfile, AutoSigmaUsesSampleCount) {
  Rows rows;
  for (int i = 0; i < 1000; ++i) rows.push_back({0.001 * i * i});
  const auto p = metrics::distance_profile(ChannelId::Length, rows);
  EXPECT_EQ(p.sigma, 32.0);
  EXPECT_EQ(p.raw.size(), 999u);
  EXPECT_EQ(p.smoothed.size(), 999u);
  EXPECT_EQ(p.peaks.count(), 0u);
  EXPECT_EQ(metrics::distance_profile(ChannelId::Length, rows, 4.0).sigma, 4.0);
}

// --- rankings ------------------------------------------------------------------

TEST(Ranking, TiesGroupAgainstLeader) {
  const auto r = metrics::rank_channels({{ChannelId::Length, 0.70},
                                         {ChannelId::Tilt, 0.695},
                                         {ChannelId::Area, 0.689},
                                         {ChannelId::Luminance, 0.60}},
                                        0.01);
  ASSERT_EQ(r.entries.size(), 4u);
  EXPECT_EQ(r.entries[0].channel, ChannelId::Length);
  EXPECT_EQ(r.entries[1].group, 0u);
  EXPECT_EQ(r.entries[2].group, 1u);  // 0.011 from the leader
  EXPECT_EQ(r.entries[3].group, 2u);
  EXPECT_EQ(r.group_count(), 3u);
}

TEST(Ranking, EpsilonBoundaryCountsAsTie) {
  const auto r = metrics::rank_channels({{ChannelId::Tilt, 0.60}, {ChannelId::Luminance, 0.59}}, 0.01);
  EXPECT_EQ(r.entries[1].group, 0u);
}

TEST(Ranking, HumanOrder) {
  const auto h = metrics::human_ranking();
  ASSERT_EQ(h.entries.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(h.entries[i].channel, stimulus::kAllChannels[i]);
    EXPECT_EQ(h.entries[i].group, i);
  }
}

TEST(Ranking, FrozenTauForReorderedModel) {
  const auto model = metrics::rank_channels({{ChannelId::Saturation, 0.9},
                                             {ChannelId::Curvature, 0.8},
                                             {ChannelId::Length, 0.7},
                                             {ChannelId::Tilt, 0.6},
                                             {ChannelId::Luminance, 0.6}},
                                            0.01);
  const auto human = metrics::human_ranking().restricted_to(model.channels());
  const double tau = metrics::kendall_tau_b(model, human);
  EXPECT_NEAR(tau, -0.31622776601683794, 1e-12);
  // channel order L T Lum Sat C; positions: model groups vs human groups
  EXPECT_NEAR(tau, oracle::tau_b({2, 3, 3, 0, 1}, {0, 1, 2, 3, 4}), 1e-15);
  EXPECT_DOUBLE_EQ(metrics::kendall_tau_b(human, human), 1.0);
}

TEST(Ranking, TauMatchesBruteForce) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> g(0, 3);
  for (int trial = 0; trial < 50; ++trial) {
    std::map<ChannelId, double> sa, sb;
    std::vector<int> ga, gb;
    for (ChannelId c : stimulus::kAllChannels) {
      sa[c] = g(rng);
      sb[c] = g(rng);
    }
    const auto ra = metrics::rank_channels(sa, 0.0);
    const auto rb = metrics::rank_channels(sb, 0.0);
    if (ra.group_count() < 2 || rb.group_count() < 2) continue;
    for (ChannelId c : stimulus::kAllChannels) {
      ga.push_back(-static_cast<int>(sa[c]));
      gb.push_back(-static_cast<int>(sb[c]));
    }
    EXPECT_NEAR(metrics::kendall_tau_b(ra, rb), oracle::tau_b(ga, gb), 1e-12);
  }
}

TEST(Ranking, ErrorsOnDegenerateInput) {
  EXPECT_THROW(metrics::rank_channels({{ChannelId::Length, 1.0}}), DomainError);
  const auto tied = metrics::rank_channels({{ChannelId::Length, 0.5}, {ChannelId::Tilt, 0.5}});
  const auto human = metrics::human_ranking().restricted_to(tied.channels());
  EXPECT_THROW(metrics::kendall_tau_b(tied, human), DomainError);
  EXPECT_THROW(metrics::kendall_tau_b(tied, metrics::human_ranking()), DomainError);
}

// --- box statistics -----------------------------------------------------------------

TEST(BoxStats, LinearQuantiles) {
  const std::vector<double> v{4, 1, 3, 2};
  const auto s = metrics::box_stats(v);
  EXPECT_DOUBLE_EQ(s.min, 1.0);
  EXPECT_DOUBLE_EQ(s.q1, 1.75);
  EXPECT_DOUBLE_EQ(s.median, 2.5);
  EXPECT_DOUBLE_EQ(s.q3, 3.25);
  EXPECT_DOUBLE_EQ(s.max, 4.0);
  const auto one = metrics::box_stats(std::vector<double>{0.3});
  EXPECT_EQ(one.q1, 0.3);
  EXPECT_THROW(metrics::box_stats(std::vector<double>{}), DomainError);
}

TEST(BoxStats, UniformSample) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(10000);
  for (double& x : v) x = u(rng);
  const auto s = metrics::box_stats(v);
  EXPECT_NEAR(s.q1, 0.25, 0.02);
  EXPECT_NEAR(s.median, 0.5, 0.02);
  EXPECT_NEAR(s.q3, 0.75, 0.02);
}
