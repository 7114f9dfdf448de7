#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "chaneff/embedding.hpp"
#include "chaneff/stimulus.hpp"

namespace chaneff::metrics {

using stimulus::ChannelId;

/// Row-major sample set: one row per embedding.
using Rows = std::vector<std::vector<double>>;

Rows to_rows(std::span<const embedding::EmbeddingVector> embeddings);

// --- accuracy: PC1 linearity ---------------------------------------------------

struct LinearityResult {
  ChannelId channel = ChannelId::Length;
  double score = 0.0;
  std::size_t n = 0;
  std::size_t dim = 0;

  friend bool operator==(const LinearityResult&, const LinearityResult&) = default;
};

/// Fraction of total variance on the first principal component: the largest
/// eigenvalue of the sample covariance (1/(n-1)) over its trace. Order
/// independent. Throws DomainError for n < 3 or ragged rows, DegenerateError
/// ("degenerate sweep: zero variance") when the total variance is below 1e-12.
double explained_variance_ratio(const Rows& rows);

LinearityResult linearity(ChannelId channel, const Rows& rows);
LinearityResult linearity(ChannelId channel,
                          std::span<const embedding::EmbeddingVector> embeddings);

// --- discriminability ------------------------------------------------------------

/// d[i] = ||e[i+1] - e[i]||_2. Throws DomainError for n < 2 or ragged rows.
std::vector<double> consecutive_distances(const Rows& rows);

/// sqrt(n) rounded to the nearest integer; 1000 samples give 32.
int auto_sigma(std::size_t n);

/// Normalized Gaussian weights on [-R, R] with R = floor(4*sigma + 0.5);
/// element R is the centre.
std::vector<double> gaussian_kernel(double sigma);

/// Convolution with gaussian_kernel(sigma) under half-sample symmetric
/// padding (... c b a | a b c ... | c b a ...), repeated as often as the kernel
/// needs. Output has the input's length.
std::vector<double> smooth(std::span<const double> signal, double sigma);

inline constexpr double kDefaultPeakThreshold = 0.05;

struct PeakSet {
  std::vector<std::size_t> indices;
  std::vector<double> prominences;
  double threshold_frac = kDefaultPeakThreshold;

  std::size_t count() const { return indices.size(); }
  /// Peaks split the range into count()+1 regions.
  std::size_t regions() const { return indices.size() + 1; }

  friend bool operator==(const PeakSet&, const PeakSet&) = default;
};

/// Strict local maxima (plateaus collapse to their left-middle index, edges
/// excluded) whose prominence is at least threshold_frac * (max - min).
/// A constant signal yields no peaks.
PeakSet detect_peaks(std::span<const double> signal,
                     double threshold_frac = kDefaultPeakThreshold);

struct DistanceProfile {
  ChannelId channel = ChannelId::Length;
  double sigma = 1.0;
  std::vector<double> raw;
  std::vector<double> smoothed;
  PeakSet peaks;

  friend bool operator==(const DistanceProfile&, const DistanceProfile&) = default;
};

/// raw distances -> smoothed -> peaks. sigma <= 0 selects auto_sigma(n).
DistanceProfile distance_profile(ChannelId channel, const Rows& rows, double sigma = 0.0,
                                 double threshold_frac = kDefaultPeakThreshold);

// --- rankings ------------------------------------------------------------------

inline constexpr double kDefaultTieEpsilon = 0.01;

struct RankedChannel {
  ChannelId channel = ChannelId::Length;
  double score = 0.0;
  /// 0 for the best group; tied channels share a group.
  std::size_t group = 0;

  friend bool operator==(const RankedChannel&, const RankedChannel&) = default;
};

struct ChannelRanking {
  std::vector<RankedChannel> entries;

  std::size_t group_count() const {
    return entries.empty() ? 0 : entries.back().group + 1;
  }
  std::vector<ChannelId> channels() const;
  /// Keeps only `keep`, renumbering groups densely.
  ChannelRanking restricted_to(std::span<const ChannelId> keep) const;

  friend bool operator==(const ChannelRanking&, const ChannelRanking&) = default;
};

/// Descending by score (ties in score broken by channel order). A channel
/// joins the current group when it is within tie_epsilon of the group's
/// leading score. Throws DomainError for fewer than 2 channels.
ChannelRanking rank_channels(const std::map<ChannelId, double>& scores,
                             double tie_epsilon = kDefaultTieEpsilon);

/// Human accuracy order: length, tilt, area, luminance, saturation, curvature.
ChannelRanking human_ranking();

/// Kendall tau-b over all channel pairs using group positions. Throws
/// DomainError when the channel sets differ or a ranking is entirely tied.
double kendall_tau_b(const ChannelRanking& a, const ChannelRanking& b);

// --- box statistics --------------------------------------------------------------

struct BoxStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;

  friend bool operator==(const BoxStats&, const BoxStats&) = default;
};

/// Quartiles by linear interpolation between order statistics; whiskers are
/// the true extremes. Throws DomainError on empty input.
BoxStats box_stats(std::span<const double> values);

}  // namespace chaneff::metrics
