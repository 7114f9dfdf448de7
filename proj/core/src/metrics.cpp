#include "chaneff/metrics.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

#include "chaneff/error.hpp"

namespace chaneff::metrics {

namespace {

std::size_t uniform_dim(const Rows& rows) {
  const std::size_t dim = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != dim) {
      throw DomainError("dimension mismatch: rows of length " + std::to_string(dim) +
                        " and " + std::to_string(r.size()));
    }
  }
  if (dim == 0) throw DomainError("embeddings have zero dimension");
  return dim;
}

constexpr double kMinTotalVariance = 1e-12;

}  // namespace

Rows to_rows(std::span<const embedding::EmbeddingVector> embeddings) {
  Rows rows;
  rows.reserve(embeddings.size());
  for (const auto& e : embeddings) rows.emplace_back(e.values.begin(), e.values.end());
  return rows;
}

double explained_variance_ratio(const Rows& rows) {
  if (rows.size() < 3) {
    throw DomainError("linearity needs at least 3 embeddings");
  }
  const std::size_t n = rows.size();
  const std::size_t dim = uniform_dim(rows);

  Eigen::MatrixXd x(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) x(i, j) = rows[i][j];
  }
  x.rowwise() -= x.colwise().mean();

  const double scale = 1.0 / static_cast<double>(n - 1);
  const double total = x.squaredNorm() * scale;
  if (!(total >= kMinTotalVariance)) {
    throw DegenerateError("degenerate sweep: zero variance");
  }
  // The non-zero spectrum of X^T X equals that of X X^T; decompose the
  // smaller of the two.
  const Eigen::MatrixXd gram = dim <= n ? Eigen::MatrixXd(x.transpose() * x * scale)
                                        : Eigen::MatrixXd(x * x.transpose() * scale);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw DegenerateError("eigen decomposition did not converge");
  }
  const double largest = solver.eigenvalues().maxCoeff();
  return std::clamp(largest / total, 0.0, 1.0);
}

LinearityResult linearity(ChannelId channel, const Rows& rows) {
  LinearityResult r;
  r.channel = channel;
  r.score = explained_variance_ratio(rows);
  r.n = rows.size();
  r.dim = rows.front().size();
  return r;
}

LinearityResult linearity(ChannelId channel,
                          std::span<const embedding::EmbeddingVector> embeddings) {
  return linearity(channel, to_rows(embeddings));
}

std::vector<double> consecutive_distances(const Rows& rows) {
  if (rows.size() < 2) {
    throw DomainError("consecutive distances need at least 2 embeddings");
  }
  const std::size_t dim = uniform_dim(rows);
  std::vector<double> d(rows.size() - 1);
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      const double diff = rows[i + 1][k] - rows[i][k];
      sum += diff * diff;
    }
    d[i] = std::sqrt(sum);
  }
  return d;
}

int auto_sigma(std::size_t n) {
  if (n < 2) throw DomainError("auto_sigma needs n >= 2");
  auto s = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  while (s * s > n) --s;
  while ((s + 1) * (s + 1) <= n) ++s;
  // (s + 1/2)^2 = s^2 + s + 1/4, so this rounds sqrt(n) to nearest.
  if (n - s * s > s) ++s;
  return static_cast<int>(s);
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw DomainError("gaussian sigma must be positive");
  }
  const auto radius = static_cast<std::size_t>(std::floor(4.0 * sigma + 0.5));
  std::vector<double> w(2 * radius + 1);
  const double denom = 2.0 * sigma * sigma;
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double k = static_cast<double>(i) - static_cast<double>(radius);
    w[i] = std::exp(-k * k / denom);
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

std::vector<double> smooth(std::span<const double> signal, double sigma) {
  if (signal.empty()) throw DomainError("cannot smooth an empty signal");
  const std::vector<double> w = gaussian_kernel(sigma);
  const auto n = static_cast<long long>(signal.size());
  const auto radius = static_cast<long long>(w.size() / 2);
  const long long period = 2 * n;
  auto reflect = [&](long long j) {
    long long m = j % period;
    if (m < 0) m += period;
    return m < n ? m : period - 1 - m;
  };
  std::vector<double> out(signal.size());
  for (long long i = 0; i < n; ++i) {
    double acc = 0.0;
    for (long long k = -radius; k <= radius; ++k) {
      acc += w[static_cast<std::size_t>(k + radius)] *
             signal[static_cast<std::size_t>(reflect(i + k))];
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

PeakSet detect_peaks(std::span<const double> signal, double threshold_frac) {
  if (signal.size() < 3) throw DomainError("peak detection needs at least 3 samples");
  if (!(threshold_frac > 0.0 && threshold_frac < 1.0)) {
    throw DomainError("threshold_frac must lie in (0, 1)");
  }
  PeakSet peaks;
  peaks.threshold_frac = threshold_frac;
  const auto [lo, hi] = std::minmax_element(signal.begin(), signal.end());
  const double range = *hi - *lo;
  if (range <= 0.0) return peaks;

  const std::size_t n = signal.size();
  std::size_t i = 1;
  while (i + 1 < n) {
    if (signal[i - 1] < signal[i]) {
      std::size_t ahead = i + 1;
      while (ahead + 1 < n && signal[ahead] == signal[i]) ++ahead;
      if (signal[ahead] < signal[i]) {
        const std::size_t peak = (i + ahead - 1) / 2;
        const double height = signal[peak];
        double left_min = height;
        for (std::size_t j = peak + 1; j-- > 0;) {
          if (signal[j] > height) break;
          left_min = std::min(left_min, signal[j]);
        }
        double right_min = height;
        for (std::size_t j = peak; j < n; ++j) {
          if (signal[j] > height) break;
          right_min = std::min(right_min, signal[j]);
        }
        const double prominence = height - std::max(left_min, right_min);
        if (prominence > 0.0 && prominence >= threshold_frac * range) {
          peaks.indices.push_back(peak);
          peaks.prominences.push_back(prominence);
        }
        i = ahead;
        continue;
      }
    }
    ++i;
  }
  return peaks;
}

DistanceProfile distance_profile(ChannelId channel, const Rows& rows, double sigma,
                                 double threshold_frac) {
  DistanceProfile p;
  p.channel = channel;
  p.sigma = sigma > 0.0 ? sigma : static_cast<double>(auto_sigma(rows.size()));
  p.raw = consecutive_distances(rows);
  p.smoothed = smooth(p.raw, p.sigma);
  if (p.smoothed.size() >= 3) {
    p.peaks = detect_peaks(p.smoothed, threshold_frac);
  } else {
    p.peaks.threshold_frac = threshold_frac;
  }
  return p;
}

// --- rankings ------------------------------------------------------------------

std::vector<ChannelId> ChannelRanking::channels() const {
  std::vector<ChannelId> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.channel);
  return out;
}

ChannelRanking ChannelRanking::restricted_to(std::span<const ChannelId> keep) const {
  ChannelRanking out;
  std::size_t group = 0;
  std::optional<std::size_t> previous;
  for (const auto& e : entries) {
    if (std::find(keep.begin(), keep.end(), e.channel) == keep.end()) continue;
    if (previous && *previous != e.group) ++group;
    previous = e.group;
    out.entries.push_back({e.channel, e.score, group});
  }
  return out;
}

ChannelRanking rank_channels(const std::map<ChannelId, double>& scores, double tie_epsilon) {
  if (scores.size() < 2) throw DomainError("ranking needs at least 2 channels");
  ChannelRanking ranking;
  for (const auto& [channel, score] : scores) ranking.entries.push_back({channel, score, 0});
  std::stable_sort(ranking.entries.begin(), ranking.entries.end(),
                   [](const RankedChannel& a, const RankedChannel& b) {
                     return a.score > b.score;
                   });
  // Slack absorbs representation error in differences such as 0.60 - 0.59.
  const double slack = 1e-12;
  double leader = ranking.entries.front().score;
  std::size_t group = 0;
  for (auto& e : ranking.entries) {
    if (leader - e.score > tie_epsilon + slack) {
      ++group;
      leader = e.score;
    }
    e.group = group;
  }
  return ranking;
}

ChannelRanking human_ranking() {
  ChannelRanking r;
  std::size_t g = 0;
  for (ChannelId c : stimulus::kAllChannels) {
    r.entries.push_back({c, static_cast<double>(stimulus::kAllChannels.size() - g), g});
    ++g;
  }
  return r;
}

double kendall_tau_b(const ChannelRanking& a, const ChannelRanking& b) {
  std::vector<ChannelId> ca = a.channels();
  std::vector<ChannelId> cb = b.channels();
  std::sort(ca.begin(), ca.end());
  std::sort(cb.begin(), cb.end());
  if (ca != cb || std::adjacent_find(ca.begin(), ca.end()) != ca.end()) {
    throw DomainError("kendall tau-b needs rankings over the same channel set");
  }
  auto group_of = [](const ChannelRanking& r, ChannelId c) {
    for (const auto& e : r.entries) {
      if (e.channel == c) return static_cast<long long>(e.group);
    }
    return -1LL;
  };
  long long concordant = 0, discordant = 0, ties_a = 0, ties_b = 0, pairs = 0;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    for (std::size_t j = i + 1; j < ca.size(); ++j) {
      const long long da = group_of(a, ca[i]) - group_of(a, ca[j]);
      const long long db = group_of(b, ca[i]) - group_of(b, ca[j]);
      ++pairs;
      if (da == 0) ++ties_a;
      if (db == 0) ++ties_b;
      if (da * db > 0) ++concordant;
      if (da * db < 0) ++discordant;
    }
  }
  const double denom = std::sqrt(static_cast<double>(pairs - ties_a) *
                                 static_cast<double>(pairs - ties_b));
  if (denom == 0.0) {
    throw DomainError("kendall tau-b is undefined when a ranking is entirely tied");
  }
  return static_cast<double>(concordant - discordant) / denom;
}

BoxStats box_stats(std::span<const double> values) {
  if (values.empty()) throw DomainError("box statistics need at least one value");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
  };
  return {v.front(), quantile(0.25), quantile(0.5), quantile(0.75), v.back()};
}

}  // namespace chaneff::metrics
