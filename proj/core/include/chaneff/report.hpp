#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chaneff/metrics.hpp"
#include "chaneff/stimulus.hpp"

namespace chaneff::report {

using stimulus::ChannelId;

struct RunMetadata {
  std::string tool_version;
  std::string backend;
  std::string model_id;
  bool normalize = false;
  stimulus::RenderConfig render;
  std::size_t steps = 0;
  std::optional<std::size_t> factorial_steps;
  /// "auto" or the explicit sigma.
  std::string sigma_mode = "auto";
  double peak_threshold = metrics::kDefaultPeakThreshold;
  double tie_epsilon = metrics::kDefaultTieEpsilon;
  std::string padding = "reflect";
  std::vector<ChannelId> channels;
  bool complete = true;
  std::vector<std::string> errors;

  friend bool operator==(const RunMetadata&, const RunMetadata&) = default;
};

/// Linearity of every cell of one channel's factorial design.
struct FactorialSummary {
  ChannelId channel = ChannelId::Length;
  std::size_t steps = 0;
  /// Indexed by cell; cells whose sweep had zero variance are listed in
  /// degenerate_cells and excluded from cell_scores and stats.
  std::vector<double> cell_scores;
  std::vector<std::size_t> degenerate_cells;
  metrics::BoxStats stats;

  friend bool operator==(const FactorialSummary&, const FactorialSummary&) = default;
};

struct RankingComparison {
  metrics::ChannelRanking model;
  /// Human order restricted to the channels in `model`.
  metrics::ChannelRanking human;
  /// Absent when a ranking is entirely tied.
  std::optional<double> tau_b;

  friend bool operator==(const RankingComparison&, const RankingComparison&) = default;
};

struct RunReport {
  RunMetadata meta;
  std::vector<metrics::LinearityResult> linearity;
  std::vector<FactorialSummary> factorial;
  std::vector<metrics::DistanceProfile> discriminability;
  std::optional<RankingComparison> linearity_ranking;
  std::optional<RankingComparison> factorial_ranking;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

/// nullopt for fewer than two channels.
std::optional<RankingComparison> compare_to_human(const std::map<ChannelId, double>& scores,
                                                  double tie_epsilon);

/// Recomputes both ranking comparisons from the linearity scores and the
/// factorial medians.
void finalize_rankings(RunReport& report);

/// Concatenates partial reports (e.g. one per analyzed channel). Metadata
/// comes from the first; per-channel entries are ordered by channel and a
/// later duplicate replaces an earlier one. Rankings are recomputed.
RunReport merge_reports(std::span<const RunReport> parts);

inline constexpr std::string_view kReportSchema = "chaneff.report";
inline constexpr int kReportVersion = 1;

/// Single JSON object with "schema" and "version" fields. Doubles keep full
/// round-trip precision.
std::string to_json(const RunReport& report);
/// Throws ParseError.
RunReport parse_report_json(std::string_view text);
RunReport load_report(const std::filesystem::path& path);

/// linearity.csv, box_stats.csv, distances.csv, peaks.csv and report.json.
/// CSVs are UTF-8 with LF line endings and floats printed with 9
/// significant digits.
std::vector<std::filesystem::path> emit_tables(const RunReport& report,
                                               const std::filesystem::path& out_dir);

/// distance_<channel>.svg per profile, linearity_bar.svg and factorial_box.svg.
std::vector<std::filesystem::path> emit_figures(const RunReport& report,
                                                const std::filesystem::path& out_dir);

std::string distance_plot_svg(const metrics::DistanceProfile& profile);
std::string linearity_bar_svg(const RunReport& report);
std::string factorial_box_svg(const RunReport& report);

/// Horizontal value axis shared by the bar and box charts: score v in [0, 1]
/// is drawn at x = kScoreAxisLeft + v * kScoreAxisWidth.
inline constexpr double kScoreAxisLeft = 160.0;
inline constexpr double kScoreAxisWidth = 440.0;

}  // namespace chaneff::report
