#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "chaneff/stimulus.hpp"

namespace chaneff::experiment {

using stimulus::ChannelId;
using stimulus::RenderConfig;
using stimulus::StimulusParams;

inline constexpr std::size_t kDefaultSweepSteps = 1000;
inline constexpr std::size_t kDefaultFactorialSteps = 20;

/// Content hash of the canonical parameter string plus the render config.
std::string stimulus_id(const StimulusParams& params, const RenderConfig& render);

/// Position j of an inclusive uniform grid: j / (steps - 1).
double grid_t(std::size_t j, std::size_t steps);

struct SweepItem {
  std::size_t index = 0;
  double t = 0.0;
  StimulusParams params;
  std::string stimulus_id;

  friend bool operator==(const SweepItem&, const SweepItem&) = default;
};

/// One channel swept over [min, max] with every other channel held at
/// `controls`.
struct SweepPlan {
  ChannelId varied = ChannelId::Length;
  std::size_t steps = kDefaultSweepSteps;
  StimulusParams controls;
  RenderConfig render;
  std::vector<SweepItem> items;

  friend bool operator==(const SweepPlan&, const SweepPlan&) = default;
};

/// Throws DomainError when steps < 2.
SweepPlan plan_single_sweep(ChannelId channel, std::size_t steps,
                            const StimulusParams& controls, const RenderConfig& render = {});

/// Full Cartesian design over the four non-Area channels other than `varied`.
/// Cells are generated on demand: at the default 20 steps a plan holds
/// 160000 cells and 3.2M stimuli.
struct FactorialPlan {
  ChannelId varied = ChannelId::Length;
  std::size_t steps = kDefaultFactorialSteps;
  RenderConfig render;
  std::array<ChannelId, 4> control_channels{};

  std::size_t cell_count() const;
  std::size_t stimulus_count() const { return cell_count() * steps; }
  /// Grid index of each control channel for `cell`; the last channel varies
  /// fastest.
  std::array<std::size_t, 4> cell_digits(std::size_t cell) const;
  StimulusParams cell_controls(std::size_t cell) const;
  SweepPlan cell(std::size_t cell) const;

  friend bool operator==(const FactorialPlan&, const FactorialPlan&) = default;
};

/// Throws DomainError for steps < 2 and for varied == Area (Area cannot be
/// combined with line channels, so it has no factorial design).
FactorialPlan plan_factorial(ChannelId varied, std::size_t steps, const RenderConfig& render = {});

// --- manifests ---------------------------------------------------------------

inline constexpr int kManifestVersion = 1;
inline constexpr std::string_view kManifestFileName = "manifest.jsonl";

enum class PlanKind { Sweep, Factorial };

struct PlanDescriptor {
  PlanKind kind = PlanKind::Sweep;
  ChannelId varied = ChannelId::Length;
  std::size_t steps = 0;
  /// Sweep controls; factorial plans derive their controls from the grid.
  StimulusParams controls;

  friend bool operator==(const PlanDescriptor&, const PlanDescriptor&) = default;
};

struct ManifestRecord {
  std::string id;
  ChannelId channel = ChannelId::Length;
  double t = 0.0;
  StimulusParams params;
  /// Relative to the manifest's directory.
  std::string path;
  std::optional<std::size_t> cell;
  std::size_t index = 0;
  std::string png_sha256;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

struct Manifest {
  int version = kManifestVersion;
  RenderConfig render;
  PlanDescriptor plan;
  std::vector<ManifestRecord> records;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// JSON lines: a header object, then one record per stimulus. Keys are
/// written in a fixed order.
std::string serialize_manifest(const Manifest& manifest);

/// Throws ParseError naming the line: "missing header", "unsupported manifest
/// version", "duplicate id at line k", "malformed record at line k: ...".
Manifest parse_manifest(std::string_view text);

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

struct LoadedManifest {
  Manifest manifest;
  std::variant<SweepPlan, FactorialPlan> plan;
};

/// Parses the manifest and rebuilds the plan it describes. Throws ParseError
/// when the records do not match that plan.
LoadedManifest load_manifest(const std::filesystem::path& path);

struct MaterializeOptions {
  unsigned jobs = 1;
};

struct MaterializeResult {
  Manifest manifest;
  std::filesystem::path manifest_path;
  std::size_t rendered = 0;
  std::size_t reused = 0;
};

/// Renders each stimulus to out_dir/images/<id>.png and writes
/// out_dir/manifest.jsonl. Images whose file hash matches the hash recorded
/// by an earlier manifest in out_dir are not re-rendered.
MaterializeResult materialize(const SweepPlan& plan, const std::filesystem::path& out_dir,
                              const MaterializeOptions& options = {});
MaterializeResult materialize(const FactorialPlan& plan, const std::filesystem::path& out_dir,
                              const MaterializeOptions& options = {});

}  // namespace chaneff::experiment
