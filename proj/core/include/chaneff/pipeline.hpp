#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chaneff/embedding.hpp"
#include "chaneff/error.hpp"
#include "chaneff/experiment.hpp"
#include "chaneff/report.hpp"

namespace chaneff::pipeline {

using stimulus::ChannelId;

struct RunConfig {
  stimulus::RenderConfig render;
  std::vector<ChannelId> channels{stimulus::kAllChannels.begin(), stimulus::kAllChannels.end()};
  std::size_t steps = experiment::kDefaultSweepSteps;
  bool factorial = false;
  std::size_t factorial_steps = experiment::kDefaultFactorialSteps;
  std::string backend = "cache-only";
  std::string model;
  /// Defaults to <out>/cache.
  std::filesystem::path cache_dir;
  bool normalize = false;
  /// nullopt selects round(sqrt(steps)).
  std::optional<double> sigma;
  double peak_threshold = metrics::kDefaultPeakThreshold;
  double tie_epsilon = metrics::kDefaultTieEpsilon;
  std::filesystem::path out_dir = "chaneff-out";
  unsigned jobs = 1;
  std::size_t batch_size = 32;
  /// Reserved; every stage is deterministic.
  std::uint64_t seed = 0;
};

/// Reads the JSON config format described in the README. Unknown keys are a
/// ConfigError; relative paths are taken relative to the file's directory.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(std::string_view json_text,
                           const std::filesystem::path& base_dir = {});

/// Validates ranges, fills the cache default and makes every path absolute.
/// Throws ConfigError. Stages that never embed pass check_backend = false.
RunConfig resolve(RunConfig config, bool check_backend = true);

/// "auto" or a positive number.
std::optional<double> parse_sigma(std::string_view text);

/// Exit codes of the command-line tool.
enum class ExitCode : int {
  Ok = 0,
  Config = 2,
  Backend = 3,
  Degenerate = 4,
  Io = 5,
  Other = 1,
};

ExitCode exit_code_for(const std::exception& e);

/// A failure inside one pipeline stage: stage name, the stimulus it concerns
/// (may be empty) and the underlying cause.
class StageError : public Error {
 public:
  StageError(std::string stage, std::string stimulus_id, std::string cause, ExitCode code);

  const std::string& stage() const { return stage_; }
  const std::string& stimulus_id() const { return stimulus_id_; }
  const std::string& cause() const { return cause_; }
  ExitCode code() const { return code_; }

 private:
  std::string stage_;
  std::string stimulus_id_;
  std::string cause_;
  ExitCode code_;
};

// Output layout under RunConfig::out_dir.
std::filesystem::path sweep_dir(const std::filesystem::path& out, ChannelId channel);
std::filesystem::path factorial_dir(const std::filesystem::path& out, ChannelId channel);
std::filesystem::path embeddings_path(const std::filesystem::path& out, ChannelId channel,
                                      bool factorial);
std::filesystem::path report_dir(const std::filesystem::path& out);

// --- stages --------------------------------------------------------------------

/// Renders every sweep (and factorial design, when enabled) the config asks
/// for. Returns the manifest paths.
std::vector<std::filesystem::path> generate(const RunConfig& config);

struct EmbedStageOptions {
  std::size_t batch_size = 32;
  unsigned jobs = 1;
};

/// Embeds every image of a manifest. `manifest_ref` is the value stored in
/// the output's "manifest" field.
embedding::EmbeddingsFile embed_manifest(const std::filesystem::path& manifest_path,
                                         embedding::EmbeddingProvider& provider,
                                         embedding::EmbeddingCache* cache,
                                         const EmbedStageOptions& options,
                                         std::string manifest_ref = {});

/// Linearity of a sweep, or of every cell of a factorial design. Returns a
/// partial report holding just that result.
report::RunReport analyze_linearity(const embedding::EmbeddingsFile& file, bool normalize,
                                    unsigned jobs = 1);

/// Consecutive-distance profile of a sweep.
report::RunReport analyze_discriminability(const embedding::EmbeddingsFile& file,
                                           bool normalize, std::optional<double> sigma,
                                           double peak_threshold);

/// generate -> embed -> analyze -> report. Writes <out>/report and returns
/// the report. Degenerate sweeps are reported per channel, then raised as
/// one StageError after a partial report marked incomplete is written.
report::RunReport run_pipeline(const RunConfig& config);
report::RunReport run_pipeline(const RunConfig& config, embedding::EmbeddingProvider& provider);

std::string tool_version();

}  // namespace chaneff::pipeline
