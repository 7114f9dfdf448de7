#include "chaneff/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "chaneff/codec.hpp"
#include "json_io.hpp"
#include "parallel.hpp"

namespace chaneff::pipeline {

namespace fs = std::filesystem;
using detail::ojson;

std::string tool_version() { return CHANEFF_VERSION; }

// --- configuration ---------------------------------------------------------------

std::optional<double> parse_sigma(std::string_view text) {
  if (text == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const std::string s(text);
    const double v = std::stod(s, &used);
    if (used != s.size() || !(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("sigma must be 'auto' or a positive number, got '" + std::string(text) +
                      "'");
  }
}

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "backend", "model",  "channels", "steps", "factorial",  "factorial_steps",
      "sigma",   "peak_threshold", "tie_epsilon", "normalize", "cache", "out",
      "jobs",    "batch_size", "seed", "render"};
  return keys;
}

fs::path resolve_path(const std::string& value, const fs::path& base) {
  fs::path p(value);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text, const fs::path& base_dir) {
  ojson j;
  try {
    j = ojson::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  RunConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (!known_keys().contains(key)) throw ConfigError("unknown config key '" + key + "'");
      if (key == "backend") cfg.backend = value.get<std::string>();
      else if (key == "model") cfg.model = value.get<std::string>();
      else if (key == "channels") {
        cfg.channels.clear();
        for (const ojson& c : value) {
          const auto id = stimulus::parse_channel(c.get<std::string>());
          if (!id) throw ConfigError("unknown channel '" + c.get<std::string>() + "'");
          cfg.channels.push_back(*id);
        }
      } else if (key == "steps") cfg.steps = value.get<std::size_t>();
      else if (key == "factorial") cfg.factorial = value.get<bool>();
      else if (key == "factorial_steps") cfg.factorial_steps = value.get<std::size_t>();
      else if (key == "sigma") {
        cfg.sigma = value.is_string() ? parse_sigma(value.get<std::string>())
                                      : std::optional<double>(value.get<double>());
      } else if (key == "peak_threshold") cfg.peak_threshold = value.get<double>();
      else if (key == "tie_epsilon") cfg.tie_epsilon = value.get<double>();
      else if (key == "normalize") cfg.normalize = value.get<bool>();
      else if (key == "cache") cfg.cache_dir = resolve_path(value.get<std::string>(), base_dir);
      else if (key == "out") cfg.out_dir = resolve_path(value.get<std::string>(), base_dir);
      else if (key == "jobs") cfg.jobs = value.get<unsigned>();
      else if (key == "batch_size") cfg.batch_size = value.get<std::size_t>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "render") {
        for (const auto& [rk, rv] : value.items()) {
          if (rk == "canvas_px") cfg.render.canvas_px = rv.get<int>();
          else if (rk == "stroke_px") cfg.render.stroke_px = rv.get<int>();
          else if (rk == "antialias") cfg.render.antialias = rv.get<bool>();
          else throw ConfigError("unknown config key 'render." + rk + "'");
        }
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::string text;
  try {
    text = codec::read_text_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_run_config(text, fs::absolute(path).parent_path());
}

RunConfig resolve(RunConfig cfg, bool check_backend) {
  try {
    stimulus::validate(cfg.render);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (cfg.channels.empty()) throw ConfigError("no channels selected");
  std::set<ChannelId> unique(cfg.channels.begin(), cfg.channels.end());
  if (unique.size() != cfg.channels.size()) throw ConfigError("duplicate channel in config");
  if (cfg.steps < 3) throw ConfigError("steps must be >= 3");
  if (cfg.factorial && cfg.factorial_steps < 3) throw ConfigError("factorial_steps must be >= 3");
  if (cfg.sigma && !(*cfg.sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(cfg.peak_threshold > 0.0 && cfg.peak_threshold < 1.0)) {
    throw ConfigError("peak_threshold must lie in (0, 1)");
  }
  if (!(cfg.tie_epsilon >= 0.0)) throw ConfigError("tie_epsilon must be >= 0");
  if (cfg.jobs == 0) throw ConfigError("jobs must be >= 1");
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (check_backend) (void)embedding::parse_backend(cfg.backend, cfg.model);
  if (cfg.out_dir.empty()) throw ConfigError("an output directory is required");
  cfg.out_dir = fs::absolute(cfg.out_dir).lexically_normal();
  if (cfg.cache_dir.empty()) cfg.cache_dir = cfg.out_dir / "cache";
  cfg.cache_dir = fs::absolute(cfg.cache_dir).lexically_normal();
  return cfg;
}

ExitCode exit_code_for(const std::exception& e) {
  if (const auto* s = dynamic_cast<const StageError*>(&e)) return s->code();
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e)) {
    return ExitCode::Config;
  }
  if (dynamic_cast<const BackendError*>(&e)) return ExitCode::Backend;
  if (dynamic_cast<const DegenerateError*>(&e)) return ExitCode::Degenerate;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const ParseError*>(&e)) {
    return ExitCode::Io;
  }
  return ExitCode::Other;
}

StageError::StageError(std::string stage, std::string stimulus_id, std::string cause,
                       ExitCode code)
    : Error(stage + (stimulus_id.empty() ? "" : " [stimulus " + stimulus_id + "]") + ": " +
            cause),
      stage_(std::move(stage)),
      stimulus_id_(std::move(stimulus_id)),
      cause_(std::move(cause)),
      code_(code) {}

// --- layout ----------------------------------------------------------------------

fs::path sweep_dir(const fs::path& out, ChannelId c) {
  return out / "stimuli" / "sweep" / std::string(stimulus::channel_name(c));
}

fs::path factorial_dir(const fs::path& out, ChannelId c) {
  return out / "stimuli" / "factorial" / std::string(stimulus::channel_name(c));
}

fs::path embeddings_path(const fs::path& out, ChannelId c, bool factorial) {
  return out / "embeddings" /
         ((factorial ? "factorial_" : "sweep_") + std::string(stimulus::channel_name(c)) +
          ".jsonl");
}

fs::path report_dir(const fs::path& out) { return out / "report"; }

// --- stages ----------------------------------------------------------------------

namespace {

std::vector<ChannelId> factorial_channels(const RunConfig& cfg) {
  std::vector<ChannelId> out;
  for (ChannelId c : cfg.channels) {
    if (c != ChannelId::Area) out.push_back(c);
  }
  return out;
}

}  // namespace

std::vector<fs::path> generate(const RunConfig& cfg) {
  std::vector<fs::path> manifests;
  const experiment::MaterializeOptions opts{cfg.jobs};
  for (ChannelId c : cfg.channels) {
    const auto plan =
        experiment::plan_single_sweep(c, cfg.steps, stimulus::default_params(), cfg.render);
    manifests.push_back(experiment::materialize(plan, sweep_dir(cfg.out_dir, c), opts).manifest_path);
  }
  if (cfg.factorial) {
    for (ChannelId c : factorial_channels(cfg)) {
      const auto plan = experiment::plan_factorial(c, cfg.factorial_steps, cfg.render);
      manifests.push_back(
          experiment::materialize(plan, factorial_dir(cfg.out_dir, c), opts).manifest_path);
    }
  }
  return manifests;
}

embedding::EmbeddingsFile embed_manifest(const fs::path& manifest_path,
                                         embedding::EmbeddingProvider& provider,
                                         embedding::EmbeddingCache* cache,
                                         const EmbedStageOptions& options,
                                         std::string manifest_ref) {
  const experiment::LoadedManifest loaded = experiment::load_manifest(manifest_path);
  const experiment::Manifest& m = loaded.manifest;
  if (m.records.empty()) {
    throw StageError("embed", "", "manifest has no records", ExitCode::Io);
  }
  const fs::path base = manifest_path.parent_path();
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  const std::size_t chunks = (m.records.size() + batch - 1) / batch;
  std::vector<std::vector<embedding::EmbeddingVector>> results(chunks);

  detail::parallel_for(chunks, options.jobs, [&](std::size_t chunk) {
    const std::size_t begin = chunk * batch;
    const std::size_t end = std::min(m.records.size(), begin + batch);
    try {
      std::vector<embedding::EmbedRequest> requests;
      requests.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        const experiment::ManifestRecord& r = m.records[i];
        embedding::EmbedRequest req;
        req.png = codec::read_file(base / r.path);
        req.stimulus = embedding::StimulusTag{m.plan.varied, r.t, r.params};
        requests.push_back(std::move(req));
      }
      results[chunk] = embedding::embed_batch(provider, requests, cache, {batch});
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError("embed", m.records[begin].id, e.what(), exit_code_for(e));
    }
  });

  embedding::EmbeddingsFile file;
  file.model_id = provider.descriptor().model_id;
  file.backend = embedding::backend_string(provider.descriptor());
  file.dim = results.front().front().dim();
  file.channel = m.plan.varied;
  file.plan_kind = m.plan.kind == experiment::PlanKind::Sweep ? "sweep" : "factorial";
  file.steps = m.plan.steps;
  file.manifest = manifest_ref.empty() ? manifest_path.string() : std::move(manifest_ref);
  file.records.reserve(m.records.size());
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const embedding::EmbeddingVector& v = results[i / batch][i % batch];
    if (v.dim() != file.dim) {
      throw StageError("embed", m.records[i].id,
                       "dimension mismatch across batches: " + std::to_string(v.dim()) +
                           " vs " + std::to_string(file.dim),
                       ExitCode::Backend);
    }
    file.records.push_back({m.records[i].id, m.records[i].t, m.records[i].cell, v.values});
  }
  return file;
}

namespace {

metrics::Rows rows_of(std::span<const embedding::EmbeddingRecord> records, bool normalize) {
  metrics::Rows rows;
  rows.reserve(records.size());
  for (const auto& r : records) {
    std::vector<double> row(r.values.begin(), r.values.end());
    if (normalize) {
      double sum = 0.0;
      for (double x : row) sum += x * x;
      if (sum > 0.0) {
        const double inv = 1.0 / std::sqrt(sum);
        for (double& x : row) x *= inv;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

report::RunMetadata fragment_meta(const embedding::EmbeddingsFile& file, bool normalize) {
  report::RunMetadata meta;
  meta.tool_version = tool_version();
  meta.backend = file.backend;
  meta.model_id = file.model_id;
  meta.normalize = normalize;
  meta.channels = {file.channel};
  if (file.plan_kind == "factorial") {
    meta.factorial_steps = file.steps;
  } else {
    meta.steps = file.steps;
  }
  return meta;
}

}  // namespace

report::RunReport analyze_linearity(const embedding::EmbeddingsFile& file, bool normalize,
                                    unsigned jobs) {
  report::RunReport out;
  out.meta = fragment_meta(file, normalize);
  if (file.plan_kind == "sweep") {
    out.linearity.push_back(metrics::linearity(file.channel, rows_of(file.records, normalize)));
    return out;
  }
  if (file.plan_kind != "factorial") {
    throw ParseError("unknown plan kind '" + file.plan_kind + "' in embeddings file");
  }
  const std::size_t steps = file.steps;
  if (steps == 0 || file.records.size() % steps != 0) {
    throw ParseError("factorial embeddings do not divide into cells of " +
                     std::to_string(steps));
  }
  const std::size_t cells = file.records.size() / steps;
  std::vector<double> scores(cells, 0.0);
  std::vector<char> degenerate(cells, 0);
  const std::span<const embedding::EmbeddingRecord> records(file.records);
  detail::parallel_for(cells, jobs, [&](std::size_t c) {
    try {
      scores[c] = metrics::explained_variance_ratio(
          rows_of(records.subspan(c * steps, steps), normalize));
    } catch (const DegenerateError&) {
      degenerate[c] = 1;
    }
  });

  report::FactorialSummary summary;
  summary.channel = file.channel;
  summary.steps = steps;
  for (std::size_t c = 0; c < cells; ++c) {
    if (degenerate[c]) {
      summary.degenerate_cells.push_back(c);
    } else {
      summary.cell_scores.push_back(scores[c]);
    }
  }
  if (summary.cell_scores.empty()) {
    throw DegenerateError("degenerate sweep: zero variance in every factorial cell");
  }
  summary.stats = metrics::box_stats(summary.cell_scores);
  out.factorial.push_back(std::move(summary));
  return out;
}

report::RunReport analyze_discriminability(const embedding::EmbeddingsFile& file,
                                           bool normalize, std::optional<double> sigma,
                                           double peak_threshold) {
  if (file.plan_kind != "sweep") {
    throw DomainError("discriminability is defined on single-channel sweeps only");
  }
  report::RunReport out;
  out.meta = fragment_meta(file, normalize);
  out.meta.sigma_mode = sigma ? codec::format_g9(*sigma) : "auto";
  out.meta.peak_threshold = peak_threshold;
  out.discriminability.push_back(metrics::distance_profile(
      file.channel, rows_of(file.records, normalize), sigma.value_or(0.0), peak_threshold));
  return out;
}

// --- full run --------------------------------------------------------------------

namespace {

constexpr std::string_view kIncompleteMarker = "INCOMPLETE";

void mark_incomplete(const fs::path& dir, const std::string& reason) {
  try {
    codec::write_file_atomic(dir / kIncompleteMarker, reason + "\n");
  } catch (const Error&) {
    // The original failure is more useful than a marker write error.
  }
}

template <class Fn>
auto stage(std::string_view name, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(std::string(name), "", e.what(), exit_code_for(e));
  }
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  return p.lexically_relative(base).generic_string();
}

}  // namespace

report::RunReport run_pipeline(const RunConfig& config) {
  const RunConfig cfg = resolve(config);
  auto provider = embedding::make_provider(embedding::parse_backend(cfg.backend, cfg.model));
  return run_pipeline(cfg, *provider);
}

report::RunReport run_pipeline(const RunConfig& config, embedding::EmbeddingProvider& provider) {
  const RunConfig cfg = resolve(config);
  const fs::path out = cfg.out_dir;
  const fs::path rdir = report_dir(out);
  std::error_code ec;
  fs::remove(rdir / kIncompleteMarker, ec);

  report::RunReport run;
  run.meta.tool_version = tool_version();
  run.meta.backend = embedding::backend_string(provider.descriptor());
  run.meta.model_id = provider.descriptor().model_id;
  run.meta.normalize = cfg.normalize;
  run.meta.render = cfg.render;
  run.meta.steps = cfg.steps;
  if (cfg.factorial) run.meta.factorial_steps = cfg.factorial_steps;
  run.meta.sigma_mode = cfg.sigma ? codec::format_g9(*cfg.sigma) : "auto";
  run.meta.peak_threshold = cfg.peak_threshold;
  run.meta.tie_epsilon = cfg.tie_epsilon;
  run.meta.channels = cfg.channels;

  try {
    stage("generate", [&] { return generate(cfg); });

    embedding::EmbeddingCache cache(cfg.cache_dir);
    const EmbedStageOptions embed_opts{cfg.batch_size, cfg.jobs};
    auto embed = [&](const fs::path& dir, ChannelId c, bool factorial) {
      const fs::path manifest = dir / experiment::kManifestFileName;
      auto file = stage("embed", [&] {
        return embed_manifest(manifest, provider, &cache, embed_opts, relative_to(manifest, out));
      });
      stage("embed", [&] {
        embedding::write_embeddings(file, embeddings_path(out, c, factorial));
        return 0;
      });
      return file;
    };

    for (ChannelId c : cfg.channels) {
      const auto file = embed(sweep_dir(out, c), c, false);
      try {
        run.linearity.push_back(
            metrics::linearity(c, rows_of(file.records, cfg.normalize)));
      } catch (const DegenerateError& e) {
        run.meta.errors.push_back("analyze linearity [" + std::string(stimulus::channel_name(c)) +
                                  "]: " + e.what());
      }
      const auto disc = stage("analyze discriminability", [&] {
        return analyze_discriminability(file, cfg.normalize, cfg.sigma, cfg.peak_threshold);
      });
      run.discriminability.push_back(disc.discriminability.front());
    }

    if (cfg.factorial) {
      for (ChannelId c : factorial_channels(cfg)) {
        const auto file = embed(factorial_dir(out, c), c, true);
        try {
          auto part = analyze_linearity(file, cfg.normalize, cfg.jobs);
          run.factorial.push_back(std::move(part.factorial.front()));
        } catch (const DegenerateError& e) {
          run.meta.errors.push_back("analyze factorial [" +
                                    std::string(stimulus::channel_name(c)) + "]: " + e.what());
        }
      }
    }

    run.meta.complete = run.meta.errors.empty();
    report::finalize_rankings(run);
    stage("report", [&] {
      report::emit_tables(run, rdir);
      report::emit_figures(run, rdir);
      return 0;
    });
  } catch (const StageError& e) {
    mark_incomplete(rdir, e.what());
    throw;
  }

  if (!run.meta.complete) {
    std::string joined;
    for (const auto& err : run.meta.errors) joined += (joined.empty() ? "" : "; ") + err;
    mark_incomplete(rdir, joined);
    throw StageError("analyze", "", joined, ExitCode::Degenerate);
  }
  return run;
}

}  // namespace chaneff::pipeline
