#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "chaneff/codec.hpp"
#include "chaneff/embedding.hpp"
#include "chaneff/experiment.hpp"
#include "chaneff/metrics.hpp"
#include "chaneff/pipeline.hpp"
#include "chaneff/report.hpp"

namespace fs = std::filesystem;
namespace cp = chaneff::pipeline;
using chaneff::ConfigError;
using chaneff::stimulus::ChannelId;

namespace {

// Flags shared by the subcommands. Unset flags leave config values alone.
struct Overrides {
  std::string config;
  std::optional<std::string> backend;
  std::optional<std::string> model;
  std::vector<std::string> channels;
  std::optional<std::size_t> steps;
  bool factorial = false;
  std::optional<std::size_t> factorial_steps;
  std::optional<std::string> sigma;
  std::optional<double> peak_threshold;
  std::optional<double> tie_epsilon;
  bool normalize = false;
  std::optional<std::string> cache;
  std::optional<std::string> out;
  std::optional<unsigned> jobs;
  std::optional<std::size_t> batch_size;
};

enum Flag : unsigned {
  kBackend = 1u << 0,
  kChannels = 1u << 1,
  kSteps = 1u << 2,
  kAnalysis = 1u << 3,
  kCache = 1u << 4,
  kOut = 1u << 5,
  kJobs = 1u << 6,
  kRender = 1u << 7,
};

void add_flags(CLI::App* cmd, Overrides& o, unsigned which) {
  cmd->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  if (which & kBackend) {
    cmd->add_option("--backend", o.backend, "http://host:port[/prefix], mock:<name> or cache-only");
    cmd->add_option("--model", o.model, "model id sent to the backend");
    cmd->add_option("--batch-size", o.batch_size, "images per backend request");
  }
  if (which & kCache) cmd->add_option("--cache", o.cache, "embedding cache directory");
  if (which & kChannels) {
    cmd->add_option("--channel", o.channels, "channel to sweep (repeatable)")->delimiter(',');
  }
  if (which & kSteps) {
    cmd->add_option("--steps", o.steps, "images per single-channel sweep");
    cmd->add_flag("--factorial", o.factorial, "also run factorial designs");
    cmd->add_option("--factorial-steps", o.factorial_steps, "grid points per factorial channel");
  }
  if (which & kAnalysis) {
    cmd->add_option("--sigma", o.sigma, "Gaussian sigma: auto or a positive number");
    cmd->add_option("--peak-threshold", o.peak_threshold, "minimum prominence, fraction of range");
    cmd->add_option("--tie-epsilon", o.tie_epsilon, "score gap treated as a tie when ranking");
    cmd->add_flag("--normalize", o.normalize, "L2-normalize embeddings before analysis");
  }
  if (which & kOut) cmd->add_option("--out", o.out, "output directory");
  if (which & kJobs) cmd->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
}

cp::RunConfig build_config(const Overrides& o, bool check_backend = false) {
  cp::RunConfig cfg = o.config.empty() ? cp::RunConfig{} : cp::load_run_config(o.config);
  if (o.backend) cfg.backend = *o.backend;
  if (o.model) cfg.model = *o.model;
  if (!o.channels.empty()) {
    cfg.channels.clear();
    for (const std::string& name : o.channels) {
      const auto c = chaneff::stimulus::parse_channel(name);
      if (!c) throw ConfigError("unknown channel '" + name + "'");
      cfg.channels.push_back(*c);
    }
  }
  if (o.steps) cfg.steps = *o.steps;
  if (o.factorial) cfg.factorial = true;
  if (o.factorial_steps) cfg.factorial_steps = *o.factorial_steps;
  if (o.sigma) cfg.sigma = cp::parse_sigma(*o.sigma);
  if (o.peak_threshold) cfg.peak_threshold = *o.peak_threshold;
  if (o.tie_epsilon) cfg.tie_epsilon = *o.tie_epsilon;
  if (o.normalize) cfg.normalize = true;
  if (o.cache) cfg.cache_dir = *o.cache;
  if (o.out) cfg.out_dir = *o.out;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.batch_size) cfg.batch_size = *o.batch_size;
  return cp::resolve(cfg, check_backend);
}

void write_fragment(const chaneff::report::RunReport& r, const fs::path& path) {
  chaneff::codec::write_file_atomic(path, chaneff::report::to_json(r));
  std::cout << "wrote " << path.string() << '\n';
}

std::vector<fs::path> collect_fragments(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const std::string& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
          found.push_back(entry.path());
        }
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  if (files.empty()) throw ConfigError("report: no input fragments found");
  return files;
}

void print_summary(const chaneff::report::RunReport& r) {
  for (const auto& l : r.linearity) {
    std::printf("linearity  %-11s %.6f\n", std::string(channel_name(l.channel)).c_str(), l.score);
  }
  for (const auto& f : r.factorial) {
    std::printf("factorial  %-11s median %.6f over %zu cells\n",
                std::string(channel_name(f.channel)).c_str(), f.stats.median,
                f.cell_scores.size());
  }
  for (const auto& p : r.discriminability) {
    std::printf("peaks      %-11s %zu (sigma %g)\n", std::string(channel_name(p.channel)).c_str(),
                p.peaks.count(), p.sigma);
  }
  if (r.linearity_ranking && r.linearity_ranking->tau_b) {
    std::printf("kendall tau-b vs human ranking: %.6f\n", *r.linearity_ranking->tau_b);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chaneff: channel effectiveness of image embedding models"};
  app.set_version_flag("--version", cp::tool_version());
  app.require_subcommand(1);

  Overrides gen_o, emb_o, lin_o, dis_o, rep_o, run_o;
  std::string manifest, embeddings_in, out_file;
  std::vector<std::string> report_inputs;

  auto* gen = app.add_subcommand("generate", "render stimuli and write manifests");
  add_flags(gen, gen_o, kChannels | kSteps | kOut | kJobs);

  auto* emb = app.add_subcommand("embed", "embed the images of one manifest");
  emb->add_option("--manifest", manifest, "manifest.jsonl to embed")->required()->check(CLI::ExistingFile);
  emb->add_option("--out", out_file, "embeddings file to write")->required();
  add_flags(emb, emb_o, kBackend | kCache | kJobs);

  auto* analyze = app.add_subcommand("analyze", "compute metrics from embeddings");
  analyze->require_subcommand(1);
  auto* lin = analyze->add_subcommand("linearity", "PC1 explained variance of a sweep or factorial design");
  lin->add_option("--embeddings", embeddings_in, "embeddings file")->required()->check(CLI::ExistingFile);
  lin->add_option("--out", out_file, "report fragment (JSON) to write")->required();
  add_flags(lin, lin_o, kAnalysis | kJobs);
  auto* dis = analyze->add_subcommand("discriminability", "smoothed consecutive distances and peaks");
  dis->add_option("--embeddings", embeddings_in, "embeddings file")->required()->check(CLI::ExistingFile);
  dis->add_option("--out", out_file, "report fragment (JSON) to write")->required();
  add_flags(dis, dis_o, kAnalysis);

  auto* rep = app.add_subcommand("report", "merge fragments and write tables and figures");
  rep->add_option("--in", report_inputs, "fragment files or directories")->required();
  add_flags(rep, rep_o, kAnalysis | kOut);

  auto* run = app.add_subcommand("run", "generate, embed, analyze and report");
  add_flags(run, run_o, kBackend | kChannels | kSteps | kAnalysis | kCache | kOut | kJobs);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(cp::ExitCode::Config);
  }

  try {
    if (*gen) {
      const cp::RunConfig cfg = build_config(gen_o);
      for (const fs::path& p : cp::generate(cfg)) std::cout << p.string() << '\n';
    } else if (*emb) {
      const cp::RunConfig cfg = build_config(emb_o, true);
      auto provider = chaneff::embedding::make_provider(
          chaneff::embedding::parse_backend(cfg.backend, cfg.model));
      std::optional<chaneff::embedding::EmbeddingCache> cache;
      if (emb_o.cache || !emb_o.config.empty()) cache.emplace(cfg.cache_dir);
      const auto file = cp::embed_manifest(manifest, *provider, cache ? &*cache : nullptr,
                                           {cfg.batch_size, cfg.jobs});
      chaneff::embedding::write_embeddings(file, out_file);
      std::cout << "wrote " << file.records.size() << " embeddings (" << provider->backend_calls()
                << " backend calls) to " << out_file << '\n';
    } else if (*lin) {
      const cp::RunConfig cfg = build_config(lin_o);
      const auto file = chaneff::embedding::load_embeddings(embeddings_in);
      write_fragment(cp::analyze_linearity(file, cfg.normalize, cfg.jobs), out_file);
    } else if (*dis) {
      const cp::RunConfig cfg = build_config(dis_o);
      const auto file = chaneff::embedding::load_embeddings(embeddings_in);
      write_fragment(
          cp::analyze_discriminability(file, cfg.normalize, cfg.sigma, cfg.peak_threshold),
          out_file);
    } else if (*rep) {
      const cp::RunConfig cfg = build_config(rep_o);
      std::vector<chaneff::report::RunReport> parts;
      for (const fs::path& p : collect_fragments(report_inputs)) {
        parts.push_back(chaneff::report::load_report(p));
      }
      auto merged = chaneff::report::merge_reports(parts);
      merged.meta.tie_epsilon = cfg.tie_epsilon;
      chaneff::report::finalize_rankings(merged);
      const fs::path dir = cfg.out_dir;
      chaneff::report::emit_tables(merged, dir);
      chaneff::report::emit_figures(merged, dir);
      print_summary(merged);
      std::cout << "report written to " << dir.string() << '\n';
    } else if (*run) {
      const cp::RunConfig cfg = build_config(run_o, true);
      const auto report = cp::run_pipeline(cfg);
      print_summary(report);
      std::cout << "report written to " << cp::report_dir(cfg.out_dir).string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "chaneff: error: " << e.what() << '\n';
    return static_cast<int>(cp::exit_code_for(e));
  }
  return 0;
}
