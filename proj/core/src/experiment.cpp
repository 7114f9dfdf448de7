#include "chaneff/experiment.hpp"

#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "chaneff/codec.hpp"
#include "chaneff/error.hpp"
#include "chaneff/png_codec.hpp"
#include "json_io.hpp"
#include "parallel.hpp"

namespace chaneff::experiment {

namespace fs = std::filesystem;
using detail::ojson;

std::string stimulus_id(const StimulusParams& params, const RenderConfig& render) {
  return codec::sha256_hex(stimulus::canonical_string(params) + "|" +
                           stimulus::canonical_string(render));
}

double grid_t(std::size_t j, std::size_t steps) {
  return static_cast<double>(j) / static_cast<double>(steps - 1);
}

SweepPlan plan_single_sweep(ChannelId channel, std::size_t steps,
                            const StimulusParams& controls, const RenderConfig& render) {
  if (steps < 2) {
    throw DomainError("a sweep needs at least 2 steps");
  }
  stimulus::validate(controls);
  stimulus::validate(render);
  SweepPlan plan;
  plan.varied = channel;
  plan.steps = steps;
  plan.controls = controls;
  plan.render = render;
  plan.items.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    SweepItem item;
    item.index = i;
    item.t = grid_t(i, steps);
    item.params = stimulus::params_for(channel, item.t, controls);
    item.stimulus_id = stimulus_id(item.params, render);
    plan.items.push_back(std::move(item));
  }
  return plan;
}

std::size_t FactorialPlan::cell_count() const {
  std::size_t n = 1;
  for (std::size_t i = 0; i < control_channels.size(); ++i) n *= steps;
  return n;
}

std::array<std::size_t, 4> FactorialPlan::cell_digits(std::size_t cell) const {
  if (cell >= cell_count()) {
    throw DomainError("factorial cell index out of range");
  }
  std::array<std::size_t, 4> digits{};
  for (std::size_t k = digits.size(); k-- > 0;) {
    digits[k] = cell % steps;
    cell /= steps;
  }
  return digits;
}

StimulusParams FactorialPlan::cell_controls(std::size_t cell) const {
  const auto digits = cell_digits(cell);
  StimulusParams p = stimulus::default_params();
  for (std::size_t k = 0; k < control_channels.size(); ++k) {
    p = stimulus::params_for(control_channels[k], grid_t(digits[k], steps), p);
  }
  return p;
}

SweepPlan FactorialPlan::cell(std::size_t cell) const {
  return plan_single_sweep(varied, steps, cell_controls(cell), render);
}

FactorialPlan plan_factorial(ChannelId varied, std::size_t steps, const RenderConfig& render) {
  if (varied == ChannelId::Area) {
    throw DomainError(
        "unsupported design: Area cannot be combined with line channels in a factorial plan");
  }
  if (steps < 2) {
    throw DomainError("a factorial design needs at least 2 steps");
  }
  stimulus::validate(render);
  FactorialPlan plan;
  plan.varied = varied;
  plan.steps = steps;
  plan.render = render;
  std::size_t k = 0;
  for (ChannelId c : stimulus::kAllChannels) {
    if (c != varied && c != ChannelId::Area) plan.control_channels[k++] = c;
  }
  return plan;
}

// --- manifest serialization ----------------------------------------------------

namespace {

constexpr std::string_view kManifestSchema = "chaneff.manifest";

ojson header_to_json(const Manifest& m) {
  ojson h;
  h["schema"] = kManifestSchema;
  h["version"] = m.version;
  h["render"] = detail::render_to_json(m.render);
  ojson plan;
  plan["kind"] = m.plan.kind == PlanKind::Sweep ? "sweep" : "factorial";
  plan["varied"] = detail::channel_to_json(m.plan.varied);
  plan["steps"] = m.plan.steps;
  if (m.plan.kind == PlanKind::Sweep) {
    plan["controls"] = detail::params_to_json(m.plan.controls);
  }
  h["plan"] = std::move(plan);
  return h;
}

ojson record_to_json(const ManifestRecord& r) {
  ojson j;
  j["id"] = r.id;
  j["channel"] = detail::channel_to_json(r.channel);
  j["t"] = r.t;
  j["params"] = detail::params_to_json(r.params);
  j["path"] = r.path;
  if (r.cell) j["cell"] = *r.cell;
  j["index"] = r.index;
  j["png_sha256"] = r.png_sha256;
  return j;
}

}  // namespace

std::string serialize_manifest(const Manifest& manifest) {
  std::string out = header_to_json(manifest).dump();
  out.push_back('\n');
  for (const ManifestRecord& r : manifest.records) {
    out += record_to_json(r).dump();
    out.push_back('\n');
  }
  return out;
}

Manifest parse_manifest(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  if (lines.empty() || lines.front().empty()) {
    throw ParseError("missing header");
  }

  Manifest m;
  try {
    const ojson h = ojson::parse(lines.front());
    if (!h.is_object() || h.value("schema", std::string{}) != kManifestSchema) {
      throw ParseError("missing header");
    }
    m.version = h.at("version").get<int>();
    if (m.version != kManifestVersion) {
      throw ParseError("unsupported manifest version " + std::to_string(m.version));
    }
    m.render = detail::render_from_json(h.at("render"));
    const ojson& plan = h.at("plan");
    const std::string kind = plan.at("kind").get<std::string>();
    if (kind == "sweep") {
      m.plan.kind = PlanKind::Sweep;
      m.plan.controls = detail::params_from_json(plan.at("controls"));
    } else if (kind == "factorial") {
      m.plan.kind = PlanKind::Factorial;
      m.plan.controls = stimulus::default_params();
    } else {
      throw ParseError("unknown plan kind '" + kind + "'");
    }
    m.plan.varied = detail::channel_from_json(plan.at("varied"));
    m.plan.steps = plan.at("steps").get<std::size_t>();
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("malformed header at line 1: ") + e.what());
  }

  std::unordered_set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (lines[i].empty()) {
      if (i + 1 == lines.size()) break;
      throw ParseError("malformed record at line " + std::to_string(line_no) + ": empty line");
    }
    ManifestRecord r;
    try {
      const ojson j = ojson::parse(lines[i]);
      r.id = j.at("id").get<std::string>();
      r.channel = detail::channel_from_json(j.at("channel"));
      r.t = j.at("t").get<double>();
      r.params = detail::params_from_json(j.at("params"));
      r.path = j.at("path").get<std::string>();
      if (j.contains("cell")) r.cell = j.at("cell").get<std::size_t>();
      r.index = j.at("index").get<std::size_t>();
      r.png_sha256 = j.at("png_sha256").get<std::string>();
    } catch (const std::exception& e) {
      throw ParseError("malformed record at line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.insert(r.id).second) {
      throw ParseError("duplicate id at line " + std::to_string(line_no));
    }
    m.records.push_back(std::move(r));
  }
  return m;
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
  codec::write_file_atomic(path, serialize_manifest(manifest));
}

namespace {

void check_sweep_records(const SweepPlan& plan, std::span<const ManifestRecord> records,
                         std::size_t first_line, std::optional<std::size_t> cell) {
  if (records.size() != plan.items.size()) {
    throw ParseError("manifest record count does not match its plan");
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const ManifestRecord& r = records[i];
    const SweepItem& item = plan.items[i];
    if (r.id != item.stimulus_id || r.t != item.t || r.params != item.params ||
        r.channel != plan.varied || r.index != item.index || r.cell != cell) {
      throw ParseError("record at line " + std::to_string(first_line + i) +
                       " does not match the manifest's plan");
    }
  }
}

}  // namespace

LoadedManifest load_manifest(const fs::path& path) {
  Manifest m = parse_manifest(codec::read_text_file(path));
  const std::span<const ManifestRecord> records(m.records);
  if (m.plan.kind == PlanKind::Sweep) {
    SweepPlan plan;
    try {
      plan = plan_single_sweep(m.plan.varied, m.plan.steps, m.plan.controls, m.render);
    } catch (const DomainError& e) {
      throw ParseError(std::string("invalid plan in manifest header: ") + e.what());
    }
    check_sweep_records(plan, records, 2, std::nullopt);
    return {std::move(m), std::move(plan)};
  }
  FactorialPlan plan;
  try {
    plan = plan_factorial(m.plan.varied, m.plan.steps, m.render);
  } catch (const DomainError& e) {
    throw ParseError(std::string("invalid plan in manifest header: ") + e.what());
  }
  if (records.size() != plan.stimulus_count()) {
    throw ParseError("manifest record count does not match its plan");
  }
  for (std::size_t c = 0; c < plan.cell_count(); ++c) {
    check_sweep_records(plan.cell(c), records.subspan(c * plan.steps, plan.steps),
                        2 + c * plan.steps, c);
  }
  return {std::move(m), std::move(plan)};
}

// --- materialization ------------------------------------------------------------

namespace {

std::unordered_map<std::string, std::string> previous_hashes(const fs::path& manifest_path) {
  std::unordered_map<std::string, std::string> hashes;
  std::error_code ec;
  if (!fs::exists(manifest_path, ec)) return hashes;
  try {
    const Manifest old = parse_manifest(codec::read_text_file(manifest_path));
    for (const ManifestRecord& r : old.records) hashes.emplace(r.id, r.png_sha256);
  } catch (const Error&) {
    // An unreadable manifest only disables reuse.
    hashes.clear();
  }
  return hashes;
}

std::string image_path(const std::string& id) { return "images/" + id + ".png"; }

MaterializeResult materialize_records(Manifest manifest, const fs::path& out_dir,
                                      const MaterializeOptions& options) {
  const fs::path manifest_path = out_dir / kManifestFileName;
  const auto previous = previous_hashes(manifest_path);
  std::vector<char> rendered(manifest.records.size(), 0);

  detail::parallel_for(manifest.records.size(), options.jobs, [&](std::size_t i) {
    ManifestRecord& r = manifest.records[i];
    const fs::path file = out_dir / r.path;
    std::error_code ec;
    if (const auto it = previous.find(r.id); it != previous.end() && fs::exists(file, ec)) {
      const std::string on_disk = codec::sha256_hex(codec::read_file(file));
      if (on_disk == it->second) {
        r.png_sha256 = on_disk;
        return;
      }
    }
    std::vector<std::uint8_t> png;
    try {
      png = stimulus::encode_png(stimulus::render(r.params, manifest.render));
    } catch (const Error& e) {
      throw RenderError("stimulus " + r.id + ": " + e.what());
    }
    try {
      codec::write_file_atomic(file, png);
    } catch (const IoError& e) {
      throw IoError(file.string() + ": " + e.what());
    }
    r.png_sha256 = codec::sha256_hex(png);
    rendered[i] = 1;
  });

  MaterializeResult result;
  for (char flag : rendered) {
    flag ? ++result.rendered : ++result.reused;
  }
  write_manifest(manifest, manifest_path);
  result.manifest = std::move(manifest);
  result.manifest_path = manifest_path;
  return result;
}

ManifestRecord record_for(const SweepItem& item, ChannelId channel,
                          std::optional<std::size_t> cell) {
  ManifestRecord r;
  r.id = item.stimulus_id;
  r.channel = channel;
  r.t = item.t;
  r.params = item.params;
  r.path = image_path(item.stimulus_id);
  r.cell = cell;
  r.index = item.index;
  return r;
}

}  // namespace

MaterializeResult materialize(const SweepPlan& plan, const fs::path& out_dir,
                              const MaterializeOptions& options) {
  Manifest m;
  m.render = plan.render;
  m.plan = {PlanKind::Sweep, plan.varied, plan.steps, plan.controls};
  m.records.reserve(plan.items.size());
  for (const SweepItem& item : plan.items) {
    m.records.push_back(record_for(item, plan.varied, std::nullopt));
  }
  return materialize_records(std::move(m), out_dir, options);
}

MaterializeResult materialize(const FactorialPlan& plan, const fs::path& out_dir,
                              const MaterializeOptions& options) {
  Manifest m;
  m.render = plan.render;
  m.plan = {PlanKind::Factorial, plan.varied, plan.steps, stimulus::default_params()};
  m.records.reserve(plan.stimulus_count());
  for (std::size_t c = 0; c < plan.cell_count(); ++c) {
    const SweepPlan sweep = plan.cell(c);
    for (const SweepItem& item : sweep.items) {
      m.records.push_back(record_for(item, plan.varied, c));
    }
  }
  return materialize_records(std::move(m), out_dir, options);
}

}  // namespace chaneff::experiment
