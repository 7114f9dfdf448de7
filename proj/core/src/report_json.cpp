#include "chaneff/error.hpp"
#include "chaneff/report.hpp"
#include "json_io.hpp"

namespace chaneff::report {

using detail::ojson;

namespace {

ojson ranking_to_json(const metrics::ChannelRanking& r) {
  ojson arr = ojson::array();
  for (const auto& e : r.entries) {
    ojson j;
    j["channel"] = detail::channel_to_json(e.channel);
    j["score"] = e.score;
    j["group"] = e.group;
    arr.push_back(std::move(j));
  }
  return arr;
}

metrics::ChannelRanking ranking_from_json(const ojson& arr) {
  metrics::ChannelRanking r;
  for (const ojson& j : arr) {
    r.entries.push_back({detail::channel_from_json(j.at("channel")), j.at("score").get<double>(),
                         j.at("group").get<std::size_t>()});
  }
  return r;
}

ojson comparison_to_json(const std::optional<RankingComparison>& c) {
  if (!c) return nullptr;
  ojson j;
  j["model"] = ranking_to_json(c->model);
  j["human"] = ranking_to_json(c->human);
  j["kendall_tau_b"] = c->tau_b ? ojson(*c->tau_b) : ojson(nullptr);
  return j;
}

std::optional<RankingComparison> comparison_from_json(const ojson& j) {
  if (j.is_null()) return std::nullopt;
  RankingComparison c;
  c.model = ranking_from_json(j.at("model"));
  c.human = ranking_from_json(j.at("human"));
  if (!j.at("kendall_tau_b").is_null()) c.tau_b = j.at("kendall_tau_b").get<double>();
  return c;
}

ojson meta_to_json(const RunMetadata& m) {
  ojson j;
  j["tool_version"] = m.tool_version;
  j["backend"] = m.backend;
  j["model"] = m.model_id;
  j["normalize"] = m.normalize;
  j["render"] = detail::render_to_json(m.render);
  j["steps"] = m.steps;
  j["factorial_steps"] = m.factorial_steps ? ojson(*m.factorial_steps) : ojson(nullptr);
  j["sigma"] = m.sigma_mode;
  j["peak_threshold"] = m.peak_threshold;
  j["tie_epsilon"] = m.tie_epsilon;
  j["padding"] = m.padding;
  j["channels"] = ojson::array();
  for (ChannelId c : m.channels) j["channels"].push_back(detail::channel_to_json(c));
  j["complete"] = m.complete;
  j["errors"] = m.errors;
  return j;
}

RunMetadata meta_from_json(const ojson& j) {
  RunMetadata m;
  m.tool_version = j.at("tool_version").get<std::string>();
  m.backend = j.at("backend").get<std::string>();
  m.model_id = j.at("model").get<std::string>();
  m.normalize = j.at("normalize").get<bool>();
  m.render = detail::render_from_json(j.at("render"));
  m.steps = j.at("steps").get<std::size_t>();
  if (!j.at("factorial_steps").is_null()) {
    m.factorial_steps = j.at("factorial_steps").get<std::size_t>();
  }
  m.sigma_mode = j.at("sigma").get<std::string>();
  m.peak_threshold = j.at("peak_threshold").get<double>();
  m.tie_epsilon = j.at("tie_epsilon").get<double>();
  m.padding = j.at("padding").get<std::string>();
  for (const ojson& c : j.at("channels")) m.channels.push_back(detail::channel_from_json(c));
  m.complete = j.at("complete").get<bool>();
  m.errors = j.at("errors").get<std::vector<std::string>>();
  return m;
}

}  // namespace

std::string to_json(const RunReport& report) {
  ojson root;
  root["schema"] = kReportSchema;
  root["version"] = kReportVersion;
  root["meta"] = meta_to_json(report.meta);

  root["linearity"] = ojson::array();
  for (const auto& r : report.linearity) {
    ojson j;
    j["channel"] = detail::channel_to_json(r.channel);
    j["score"] = r.score;
    j["n"] = r.n;
    j["dim"] = r.dim;
    root["linearity"].push_back(std::move(j));
  }

  root["factorial"] = ojson::array();
  for (const auto& f : report.factorial) {
    ojson j;
    j["channel"] = detail::channel_to_json(f.channel);
    j["steps"] = f.steps;
    j["box"] = {{"min", f.stats.min},
                {"q1", f.stats.q1},
                {"median", f.stats.median},
                {"q3", f.stats.q3},
                {"max", f.stats.max}};
    j["degenerate_cells"] = f.degenerate_cells;
    j["cell_scores"] = f.cell_scores;
    root["factorial"].push_back(std::move(j));
  }

  root["discriminability"] = ojson::array();
  for (const auto& p : report.discriminability) {
    ojson j;
    j["channel"] = detail::channel_to_json(p.channel);
    j["sigma"] = p.sigma;
    j["threshold_frac"] = p.peaks.threshold_frac;
    j["peak_count"] = p.peaks.count();
    j["regions"] = p.peaks.regions();
    j["peak_indices"] = p.peaks.indices;
    j["peak_prominences"] = p.peaks.prominences;
    j["raw"] = p.raw;
    j["smoothed"] = p.smoothed;
    root["discriminability"].push_back(std::move(j));
  }

  root["rankings"] = {{"linearity", comparison_to_json(report.linearity_ranking)},
                      {"factorial", comparison_to_json(report.factorial_ranking)}};
  std::string out = root.dump(2);
  out.push_back('\n');
  return out;
}

RunReport parse_report_json(std::string_view text) {
  try {
    const ojson root = ojson::parse(text);
    if (root.value("schema", std::string{}) != kReportSchema) {
      throw ParseError("not a chaneff report bundle");
    }
    if (root.at("version").get<int>() != kReportVersion) {
      throw ParseError("unsupported report version");
    }
    RunReport r;
    r.meta = meta_from_json(root.at("meta"));
    for (const ojson& j : root.at("linearity")) {
      r.linearity.push_back({detail::channel_from_json(j.at("channel")),
                             j.at("score").get<double>(), j.at("n").get<std::size_t>(),
                             j.at("dim").get<std::size_t>()});
    }
    for (const ojson& j : root.at("factorial")) {
      FactorialSummary f;
      f.channel = detail::channel_from_json(j.at("channel"));
      f.steps = j.at("steps").get<std::size_t>();
      const ojson& b = j.at("box");
      f.stats = {b.at("min").get<double>(), b.at("q1").get<double>(),
                 b.at("median").get<double>(), b.at("q3").get<double>(),
                 b.at("max").get<double>()};
      f.degenerate_cells = j.at("degenerate_cells").get<std::vector<std::size_t>>();
      f.cell_scores = j.at("cell_scores").get<std::vector<double>>();
      r.factorial.push_back(std::move(f));
    }
    for (const ojson& j : root.at("discriminability")) {
      metrics::DistanceProfile p;
      p.channel = detail::channel_from_json(j.at("channel"));
      p.sigma = j.at("sigma").get<double>();
      p.peaks.threshold_frac = j.at("threshold_frac").get<double>();
      p.peaks.indices = j.at("peak_indices").get<std::vector<std::size_t>>();
      p.peaks.prominences = j.at("peak_prominences").get<std::vector<double>>();
      p.raw = j.at("raw").get<std::vector<double>>();
      p.smoothed = j.at("smoothed").get<std::vector<double>>();
      r.discriminability.push_back(std::move(p));
    }
    const ojson& rankings = root.at("rankings");
    r.linearity_ranking = comparison_from_json(rankings.at("linearity"));
    r.factorial_ranking = comparison_from_json(rankings.at("factorial"));
    return r;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("malformed report bundle: ") + e.what());
  }
}

}  // namespace chaneff::report
