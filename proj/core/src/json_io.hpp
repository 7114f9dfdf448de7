#pragma once

// nlohmann/json conversions shared by the manifest, embeddings-file and
// report serializers. Internal to chaneff_core.

#include <nlohmann/json.hpp>

#include <string>

#include "chaneff/error.hpp"
#include "chaneff/stimulus.hpp"

namespace chaneff::detail {

using ojson = nlohmann::ordered_json;

inline ojson params_to_json(const stimulus::StimulusParams& p) {
  ojson j;
  if (const auto* line = p.line()) {
    j["mark"] = "line";
    j["length_pct"] = line->length_pct;
    j["tilt_deg"] = line->tilt_deg;
    j["curvature_deg"] = line->curvature_deg;
  } else {
    j["mark"] = "square";
    j["area_pct"] = p.square()->area_pct;
  }
  j["luminance_pct"] = p.luminance_pct;
  j["saturation_pct"] = p.saturation_pct;
  j["hue_deg"] = p.hue_deg;
  return j;
}

inline stimulus::StimulusParams params_from_json(const ojson& j) {
  stimulus::StimulusParams p;
  const std::string mark = j.at("mark").get<std::string>();
  if (mark == "line") {
    p.mark = stimulus::LineMark{j.at("length_pct").get<double>(),
                                j.at("tilt_deg").get<double>(),
                                j.at("curvature_deg").get<double>()};
  } else if (mark == "square") {
    p.mark = stimulus::SquareMark{j.at("area_pct").get<double>()};
  } else {
    throw ParseError("unknown mark kind '" + mark + "'");
  }
  p.luminance_pct = j.at("luminance_pct").get<double>();
  p.saturation_pct = j.at("saturation_pct").get<double>();
  p.hue_deg = j.at("hue_deg").get<double>();
  return p;
}

inline ojson render_to_json(const stimulus::RenderConfig& cfg) {
  ojson j;
  j["canvas_px"] = cfg.canvas_px;
  j["stroke_px"] = cfg.stroke_px;
  j["antialias"] = cfg.antialias;
  j["background"] = "white";
  return j;
}

inline stimulus::RenderConfig render_from_json(const ojson& j) {
  stimulus::RenderConfig cfg;
  cfg.canvas_px = j.at("canvas_px").get<int>();
  cfg.stroke_px = j.at("stroke_px").get<int>();
  cfg.antialias = j.at("antialias").get<bool>();
  return cfg;
}

inline stimulus::ChannelId channel_from_json(const ojson& j) {
  const std::string name = j.get<std::string>();
  const auto c = stimulus::parse_channel(name);
  if (!c) throw ParseError("unknown channel '" + name + "'");
  return *c;
}

inline std::string channel_to_json(stimulus::ChannelId c) {
  return std::string(stimulus::channel_name(c));
}

}  // namespace chaneff::detail
