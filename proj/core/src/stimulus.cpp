#include "chaneff/stimulus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "chaneff/error.hpp"

namespace chaneff::stimulus {

std::string_view channel_name(ChannelId channel) {
  switch (channel) {
    case ChannelId::Length: return "length";
    case ChannelId::Tilt: return "tilt";
    case ChannelId::Area: return "area";
    case ChannelId::Luminance: return "luminance";
    case ChannelId::Saturation: return "saturation";
    case ChannelId::Curvature: return "curvature";
  }
  return "unknown";
}

std::string_view channel_label(ChannelId channel) {
  switch (channel) {
    case ChannelId::Length: return "Length";
    case ChannelId::Tilt: return "Tilt";
    case ChannelId::Area: return "Area";
    case ChannelId::Luminance: return "Color Luminance";
    case ChannelId::Saturation: return "Color Saturation";
    case ChannelId::Curvature: return "Curvature";
  }
  return "Unknown";
}

std::optional<ChannelId> parse_channel(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (ChannelId c : kAllChannels) {
    if (channel_name(c) == lower) return c;
  }
  return std::nullopt;
}

ChannelRange channel_range(ChannelId channel) {
  switch (channel) {
    case ChannelId::Tilt: return {0.0, 90.0, "deg"};
    case ChannelId::Curvature: return {0.0, 180.0, "deg"};
    case ChannelId::Length:
    case ChannelId::Area:
    case ChannelId::Luminance:
    case ChannelId::Saturation: return {0.0, 1.0, "fraction"};
  }
  return {0.0, 1.0, "fraction"};
}

StimulusParams default_params() {
  StimulusParams p;
  p.mark = LineMark{.length_pct = 0.5, .tilt_deg = 0.0, .curvature_deg = 0.0};
  p.luminance_pct = 0.5;
  p.saturation_pct = 1.0;
  p.hue_deg = 0.0;
  return p;
}

namespace {

void check_range(ChannelId channel, double value) {
  const ChannelRange r = channel_range(channel);
  if (!(value >= r.min && value <= r.max)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s=%.17g outside [%g, %g]",
                  std::string(channel_name(channel)).c_str(), value, r.min, r.max);
    throw DomainError(buf);
  }
}

}  // namespace

void validate(const StimulusParams& params) {
  if (const LineMark* line = params.line()) {
    check_range(ChannelId::Length, line->length_pct);
    check_range(ChannelId::Tilt, line->tilt_deg);
    check_range(ChannelId::Curvature, line->curvature_deg);
  } else {
    check_range(ChannelId::Area, params.square()->area_pct);
  }
  check_range(ChannelId::Luminance, params.luminance_pct);
  check_range(ChannelId::Saturation, params.saturation_pct);
  if (params.hue_deg != 0.0) {
    throw DomainError("hue is fixed at 0");
  }
}

std::optional<double> channel_value(const StimulusParams& params, ChannelId channel) {
  switch (channel) {
    case ChannelId::Length:
      if (const LineMark* l = params.line()) return l->length_pct;
      return std::nullopt;
    case ChannelId::Tilt:
      if (const LineMark* l = params.line()) return l->tilt_deg;
      return std::nullopt;
    case ChannelId::Curvature:
      if (const LineMark* l = params.line()) return l->curvature_deg;
      return std::nullopt;
    case ChannelId::Area:
      if (const SquareMark* s = params.square()) return s->area_pct;
      return std::nullopt;
    case ChannelId::Luminance: return params.luminance_pct;
    case ChannelId::Saturation: return params.saturation_pct;
  }
  return std::nullopt;
}

StimulusParams params_for(ChannelId channel, double t, const StimulusParams& controls) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError("t must lie in [0, 1], got " + std::to_string(t));
  }
  const ChannelRange r = channel_range(channel);
  // t = 1 maps exactly onto max.
  const double value = t == 1.0 ? r.max : r.min + t * (r.max - r.min);

  StimulusParams p = controls;
  auto line_mark = [&]() -> LineMark& {
    if (!p.line()) p.mark = default_params().mark;
    return std::get<LineMark>(p.mark);
  };
  switch (channel) {
    case ChannelId::Length: line_mark().length_pct = value; break;
    case ChannelId::Tilt: line_mark().tilt_deg = value; break;
    case ChannelId::Curvature: line_mark().curvature_deg = value; break;
    case ChannelId::Area: p.mark = SquareMark{value}; break;
    case ChannelId::Luminance: p.luminance_pct = value; break;
    case ChannelId::Saturation: p.saturation_pct = value; break;
  }
  return p;
}

std::string canonical_string(const StimulusParams& params) {
  char buf[320];
  if (const LineMark* l = params.line()) {
    std::snprintf(buf, sizeof buf,
                  "mark=line;length=%.17g;tilt=%.17g;curvature=%.17g;"
                  "luminance=%.17g;saturation=%.17g;hue=%.17g",
                  l->length_pct, l->tilt_deg, l->curvature_deg, params.luminance_pct,
                  params.saturation_pct, params.hue_deg);
  } else {
    std::snprintf(buf, sizeof buf,
                  "mark=square;area=%.17g;luminance=%.17g;saturation=%.17g;hue=%.17g",
                  params.square()->area_pct, params.luminance_pct,
                  params.saturation_pct, params.hue_deg);
  }
  return buf;
}

void validate(const RenderConfig& cfg) {
  if (cfg.canvas_px < 32) {
    throw DomainError("canvas_px must be >= 32");
  }
  if (cfg.stroke_px < 1 || 4 * cfg.stroke_px >= cfg.canvas_px) {
    throw DomainError("stroke_px must satisfy 1 <= stroke_px < canvas_px/4");
  }
}

std::string canonical_string(const RenderConfig& cfg) {
  return "canvas=" + std::to_string(cfg.canvas_px) +
         ";stroke=" + std::to_string(cfg.stroke_px) +
         ";antialias=" + (cfg.antialias ? "1" : "0") + ";background=white";
}

RasterImage::RasterImage(int w, int h, Rgb8 fill) : width(w), height(h) {
  pixels.resize(static_cast<std::size_t>(3) * static_cast<std::size_t>(w) *
                static_cast<std::size_t>(h));
  for (std::size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = fill.r;
    pixels[i + 1] = fill.g;
    pixels[i + 2] = fill.b;
  }
}

Rgb8 RasterImage::at(int x, int y) const {
  const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
  return {pixels[i], pixels[i + 1], pixels[i + 2]};
}

void RasterImage::set(int x, int y, Rgb8 c) {
  const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
  pixels[i] = c.r;
  pixels[i + 1] = c.g;
  pixels[i + 2] = c.b;
}

std::array<double, 3> hsl_to_rgb(double hue_deg, double saturation, double lightness) {
  const double chroma = (1.0 - std::abs(2.0 * lightness - 1.0)) * saturation;
  const double h = std::fmod(std::fmod(hue_deg, 360.0) + 360.0, 360.0) / 60.0;
  const double x = chroma * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  const double m = lightness - chroma / 2.0;
  double r = 0, g = 0, b = 0;
  if (h < 1) {
    r = chroma, g = x;
  } else if (h < 2) {
    r = x, g = chroma;
  } else if (h < 3) {
    g = chroma, b = x;
  } else if (h < 4) {
    g = x, b = chroma;
  } else if (h < 5) {
    r = x, b = chroma;
  } else {
    r = chroma, b = x;
  }
  return {r + m, g + m, b + m};
}

namespace {

struct Point {
  double x;
  double y;
};

double hypot2(double dx, double dy) { return std::sqrt(dx * dx + dy * dy); }

// Centreline of a line-like mark: a segment, or a circular arc whose chord
// midpoint sits at the canvas centre.
class Centerline {
 public:
  Centerline(const LineMark& line, double canvas) {
    const double length = line.length_pct * canvas;
    const double phi = line.curvature_deg * std::numbers::pi / 180.0;
    const double theta = line.tilt_deg * std::numbers::pi / 180.0;
    const Point mid{canvas / 2.0, canvas / 2.0};
    // Screen y grows downward, so counter-clockwise tilt subtracts sin.
    const Point u{std::cos(theta), -std::sin(theta)};
    const Point n{-std::sin(theta), -std::cos(theta)};

    if (phi < 1e-7 || length == 0.0) {
      arc_ = false;
      a_ = {mid.x - u.x * length / 2, mid.y - u.y * length / 2};
      b_ = {mid.x + u.x * length / 2, mid.y + u.y * length / 2};
      apex_ = mid;
    } else {
      arc_ = true;
      radius_ = length / phi;
      const double half_chord = radius_ * std::sin(phi / 2);
      const double center_offset = radius_ * std::cos(phi / 2);
      center_ = {mid.x - n.x * center_offset, mid.y - n.y * center_offset};
      normal_ = n;
      cos_half_ = std::cos(phi / 2);
      a_ = {mid.x - u.x * half_chord, mid.y - u.y * half_chord};
      b_ = {mid.x + u.x * half_chord, mid.y + u.y * half_chord};
      apex_ = {center_.x + n.x * radius_, center_.y + n.y * radius_};
    }
  }

  double distance(Point p) const {
    if (!arc_) {
      const double dx = b_.x - a_.x;
      const double dy = b_.y - a_.y;
      const double len2 = dx * dx + dy * dy;
      double s = 0.0;
      if (len2 > 0.0) {
        s = std::clamp(((p.x - a_.x) * dx + (p.y - a_.y) * dy) / len2, 0.0, 1.0);
      }
      return hypot2(p.x - (a_.x + s * dx), p.y - (a_.y + s * dy));
    }
    const double vx = p.x - center_.x;
    const double vy = p.y - center_.y;
    const double len = hypot2(vx, vy);
    if (len > 0.0 && (vx * normal_.x + vy * normal_.y) >= cos_half_ * len) {
      return std::abs(len - radius_);
    }
    if (len == 0.0) return radius_;
    return std::min(hypot2(p.x - a_.x, p.y - a_.y), hypot2(p.x - b_.x, p.y - b_.y));
  }

  std::array<Point, 3> extremes() const { return {a_, b_, apex_}; }

 private:
  bool arc_ = false;
  Point a_{};
  Point b_{};
  Point apex_{};
  Point center_{};
  Point normal_{};
  double radius_ = 0.0;
  double cos_half_ = 1.0;
};

constexpr int kSubsamples = 4;
// Half the pixel diagonal: the distance field is 1-Lipschitz, so a pixel whose
// centre is further than this from the stroke boundary is fully in or out.
constexpr double kHalfDiagonal = 0.70710678118654757;

std::uint8_t blend(double coverage, double color) {
  const double v = 255.0 * (1.0 - coverage + coverage * color);
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

void paint(RasterImage& img, int x, int y, double coverage,
           const std::array<double, 3>& rgb) {
  if (coverage <= 0.0) return;
  img.set(x, y, {blend(coverage, rgb[0]), blend(coverage, rgb[1]), blend(coverage, rgb[2])});
}

void draw_line(RasterImage& img, const LineMark& line, const RenderConfig& cfg,
               const std::array<double, 3>& rgb) {
  const double canvas = cfg.canvas_px;
  const Centerline path(line, canvas);
  for (const Point& e : path.extremes()) {
    if (e.x < -1e-9 || e.x > canvas + 1e-9 || e.y < -1e-9 || e.y > canvas + 1e-9) {
      throw RenderError("mark centreline leaves the canvas");
    }
  }
  const double half_width = cfg.stroke_px / 2.0;
  // Every centreline point lies within length/2 of the canvas centre.
  const double reach = line.length_pct * canvas / 2.0 + half_width + 1.0;
  const int lo = std::max(0, static_cast<int>(std::floor(canvas / 2.0 - reach)));
  const int hi = std::min(cfg.canvas_px - 1, static_cast<int>(std::ceil(canvas / 2.0 + reach)));

  for (int y = lo; y <= hi; ++y) {
    for (int x = lo; x <= hi; ++x) {
      const double d = path.distance({x + 0.5, y + 0.5});
      double coverage = 0.0;
      if (!cfg.antialias) {
        coverage = d <= half_width ? 1.0 : 0.0;
      } else if (d >= half_width + kHalfDiagonal) {
        coverage = 0.0;
      } else if (d <= half_width - kHalfDiagonal) {
        coverage = 1.0;
      } else {
        int hits = 0;
        for (int sy = 0; sy < kSubsamples; ++sy) {
          for (int sx = 0; sx < kSubsamples; ++sx) {
            const Point s{x + (sx + 0.5) / kSubsamples, y + (sy + 0.5) / kSubsamples};
            if (path.distance(s) <= half_width) ++hits;
          }
        }
        coverage = static_cast<double>(hits) / (kSubsamples * kSubsamples);
      }
      paint(img, x, y, coverage, rgb);
    }
  }
}

void draw_square(RasterImage& img, const SquareMark& square, const RenderConfig& cfg,
                 const std::array<double, 3>& rgb) {
  const double canvas = cfg.canvas_px;
  const double side = canvas * std::sqrt(square.area_pct);
  if (side <= 0.0) return;
  const double x0 = (canvas - side) / 2.0;
  const double x1 = x0 + side;
  const int lo = std::max(0, static_cast<int>(std::floor(x0)));
  const int hi = std::min(cfg.canvas_px - 1, static_cast<int>(std::ceil(x1)));
  auto overlap = [&](int p) {
    return std::max(0.0, std::min<double>(p + 1, x1) - std::max<double>(p, x0));
  };
  auto inside = [&](int p) { return p + 0.5 >= x0 && p + 0.5 < x1 ? 1.0 : 0.0; };
  for (int y = lo; y <= hi; ++y) {
    for (int x = lo; x <= hi; ++x) {
      const double coverage =
          cfg.antialias ? overlap(x) * overlap(y) : inside(x) * inside(y);
      paint(img, x, y, coverage, rgb);
    }
  }
}

}  // namespace

RasterImage render(const StimulusParams& params, const RenderConfig& cfg) {
  validate(params);
  validate(cfg);
  RasterImage img(cfg.canvas_px, cfg.canvas_px);
  const auto rgb = hsl_to_rgb(params.hue_deg, params.saturation_pct, params.luminance_pct);
  if (const LineMark* line = params.line()) {
    draw_line(img, *line, cfg, rgb);
  } else {
    draw_square(img, *params.square(), cfg, rgb);
  }
  return img;
}

}  // namespace chaneff::stimulus
