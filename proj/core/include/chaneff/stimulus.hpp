#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace chaneff::stimulus {

/// The six magnitude channels, in the order humans perceive them most
/// accurately (length first, curvature last).
enum class ChannelId : std::uint8_t {
  Length,
  Tilt,
  Area,
  Luminance,
  Saturation,
  Curvature,
};

inline constexpr std::array<ChannelId, 6> kAllChannels = {
    ChannelId::Length,    ChannelId::Tilt,       ChannelId::Area,
    ChannelId::Luminance, ChannelId::Saturation, ChannelId::Curvature,
};

/// Lowercase identifier used in files and on the command line ("luminance").
std::string_view channel_name(ChannelId channel);
/// Human-readable label for figures ("Color Luminance").
std::string_view channel_label(ChannelId channel);
/// Accepts channel_name() spellings, case-insensitively.
std::optional<ChannelId> parse_channel(std::string_view name);

struct ChannelRange {
  double min = 0.0;
  double max = 1.0;
  std::string_view unit;

  friend bool operator==(const ChannelRange&, const ChannelRange&) = default;
};

ChannelRange channel_range(ChannelId channel);

enum class MarkKind : std::uint8_t { LineLike, Square };

/// Straight segment or circular arc. Length is a fraction of the canvas side.
struct LineMark {
  double length_pct = 0.5;
  double tilt_deg = 0.0;
  double curvature_deg = 0.0;

  friend bool operator==(const LineMark&, const LineMark&) = default;
};

/// Filled axis-aligned square. Area is a fraction of the canvas area.
struct SquareMark {
  double area_pct = 0.0;

  friend bool operator==(const SquareMark&, const SquareMark&) = default;
};

/// One point in the stimulus space. The mark variant encodes which geometric
/// channels are present: line channels and area are mutually exclusive.
struct StimulusParams {
  std::variant<LineMark, SquareMark> mark = LineMark{};
  double luminance_pct = 0.5;
  double saturation_pct = 1.0;
  double hue_deg = 0.0;

  MarkKind kind() const {
    return std::holds_alternative<LineMark>(mark) ? MarkKind::LineLike : MarkKind::Square;
  }
  const LineMark* line() const { return std::get_if<LineMark>(&mark); }
  const SquareMark* square() const { return std::get_if<SquareMark>(&mark); }

  friend bool operator==(const StimulusParams&, const StimulusParams&) = default;
};

/// The controlled value of every channel: a red line at half length, no
/// tilt or curvature, no square.
StimulusParams default_params();

/// Throws DomainError when a field is outside its channel range or hue != 0.
void validate(const StimulusParams& params);

/// Value of `channel` in `params`, or nullopt when the mark does not carry it.
std::optional<double> channel_value(const StimulusParams& params, ChannelId channel);

/// `controls` with `channel` set to min + t*(max-min). Selecting Area turns
/// the mark into a square; selecting a line channel on a square control set
/// restores a default line.
StimulusParams params_for(ChannelId channel, double t, const StimulusParams& controls);

/// Stable text form used for content hashing. Doubles are printed with
/// round-trip precision.
std::string canonical_string(const StimulusParams& params);

struct RenderConfig {
  int canvas_px = 336;
  int stroke_px = 4;
  bool antialias = true;

  friend bool operator==(const RenderConfig&, const RenderConfig&) = default;
};

/// Throws DomainError unless canvas_px >= 32 and 1 <= stroke_px < canvas_px / 4.
void validate(const RenderConfig& cfg);

std::string canonical_string(const RenderConfig& cfg);

struct Rgb8 {
  std::uint8_t r = 255;
  std::uint8_t g = 255;
  std::uint8_t b = 255;

  friend bool operator==(const Rgb8&, const Rgb8&) = default;
};

/// Row-major RGB8 raster.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RasterImage() = default;
  RasterImage(int w, int h, Rgb8 fill = {});

  Rgb8 at(int x, int y) const;
  void set(int x, int y, Rgb8 c);

  friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

/// HSL -> RGB in [0,1]; hue in degrees.
std::array<double, 3> hsl_to_rgb(double hue_deg, double saturation, double lightness);

/// Draws the mark centred on a white canvas. Bit-deterministic.
RasterImage render(const StimulusParams& params, const RenderConfig& cfg = {});

}  // namespace chaneff::stimulus
