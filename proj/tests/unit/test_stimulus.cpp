#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "chaneff/error.hpp"
#include "chaneff/png_codec.hpp"
#include "chaneff/stimulus.hpp"

using namespace chaneff::stimulus;
using chaneff::DomainError;
using chaneff::ParseError;

namespace {

bool white(Rgb8 c) { return c == Rgb8{}; }

struct Extent {
  int x0 = 1 << 30, x1 = -1, y0 = 1 << 30, y1 = -1;
  int ink = 0;
};

Extent ink_extent(const RasterImage& img) {
  Extent e;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (!white(img.at(x, y))) {
        e.x0 = std::min(e.x0, x);
        e.x1 = std::max(e.x1, x);
        e.y0 = std::min(e.y0, y);
        e.y1 = std::max(e.y1, y);
        ++e.ink;
      }
  return e;
}

StimulusParams line(double length, double tilt = 0, double curvature = 0) {
  StimulusParams p = default_params();
  p.mark = LineMark{length, tilt, curvature};
  return p;
}

StimulusParams square(double area) {
  StimulusParams p = default_params();
  p.mark = SquareMark{area};
  return p;
}

}  // namespace

TEST(Channels, NamesRoundTrip) {
  for (ChannelId c : kAllChannels) EXPECT_EQ(parse_channel(channel_name(c)), c);
  EXPECT_EQ(parse_channel("LUMINANCE"), ChannelId::Luminance);
  EXPECT_FALSE(parse_channel("hue"));
  EXPECT_EQ(channel_label(ChannelId::Saturation), "Color Saturation");
}

TEST(Channels, Ranges) {
  EXPECT_EQ(channel_range(ChannelId::Tilt).max, 90.0);
  EXPECT_EQ(channel_range(ChannelId::Curvature).max, 180.0);
  EXPECT_EQ(channel_range(ChannelId::Length).max, 1.0);
}

TEST(Params, DefaultsAreARedHalfLengthLine) {
  const auto p = default_params();
  ASSERT_NE(p.line(), nullptr);
  EXPECT_EQ(p.line()->length_pct, 0.5);
  EXPECT_EQ(p.luminance_pct, 0.5);
  EXPECT_EQ(p.saturation_pct, 1.0);
  EXPECT_FALSE(channel_value(p, ChannelId::Area));
  const auto rgb = hsl_to_rgb(0, 1, 0.5);
  EXPECT_DOUBLE_EQ(rgb[0], 1.0);
  EXPECT_DOUBLE_EQ(rgb[1], 0.0);
}

TEST(Params, ParamsForHitsEndpointsExactly) {
  const auto base = default_params();
  EXPECT_EQ(*channel_value(params_for(ChannelId::Tilt, 1.0, base), ChannelId::Tilt), 90.0);
  EXPECT_EQ(*channel_value(params_for(ChannelId::Curvature, 0.0, base), ChannelId::Curvature), 0.0);
  EXPECT_EQ(*channel_value(params_for(ChannelId::Curvature, 0.5, base), ChannelId::Curvature), 90.0);
  EXPECT_THROW(params_for(ChannelId::Length, 1.5, base), DomainError);
}

TEST(Params, AreaSwitchesMarkKind) {
  const auto sq = params_for(ChannelId::Area, 0.25, default_params());
  EXPECT_EQ(sq.kind(), MarkKind::Square);
  EXPECT_FALSE(channel_value(sq, ChannelId::Length));
  const auto back = params_for(ChannelId::Tilt, 0.5, sq);
  ASSERT_NE(back.line(), nullptr);
  EXPECT_EQ(back.line()->length_pct, 0.5);
  EXPECT_EQ(back.line()->tilt_deg, 45.0);
}

TEST(Params, ValidateRejectsOutOfRange) {
  EXPECT_THROW(validate(line(1.2)), DomainError);
  EXPECT_THROW(validate(line(0.5, 91)), DomainError);
  EXPECT_THROW(validate(line(0.5, 0, -1)), DomainError);
  auto p = default_params();
  p.hue_deg = 10;
  EXPECT_THROW(validate(p), DomainError);
  p = default_params();
  p.luminance_pct = std::nan("");
  EXPECT_THROW(validate(p), DomainError);
}

TEST(Params, CanonicalStringIsStable) {
  EXPECT_EQ(canonical_string(default_params()),
            "mark=line;length=0.5;tilt=0;curvature=0;luminance=0.5;saturation=1;hue=0");
  EXPECT_EQ(canonical_string(square(0.1)),
            "mark=square;area=0.10000000000000001;luminance=0.5;saturation=1;hue=0");
  EXPECT_EQ(canonical_string(RenderConfig{}), "canvas=336;stroke=4;antialias=1;background=white");
}

TEST(RenderConfigTest, Validation) {
  EXPECT_NO_THROW(validate(RenderConfig{}));
  EXPECT_THROW(validate(RenderConfig{16, 2, true}), DomainError);
  EXPECT_THROW(validate(RenderConfig{64, 16, true}), DomainError);
  EXPECT_THROW(validate(RenderConfig{64, 0, true}), DomainError);
}

TEST(Render, Deterministic) {
  const auto a = render(line(0.7, 30, 60));
  const auto b = render(line(0.7, 30, 60));
  EXPECT_EQ(a, b);
  EXPECT_EQ(encode_png(a), encode_png(b));
}

TEST(Render, HorizontalLineGeometry) {
  const auto img = render(line(0.5), {336, 4, false});
  const auto e = ink_extent(img);
  EXPECT_EQ(e.y0, 166);
  EXPECT_EQ(e.y1, 169);
  // Round caps extend half a stroke past each end.
  EXPECT_NEAR(e.x1 - e.x0 + 1, 168 + 4, 1);
  EXPECT_EQ(img.at(168, 168), (Rgb8{255, 0, 0}));
}

TEST(Render, FullLengthLineFitsCanvas) {
  EXPECT_NO_THROW(render(line(1.0)));
  EXPECT_NO_THROW(render(line(1.0, 90)));
  EXPECT_NO_THROW(render(line(1.0, 45, 180)));
}

TEST(Render, TiltIsCounterClockwise) {
  const auto img = render(line(0.5, 45));
  EXPECT_FALSE(white(img.at(168 + 40, 168 - 40)));
  EXPECT_TRUE(white(img.at(168 + 40, 168 + 40)));
  const auto vertical = ink_extent(render(line(0.5, 90), {336, 4, false}));
  EXPECT_EQ(vertical.x1 - vertical.x0 + 1, 4);
}

TEST(Render, SemicircleChordAndBulge) {
  const double length = 168.0;
  const auto e = ink_extent(render(line(0.5, 0, 180)));
  const double chord = 2.0 * length / std::numbers::pi;
  EXPECT_NEAR(e.x1 - e.x0 + 1 - 4, chord, 2.0);
  // Bulge points up: the apex lies radius above the canvas centre.
  EXPECT_NEAR(168 - e.y0 - 2, length / std::numbers::pi, 2.0);
  EXPECT_LE(e.y1, 168 + 3);
}

TEST(Render, ZeroLengthDrawsADot) {
  const auto e = ink_extent(render(line(0.0)));
  EXPECT_GT(e.ink, 0);
  EXPECT_LE(e.x1 - e.x0 + 1, 6);
}

TEST(Render, SquareAreaIsExact) {
  const auto img = render(square(0.25), {336, 4, true});
  const auto e = ink_extent(img);
  EXPECT_EQ(e.ink, 168 * 168);
  EXPECT_EQ(e.x0, 84);
  EXPECT_EQ(e.x1, 251);
  EXPECT_EQ(ink_extent(render(square(0.0))).ink, 0);
}

TEST(Render, LuminanceExtremes) {
  auto p = default_params();
  p.luminance_pct = 1.0;
  EXPECT_EQ(ink_extent(render(p)).ink, 0);
  p.luminance_pct = 0.0;
  EXPECT_EQ(render(p).at(168, 168), (Rgb8{0, 0, 0}));
  p.luminance_pct = 0.5;
  p.saturation_pct = 0.0;
  EXPECT_EQ(render(p).at(168, 168), (Rgb8{128, 128, 128}));
}

TEST(Png, RoundTripAndStableBytes) {
  const auto img = render(line(0.6, 20, 90), {64, 2, true});
  const auto bytes = encode_png(img);
  ASSERT_GT(bytes.size(), 8u);
  EXPECT_EQ(bytes[1], 'P');
  EXPECT_EQ(decode_png(bytes), img);
  EXPECT_EQ(encode_png(decode_png(bytes)), bytes);
  EXPECT_THROW(decode_png(std::vector<std::uint8_t>{1, 2, 3}), ParseError);
}
