#include <gtest/gtest.h>

#include <regex>

#include "chaneff/codec.hpp"
#include "chaneff/error.hpp"
#include "chaneff/report.hpp"
#include "temp_dir.hpp"

using namespace chaneff;
using namespace chaneff::report;
using stimulus::ChannelId;

namespace {

RunReport sample() {
  RunReport r;
  r.meta.tool_version = "0.0.0";
  r.meta.backend = "mock:linear";
  r.meta.model_id = "mock:linear";
  r.meta.steps = 5;
  r.meta.channels = {ChannelId::Length, ChannelId::Tilt, ChannelId::Saturation};
  r.linearity = {{ChannelId::Length, 0.95, 5, 8}, {ChannelId::Tilt, 0.9, 5, 8},
                 {ChannelId::Saturation, 0.1 + 0.2, 5, 8}};
  FactorialSummary f;
  f.channel = ChannelId::Tilt;
  f.steps = 3;
  f.cell_scores = {0.2, 0.4, 0.9, 0.6};
  f.degenerate_cells = {4};
  f.stats = metrics::box_stats(f.cell_scores);
  r.factorial = {f};
  metrics::DistanceProfile p;
  p.channel = ChannelId::Length;
  p.sigma = 1.0;
  p.raw = {0.1, 0.5, 0.1, 0.1};
  p.smoothed = {0.1, 0.4, 0.2, 0.1};
  p.peaks = metrics::detect_peaks(p.smoothed);
  r.discriminability = {p};
  finalize_rankings(r);
  return r;
}

// First <tag ...> element containing `fragment`; returns its numeric attribute or -1.
double attr(const std::string& svg, const std::string& tag, const std::string& fragment,
            const std::string& name) {
  const std::regex element("<" + tag + "\\b[^>]*>");
  const std::regex value("\\b" + name + "=\"([-0-9.e]+)\"");
  for (std::sregex_iterator it(svg.begin(), svg.end(), element), end; it != end; ++it) {
    const std::string el = it->str();
    if (el.find(fragment) == std::string::npos) continue;
    std::smatch m;
    if (!std::regex_search(el, m, value)) return -1.0;
    return std::stod(m[1]);
  }
  return -1.0;
}

}  // namespace

TEST(ReportJson, RoundTripIsExact) {
  const RunReport r = sample();
  const std::string text = to_json(r);
  EXPECT_EQ(parse_report_json(text), r);
  EXPECT_NE(text.find("\"padding\": \"reflect\""), std::string::npos);
  EXPECT_NE(text.find("0.30000000000000004"), std::string::npos);
  EXPECT_THROW(parse_report_json("{\"schema\":\"other\"}"), ParseError);
  EXPECT_THROW(parse_report_json("not json"), ParseError);
}

TEST(Rankings, ComparedAgainstHumanOrder) {
  const RunReport r = sample();
  ASSERT_TRUE(r.linearity_ranking);
  EXPECT_EQ(r.linearity_ranking->human.channels(),
            (std::vector<ChannelId>{ChannelId::Length, ChannelId::Tilt, ChannelId::Saturation}));
  EXPECT_DOUBLE_EQ(*r.linearity_ranking->tau_b, 1.0);
  EXPECT_FALSE(r.factorial_ranking);  // one channel only
}

TEST(Merge, CombinesFragments) {
  RunReport a, b;
  a.meta.steps = 0;
  a.meta.factorial_steps = 3;
  a.factorial = sample().factorial;
  a.meta.channels = {ChannelId::Tilt};
  b.meta.steps = 5;
  b.meta.sigma_mode = "2";
  b.linearity = {{ChannelId::Curvature, 0.5, 5, 8}, {ChannelId::Length, 0.7, 5, 8}};
  b.discriminability = sample().discriminability;
  b.meta.channels = {ChannelId::Length, ChannelId::Curvature};
  b.meta.complete = false;
  b.meta.errors = {"x"};
  const std::vector<RunReport> parts{a, b};
  const RunReport m = merge_reports(parts);
  EXPECT_EQ(m.meta.steps, 5u);
  EXPECT_EQ(m.meta.factorial_steps, 3u);
  EXPECT_EQ(m.meta.sigma_mode, "2");
  EXPECT_FALSE(m.meta.complete);
  EXPECT_EQ(m.meta.errors, std::vector<std::string>{"x"});
  EXPECT_EQ(m.linearity.front().channel, ChannelId::Length);
  EXPECT_EQ(m.meta.channels,
            (std::vector<ChannelId>{ChannelId::Length, ChannelId::Tilt, ChannelId::Curvature}));
  ASSERT_TRUE(m.linearity_ranking);
}

TEST(Tables, CsvLayout) {
  TempDir dir;
  const auto written = emit_tables(sample(), dir.path());
  EXPECT_EQ(written.size(), 5u);
  EXPECT_EQ(codec::read_text_file(dir / "linearity.csv"),
            "channel,score,n,dim\nlength,0.95,5,8\ntilt,0.9,5,8\nsaturation,0.3,5,8\n");
  EXPECT_EQ(codec::read_text_file(dir / "box_stats.csv"),
            "channel,steps,cells,degenerate_cells,min,q1,median,q3,max\n"
            "tilt,3,4,1,0.2,0.35,0.5,0.675,0.9\n");
  EXPECT_EQ(codec::read_text_file(dir / "peaks.csv"),
            "channel,sigma,threshold_frac,peak,index,smoothed,prominence\n"
            "length,1,0.05,0,1,0.4,0.3\n");
  const std::string dist = codec::read_text_file(dir / "distances.csv");
  EXPECT_TRUE(dist.starts_with("channel,index,raw,smoothed\nlength,0,0.1,0.1\n"));
}

TEST(Figures, BoxWhiskersSpanMinToMax) {
  const RunReport r = sample();
  const std::string svg = factorial_box_svg(r);
  const auto& s = r.factorial.front().stats;
  EXPECT_DOUBLE_EQ(attr(svg, "line", "class=\"whisker\"", "data-min"), s.min);
  EXPECT_DOUBLE_EQ(attr(svg, "line", "class=\"whisker\"", "data-max"), s.max);
  EXPECT_NEAR(attr(svg, "line", "class=\"whisker\"", "x1"), kScoreAxisLeft + s.min * kScoreAxisWidth, 1e-3);
  EXPECT_NEAR(attr(svg, "line", "class=\"whisker\"", "x2"), kScoreAxisLeft + s.max * kScoreAxisWidth, 1e-3);
  EXPECT_NEAR(attr(svg, "rect", "class=\"box\"", "x"), kScoreAxisLeft + s.q1 * kScoreAxisWidth, 1e-3);
  EXPECT_NEAR(attr(svg, "line", "class=\"median\"", "x1"), kScoreAxisLeft + s.median * kScoreAxisWidth, 1e-3);
}

TEST(Figures, BarsInHumanOrderAndPeaksMarked) {
  const RunReport r = sample();
  const std::string bars = linearity_bar_svg(r);
  const auto first = bars.find("data-channel=\"length\"");
  const auto second = bars.find("data-channel=\"tilt\"");
  const auto third = bars.find("data-channel=\"saturation\"");
  EXPECT_LT(first, second);
  EXPECT_LT(second, third);
  EXPECT_NEAR(attr(bars, "rect", "class=\"bar\" data-channel=\"tilt\"", "width"), 0.9 * kScoreAxisWidth, 1e-3);

  const std::string dist = distance_plot_svg(r.discriminability.front());
  EXPECT_EQ(attr(dist, "circle", "class=\"peak\"", "data-index"), 1.0);
  EXPECT_NE(dist.find("Length: smoothed consecutive distance"), std::string::npos);
}

TEST(Figures, EmittedFiles) {
  TempDir dir;
  const auto files = emit_figures(sample(), dir.path());
  ASSERT_EQ(files.size(), 3u);
  EXPECT_EQ(files[0].filename(), "distance_length.svg");
  EXPECT_TRUE(codec::read_text_file(files[1]).starts_with("<?xml"));
}
