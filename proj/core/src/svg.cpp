#include <algorithm>
#include <cstdio>
#include <sstream>

#include "chaneff/codec.hpp"
#include "chaneff/report.hpp"

namespace chaneff::report {

using codec::format_g9;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

class Svg {
 public:
  Svg(double width, double height) {
    out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
         << num(height) << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height)
         << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
         << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height)
         << "\" fill=\"white\"/>\n";
  }

  Svg& line(double x1, double y1, double x2, double y2, std::string_view stroke,
            std::string_view extra = {}) {
    out_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
         << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke << "\"";
    if (!extra.empty()) out_ << ' ' << extra;
    out_ << "/>\n";
    return *this;
  }

  Svg& text(double x, double y, std::string_view content, std::string_view anchor = "start",
            std::string_view extra = {}) {
    out_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"" << anchor
         << "\"";
    if (!extra.empty()) out_ << ' ' << extra;
    out_ << '>' << content << "</text>\n";
    return *this;
  }

  Svg& raw(std::string_view s) {
    out_ << s;
    return *this;
  }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  std::ostringstream out_;
};

std::string attr(std::string_view name, std::string_view value) {
  return std::string(name) + "=\"" + std::string(value) + "\"";
}

// Channels present in `have`, in human accuracy order.
template <class T>
std::vector<const T*> in_human_order(const std::vector<T>& have) {
  std::vector<const T*> out;
  for (const auto& e : metrics::human_ranking().entries) {
    for (const T& item : have) {
      if (item.channel == e.channel) out.push_back(&item);
    }
  }
  return out;
}

double score_x(double v) { return kScoreAxisLeft + v * kScoreAxisWidth; }

void score_axis(Svg& svg, double y_top, double y_bottom) {
  svg.line(score_x(0), y_bottom, score_x(1), y_bottom, "black");
  for (double tick : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    svg.line(score_x(tick), y_top, score_x(tick), y_bottom, "#dddddd");
    svg.text(score_x(tick), y_bottom + 16, format_g9(tick), "middle");
  }
}

}  // namespace

std::string distance_plot_svg(const metrics::DistanceProfile& profile) {
  constexpr double kWidth = 720, kHeight = 280;
  constexpr double kLeft = 70, kRight = 700, kTop = 40, kBottom = 240;
  const std::string label(stimulus::channel_label(profile.channel));
  const std::vector<double>& ys = profile.smoothed;

  double y_max = ys.empty() ? 0.0 : *std::max_element(ys.begin(), ys.end());
  const bool flat = !(y_max > 0.0);
  const double y_scale = flat ? 1.0 : y_max;
  auto px = [&](std::size_t i) {
    return ys.size() < 2 ? kLeft
                         : kLeft + (kRight - kLeft) * static_cast<double>(i) /
                                       static_cast<double>(ys.size() - 1);
  };
  auto py = [&](double v) { return kBottom - (kBottom - kTop) * v / y_scale; };

  Svg svg(kWidth, kHeight);
  svg.text(kWidth / 2, 22, label + ": smoothed consecutive distance (sigma " +
                               format_g9(profile.sigma) + ")",
           "middle", attr("font-size", "14"));
  svg.line(kLeft, kBottom, kRight, kBottom, "black");
  svg.line(kLeft, kTop, kLeft, kBottom, "black");
  svg.text(kLeft - 6, kBottom + 4, "0", "end");
  if (!flat) svg.text(kLeft - 6, kTop + 4, format_g9(y_max), "end");
  svg.text((kLeft + kRight) / 2, kBottom + 30, "step", "middle");

  std::ostringstream pts;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    if (i) pts << ' ';
    pts << num(px(i)) << ',' << num(py(ys[i]));
  }
  svg.raw("<polyline class=\"distance\" fill=\"none\" stroke=\"#c62828\" stroke-width=\"1.5\" "
          "points=\"" + pts.str() + "\"/>\n");

  for (std::size_t k = 0; k < profile.peaks.indices.size(); ++k) {
    const std::size_t idx = profile.peaks.indices[k];
    std::ostringstream c;
    c << "<circle class=\"peak\" data-index=\"" << idx << "\" data-prominence=\""
      << format_g9(profile.peaks.prominences[k]) << "\" cx=\"" << num(px(idx)) << "\" cy=\""
      << num(py(ys[idx])) << "\" r=\"4\" fill=\"none\" stroke=\"black\"/>\n";
    svg.raw(c.str());
  }
  return svg.finish();
}

std::string linearity_bar_svg(const RunReport& report) {
  const auto rows = in_human_order(report.linearity);
  constexpr double kTop = 40, kRow = 32;
  const double bottom = kTop + kRow * static_cast<double>(std::max<std::size_t>(rows.size(), 1));
  Svg svg(kScoreAxisLeft + kScoreAxisWidth + 120, bottom + 40);
  svg.text(kScoreAxisLeft + kScoreAxisWidth / 2, 22, "Linearity (PC1 explained variance)",
           "middle", attr("font-size", "14"));
  score_axis(svg, kTop, bottom);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = *rows[i];
    const double y = kTop + kRow * static_cast<double>(i);
    std::ostringstream bar;
    bar << "<rect class=\"bar\" data-channel=\"" << stimulus::channel_name(r.channel)
        << "\" data-score=\"" << format_g9(r.score) << "\" x=\"" << num(score_x(0)) << "\" y=\""
        << num(y + 6) << "\" width=\"" << num(r.score * kScoreAxisWidth)
        << "\" height=\"" << num(kRow - 12) << "\" fill=\"#1565c0\"/>\n";
    svg.raw(bar.str());
    svg.text(kScoreAxisLeft - 8, y + kRow / 2 + 4, stimulus::channel_label(r.channel), "end");
    svg.text(score_x(r.score) + 6, y + kRow / 2 + 4, format_g9(r.score));
  }
  return svg.finish();
}

std::string factorial_box_svg(const RunReport& report) {
  std::vector<FactorialSummary> scored;
  for (const auto& f : report.factorial) {
    if (!f.cell_scores.empty()) scored.push_back(f);
  }
  const auto rows = in_human_order(scored);
  constexpr double kTop = 40, kRow = 36;
  const double bottom = kTop + kRow * static_cast<double>(std::max<std::size_t>(rows.size(), 1));
  Svg svg(kScoreAxisLeft + kScoreAxisWidth + 40, bottom + 40);
  svg.text(kScoreAxisLeft + kScoreAxisWidth / 2, 22,
           "Factorial linearity (whiskers: min and max)", "middle", attr("font-size", "14"));
  score_axis(svg, kTop, bottom);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const FactorialSummary& f = *rows[i];
    const metrics::BoxStats& s = f.stats;
    const double mid = kTop + kRow * (static_cast<double>(i) + 0.5);
    const std::string channel(stimulus::channel_name(f.channel));
    svg.raw("<g class=\"boxplot\" data-channel=\"" + channel + "\">\n");
    svg.line(score_x(s.min), mid, score_x(s.max), mid, "black",
             "class=\"whisker\" " + attr("data-min", format_g9(s.min)) + ' ' +
                 attr("data-max", format_g9(s.max)));
    svg.line(score_x(s.min), mid - 8, score_x(s.min), mid + 8, "black",
             "class=\"whisker-cap\" " + attr("data-value", format_g9(s.min)));
    svg.line(score_x(s.max), mid - 8, score_x(s.max), mid + 8, "black",
             "class=\"whisker-cap\" " + attr("data-value", format_g9(s.max)));
    std::ostringstream box;
    box << "<rect class=\"box\" data-q1=\"" << format_g9(s.q1) << "\" data-q3=\""
        << format_g9(s.q3) << "\" x=\"" << num(score_x(s.q1)) << "\" y=\"" << num(mid - 10)
        << "\" width=\"" << num((s.q3 - s.q1) * kScoreAxisWidth)
        << "\" height=\"20\" fill=\"#90caf9\" stroke=\"black\"/>\n";
    svg.raw(box.str());
    svg.line(score_x(s.median), mid - 10, score_x(s.median), mid + 10, "black",
             "class=\"median\" stroke-width=\"2\" " + attr("data-value", format_g9(s.median)));
    svg.text(kScoreAxisLeft - 8, mid + 4, stimulus::channel_label(f.channel), "end");
    svg.raw("</g>\n");
  }
  return svg.finish();
}

}  // namespace chaneff::report
