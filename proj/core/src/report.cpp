#include "chaneff/report.hpp"

#include <algorithm>
#include <sstream>

#include "chaneff/codec.hpp"
#include "chaneff/error.hpp"

namespace chaneff::report {

namespace fs = std::filesystem;
using codec::format_g9;

std::optional<RankingComparison> compare_to_human(const std::map<ChannelId, double>& scores,
                                                  double tie_epsilon) {
  if (scores.size() < 2) return std::nullopt;
  RankingComparison cmp;
  cmp.model = metrics::rank_channels(scores, tie_epsilon);
  const std::vector<ChannelId> present = cmp.model.channels();
  cmp.human = metrics::human_ranking().restricted_to(present);
  try {
    cmp.tau_b = metrics::kendall_tau_b(cmp.model, cmp.human);
  } catch (const DomainError&) {
    cmp.tau_b.reset();
  }
  return cmp;
}

void finalize_rankings(RunReport& report) {
  std::map<ChannelId, double> single;
  for (const auto& r : report.linearity) single[r.channel] = r.score;
  report.linearity_ranking = compare_to_human(single, report.meta.tie_epsilon);

  std::map<ChannelId, double> medians;
  for (const auto& f : report.factorial) {
    if (!f.cell_scores.empty()) medians[f.channel] = f.stats.median;
  }
  report.factorial_ranking = compare_to_human(medians, report.meta.tie_epsilon);
}

namespace {

template <class T>
void merge_by_channel(std::vector<T>& into, const std::vector<T>& from) {
  for (const T& item : from) {
    auto it = std::find_if(into.begin(), into.end(),
                           [&](const T& x) { return x.channel == item.channel; });
    if (it != into.end()) {
      *it = item;
    } else {
      into.push_back(item);
    }
  }
  std::stable_sort(into.begin(), into.end(),
                   [](const T& a, const T& b) { return a.channel < b.channel; });
}

}  // namespace

RunReport merge_reports(std::span<const RunReport> parts) {
  RunReport out;
  if (parts.empty()) return out;
  out.meta = parts.front().meta;
  out.meta.channels.clear();
  for (const RunReport& part : parts) {
    merge_by_channel(out.linearity, part.linearity);
    merge_by_channel(out.factorial, part.factorial);
    merge_by_channel(out.discriminability, part.discriminability);
    out.meta.complete = out.meta.complete && part.meta.complete;
    if (&part != &parts.front()) {
      out.meta.errors.insert(out.meta.errors.end(), part.meta.errors.begin(),
                             part.meta.errors.end());
    }
    // Fragments only carry the settings of the stage that produced them.
    if (out.meta.steps == 0) out.meta.steps = part.meta.steps;
    if (!out.meta.factorial_steps) out.meta.factorial_steps = part.meta.factorial_steps;
    if (!part.discriminability.empty()) {
      out.meta.sigma_mode = part.meta.sigma_mode;
      out.meta.peak_threshold = part.meta.peak_threshold;
    }
    for (ChannelId c : part.meta.channels) {
      if (std::find(out.meta.channels.begin(), out.meta.channels.end(), c) ==
          out.meta.channels.end()) {
        out.meta.channels.push_back(c);
      }
    }
  }
  std::sort(out.meta.channels.begin(), out.meta.channels.end());
  finalize_rankings(out);
  return out;
}

std::vector<fs::path> emit_tables(const RunReport& report, const fs::path& out_dir) {
  std::vector<fs::path> written;
  auto emit = [&](std::string_view name, const std::string& content) {
    const fs::path path = out_dir / name;
    codec::write_file_atomic(path, content);
    written.push_back(path);
  };

  std::ostringstream lin;
  lin << "channel,score,n,dim\n";
  for (const auto& r : report.linearity) {
    lin << stimulus::channel_name(r.channel) << ',' << format_g9(r.score) << ',' << r.n << ','
        << r.dim << '\n';
  }
  emit("linearity.csv", lin.str());

  std::ostringstream box;
  box << "channel,steps,cells,degenerate_cells,min,q1,median,q3,max\n";
  for (const auto& f : report.factorial) {
    box << stimulus::channel_name(f.channel) << ',' << f.steps << ',' << f.cell_scores.size()
        << ',' << f.degenerate_cells.size() << ',' << format_g9(f.stats.min) << ','
        << format_g9(f.stats.q1) << ',' << format_g9(f.stats.median) << ','
        << format_g9(f.stats.q3) << ',' << format_g9(f.stats.max) << '\n';
  }
  emit("box_stats.csv", box.str());

  std::ostringstream dist;
  dist << "channel,index,raw,smoothed\n";
  for (const auto& p : report.discriminability) {
    for (std::size_t i = 0; i < p.raw.size(); ++i) {
      dist << stimulus::channel_name(p.channel) << ',' << i << ',' << format_g9(p.raw[i]) << ','
           << format_g9(p.smoothed[i]) << '\n';
    }
  }
  emit("distances.csv", dist.str());

  std::ostringstream peaks;
  peaks << "channel,sigma,threshold_frac,peak,index,smoothed,prominence\n";
  for (const auto& p : report.discriminability) {
    for (std::size_t k = 0; k < p.peaks.indices.size(); ++k) {
      const std::size_t idx = p.peaks.indices[k];
      peaks << stimulus::channel_name(p.channel) << ',' << format_g9(p.sigma) << ','
            << format_g9(p.peaks.threshold_frac) << ',' << k << ',' << idx << ','
            << format_g9(p.smoothed[idx]) << ',' << format_g9(p.peaks.prominences[k]) << '\n';
    }
  }
  emit("peaks.csv", peaks.str());

  emit("report.json", to_json(report));
  return written;
}

std::vector<fs::path> emit_figures(const RunReport& report, const fs::path& out_dir) {
  std::vector<fs::path> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    const fs::path path = out_dir / name;
    codec::write_file_atomic(path, content);
    written.push_back(path);
  };
  for (const auto& p : report.discriminability) {
    emit("distance_" + std::string(stimulus::channel_name(p.channel)) + ".svg",
         distance_plot_svg(p));
  }
  emit("linearity_bar.svg", linearity_bar_svg(report));
  emit("factorial_box.svg", factorial_box_svg(report));
  return written;
}

RunReport load_report(const fs::path& path) {
  return parse_report_json(codec::read_text_file(path));
}

}  // namespace chaneff::report
