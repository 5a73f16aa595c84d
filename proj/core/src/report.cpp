/* Copyright 2026 The SmokeyNet Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "smokeynet/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "smokeynet/csv.hpp"
#include "smokeynet/error.hpp"

namespace smokeynet::eval {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kTableHeader = {
    "model",        "ttd_mean",  "ttd_sd",      "accuracy_mean", "accuracy_sd", "f1_mean",
    "f1_sd",        "precision_mean", "precision_sd", "recall_mean",   "recall_sd"};

constexpr const char* kPalette[] = {"#4e79a7", "#e15759", "#59a14f", "#f28e2b", "#76b7b2"};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  if (!out) fail(ErrorCode::kIo, fmt::format("cannot write '{}'", path.string()));
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, fmt::format("cannot open '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string table_to_string(const std::vector<MetricsReport>& reports) {
  csv::Table t{kTableHeader, {}};
  auto f = [](double v) { return csv::format_double(v); };
  for (const auto& r : reports) {
    t.rows.push_back({r.model, f(r.ttd.mean), f(r.ttd.sd), f(r.accuracy.mean), f(r.accuracy.sd),
                      f(r.f1.mean), f(r.f1.sd), f(r.precision.mean), f(r.precision.sd),
                      f(r.recall.mean), f(r.recall.sd)});
  }
  return csv::to_string(t);
}

std::vector<MetricsReport> parse_table(const std::string& text) {
  const auto t = csv::parse(text, "metrics table");
  for (const auto& name : kTableHeader) t.column(name);
  std::vector<MetricsReport> out;
  for (const auto& row : t.rows) {
    auto get = [&](const char* name) { return csv::parse_double(row[t.column(name)], name); };
    MetricsReport r;
    r.model = row[t.column("model")];
    r.ttd = {get("ttd_mean"), get("ttd_sd")};
    r.accuracy = {get("accuracy_mean"), get("accuracy_sd")};
    r.f1 = {get("f1_mean"), get("f1_sd")};
    r.precision = {get("precision_mean"), get("precision_sd")};
    r.recall = {get("recall_mean"), get("recall_sd")};
    out.push_back(std::move(r));
  }
  return out;
}

void write_table(const fs::path& path, const std::vector<MetricsReport>& reports) {
  write_text(path, table_to_string(reports));
}

std::vector<MetricsReport> read_table(const fs::path& path) {
  try {
    return parse_table(read_text(path));
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
}

std::string metric_distribution_svg(const std::vector<MetricsReport>& reports) {
  const char* names[] = {"accuracy", "precision", "recall", "f1"};
  const int panel_w = 220, panel_h = 220, margin = 40, top = 30;
  const int width = margin + 4 * (panel_w + margin);
  const int height = top + panel_h + 2 * margin + 20 * static_cast<int>(reports.size());
  std::ostringstream svg;
  svg << fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      width, height);
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int p = 0; p < 4; ++p) {
    const int x0 = margin + p * (panel_w + margin);
    const int y0 = top;
    svg << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                       x0 + panel_w / 2, y0 - 10, names[p]);
    svg << fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n", x0,
        y0, panel_w, panel_h);
    for (int tick = 0; tick <= 4; ++tick) {
      const double y = y0 + panel_h * (1.0 - tick / 4.0);
      svg << fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:.2f}</text>\n", x0 - 4,
                         y + 4, tick / 4.0);
    }
    const double slot = static_cast<double>(panel_w) / std::max<size_t>(1, reports.size());
    for (size_t m = 0; m < reports.size(); ++m) {
      const auto& r = reports[m];
      const double cx = x0 + slot * (m + 0.5);
      const char* color = kPalette[m % std::size(kPalette)];
      for (const auto& run : r.runs) {
        const double v[] = {run.accuracy, run.precision, run.recall, run.f1};
        svg << fmt::format(
            "<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"3\" fill=\"{}\" fill-opacity=\"0.7\"/>\n", cx,
            y0 + panel_h * (1.0 - std::clamp(v[p], 0.0, 1.0)), color);
      }
      const MetricStat* stat[] = {&r.accuracy, &r.precision, &r.recall, &r.f1};
      if (!std::isnan(stat[p]->mean)) {
        const double y = y0 + panel_h * (1.0 - std::clamp(stat[p]->mean, 0.0, 1.0));
        svg << fmt::format(
            "<line x1=\"{:.1f}\" x2=\"{:.1f}\" y1=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"{}\" "
            "stroke-width=\"2\"/>\n",
            cx - slot * 0.3, cx + slot * 0.3, y, y, color);
      }
    }
  }
  for (size_t m = 0; m < reports.size(); ++m) {
    const int y = top + panel_h + margin + 20 * static_cast<int>(m);
    svg << fmt::format("<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n", margin,
                       y - 10, kPalette[m % std::size(kPalette)]);
    svg << fmt::format("<text x=\"{}\" y=\"{}\">{} (n={})</text>\n", margin + 18, y,
                       escape(reports[m].model), reports[m].runs.size());
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string ttd_histogram_svg(const std::vector<std::pair<std::string, TtdResult>>& per_model,
                              int horizon) {
  const int bin_width = 5;
  const int bins = (horizon + bin_width - 1) / bin_width + 1;  // last bin: censored
  std::vector<std::vector<size_t>> counts(per_model.size(), std::vector<size_t>(bins, 0));
  size_t max_count = 1;
  for (size_t m = 0; m < per_model.size(); ++m) {
    for (const auto& f : per_model[m].second.fires) {
      const int b = f.ttd ? std::min(*f.ttd / bin_width, bins - 2) : bins - 1;
      max_count = std::max(max_count, ++counts[m][static_cast<size_t>(b)]);
    }
  }
  const int margin = 50, plot_w = 600, plot_h = 260, top = 30;
  const int legend = 20 * static_cast<int>(per_model.size());
  std::ostringstream svg;
  svg << fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      plot_w + 2 * margin, top + plot_h + 2 * margin + legend);
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << fmt::format("<text x=\"{}\" y=\"18\" text-anchor=\"middle\">time to detection (min)</text>\n",
                     margin + plot_w / 2);
  svg << fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n", margin,
      top, plot_w, plot_h);
  const double group_w = static_cast<double>(plot_w) / bins;
  const double bar_w = group_w * 0.8 / std::max<size_t>(1, per_model.size());
  for (int b = 0; b < bins; ++b) {
    const std::string label =
        b == bins - 1 ? "none" : fmt::format("{}-{}", b * bin_width, b * bin_width + bin_width - 1);
    svg << fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                       margin + group_w * (b + 0.5), top + plot_h + 14, label);
    for (size_t m = 0; m < per_model.size(); ++m) {
      const double h = plot_h * static_cast<double>(counts[m][static_cast<size_t>(b)]) /
                       static_cast<double>(max_count);
      svg << fmt::format(
          "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\"/>\n",
          margin + group_w * b + group_w * 0.1 + bar_w * m, top + plot_h - h, bar_w, h,
          kPalette[m % std::size(kPalette)]);
    }
  }
  svg << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", margin - 4, top + 4,
                     max_count);
  svg << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">0</text>\n", margin - 4,
                     top + plot_h);
  for (size_t m = 0; m < per_model.size(); ++m) {
    const int y = top + plot_h + 40 + 20 * static_cast<int>(m);
    svg << fmt::format("<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n", margin,
                       y - 10, kPalette[m % std::size(kPalette)]);
    svg << fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", margin + 18, y,
                       escape(per_model[m].first));
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<MetricsReport> write_suite_report(const fs::path& out_dir,
                                              const std::vector<ArmLogs>& arms, double threshold,
                                              int horizon) {
  std::vector<MetricsReport> reports;
  std::vector<std::pair<std::string, TtdResult>> ttds;
  for (const auto& arm : arms) {
    if (arm.runs.empty()) fail(ErrorCode::kInvalidArgument, fmt::format("model {} has no runs", arm.model));
    std::vector<RunMetrics> runs;
    TtdResult pooled;
    for (const auto& [run_id, log] : arm.runs) {
      try {
        runs.push_back(evaluate_run(run_id, log, threshold, horizon));
        const auto t = time_to_detection(log, threshold, horizon);
        pooled.fires.insert(pooled.fires.end(), t.fires.begin(), t.fires.end());
        pooled.censored += t.censored;
      } catch (const Error& e) {
        rethrow_with_context(e, fmt::format("{} run {}", arm.model, run_id));
      }
    }
    reports.push_back(aggregate_runs(arm.model, runs));
    write_metrics_report(out_dir / (arm.model + "_metrics.csv"), reports.back());
    ttds.emplace_back(arm.model, std::move(pooled));
  }
  write_table(out_dir / "table.csv", reports);
  write_text(out_dir / "plots" / "metrics.svg", metric_distribution_svg(reports));
  write_text(out_dir / "plots" / "ttd_histogram.svg", ttd_histogram_svg(ttds, horizon));
  return reports;
}

}  // namespace smokeynet::eval
