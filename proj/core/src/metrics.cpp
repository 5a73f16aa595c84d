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

#include "smokeynet/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "smokeynet/csv.hpp"
#include "smokeynet/error.hpp"

namespace smokeynet::eval {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::string> kLogHeader = {"fire_id", "minute_offset", "image_probability",
                                             "image_label"};
const std::vector<std::string> kReportHeader = {
    "model", "run_id", "accuracy", "precision", "recall", "f1",
    "ttd_mean", "ttd_sd", "censored_fire_count", "fire_count"};

double ratio(size_t num, size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

bool same_value(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b));
}

}  // namespace

void PredictionLog::validate() const {
  std::set<std::pair<std::string, int>> seen;
  for (const auto& r : rows) {
    if (!(r.image_probability >= 0.0 && r.image_probability <= 1.0)) {
      fail(ErrorCode::kDataError, fmt::format("fire {} offset {}: probability {} outside [0, 1]",
                                              r.fire_id, r.minute_offset, r.image_probability));
    }
    if (!seen.emplace(r.fire_id, r.minute_offset).second) {
      fail(ErrorCode::kDataError,
           fmt::format("fire {}: duplicate row for offset {}", r.fire_id, r.minute_offset));
    }
  }
}

std::vector<std::string> PredictionLog::fire_ids() const {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& r : rows) {
    if (seen.insert(r.fire_id).second) ids.push_back(r.fire_id);
  }
  return ids;
}

void write_prediction_log(const std::filesystem::path& path, const PredictionLog& log) {
  csv::Table t{kLogHeader, {}};
  for (const auto& r : log.rows) {
    t.rows.push_back({r.fire_id, std::to_string(r.minute_offset),
                      csv::format_double(r.image_probability), r.image_label ? "1" : "0"});
  }
  csv::write(path, t);
}

PredictionLog read_prediction_log(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const size_t c_fire = t.column("fire_id");
  const size_t c_off = t.column("minute_offset");
  const size_t c_prob = t.column("image_probability");
  const size_t c_label = t.column("image_label");
  PredictionLog log;
  for (const auto& row : t.rows) {
    PredictionRow r;
    r.fire_id = row[c_fire];
    r.minute_offset = static_cast<int>(csv::parse_long(row[c_off], "minute_offset"));
    r.image_probability = csv::parse_double(row[c_prob], "image_probability");
    const long label = csv::parse_long(row[c_label], "image_label");
    if (label != 0 && label != 1) fail(ErrorCode::kDataError, "image_label must be 0 or 1");
    r.image_label = label == 1;
    log.rows.push_back(std::move(r));
  }
  log.validate();
  return log;
}

ConfusionCounts confusion_counts(const PredictionLog& log, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    fail(ErrorCode::kInvalidArgument, fmt::format("threshold {} outside (0, 1)", threshold));
  }
  if (log.rows.empty()) fail(ErrorCode::kInvalidArgument, "confusion_counts: empty prediction log");
  ConfusionCounts c;
  for (const auto& r : log.rows) {
    const bool pred = r.image_probability >= threshold;
    if (pred && r.image_label) ++c.tp;
    else if (pred) ++c.fp;
    else if (r.image_label) ++c.fn;
    else ++c.tn;
  }
  return c;
}

ClassificationMetrics prf_metrics(const ConfusionCounts& c) {
  ClassificationMetrics m;
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.f1 = m.precision + m.recall > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

MetricStat mean_sd(const std::vector<double>& values) {
  if (values.empty()) return {kNaN, kNaN};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

TtdResult time_to_detection(const PredictionLog& log, double threshold, int horizon) {
  if (horizon < 1) fail(ErrorCode::kInvalidArgument, "horizon must be positive");
  std::map<std::string, std::map<int, double>> by_fire;
  for (const auto& r : log.rows) by_fire[r.fire_id][r.minute_offset] = r.image_probability;

  TtdResult out;
  std::vector<double> detected;
  for (const auto& id : log.fire_ids()) {
    const auto& frames = by_fire.at(id);
    FireDetection d{id, std::nullopt};
    for (int t = 0; t < horizon; ++t) {
      const auto it = frames.find(t);
      if (it == frames.end()) {
        fail(ErrorCode::kDataError,
             fmt::format("fire {}: missing prediction for offset {}", id, t));
      }
      if (!d.ttd && it->second >= threshold) d.ttd = t;
    }
    if (d.ttd) detected.push_back(*d.ttd);
    else ++out.censored;
    out.fires.push_back(std::move(d));
  }
  const auto stat = mean_sd(detected);
  out.mean = stat.mean;
  out.sd = detected.empty() ? kNaN : stat.sd;
  return out;
}

RunMetrics evaluate_run(const std::string& run_id, const PredictionLog& log, double threshold,
                        int horizon) {
  log.validate();
  const auto m = prf_metrics(confusion_counts(log, threshold));
  const auto ttd = time_to_detection(log, threshold, horizon);
  RunMetrics r;
  r.run_id = run_id;
  r.accuracy = m.accuracy;
  r.precision = m.precision;
  r.recall = m.recall;
  r.f1 = m.f1;
  r.ttd_mean = ttd.mean;
  r.ttd_sd = ttd.sd;
  r.censored_fire_count = ttd.censored;
  r.fire_count = ttd.fires.size();
  return r;
}

void MetricsReport::recompute() {
  std::vector<double> acc, prec, rec, f1s, ttds;
  censored_fire_count = 0;
  for (const auto& r : runs) {
    acc.push_back(r.accuracy);
    prec.push_back(r.precision);
    rec.push_back(r.recall);
    f1s.push_back(r.f1);
    if (!std::isnan(r.ttd_mean)) ttds.push_back(r.ttd_mean);
    censored_fire_count += r.censored_fire_count;
  }
  accuracy = mean_sd(acc);
  precision = mean_sd(prec);
  recall = mean_sd(rec);
  f1 = mean_sd(f1s);
  ttd = mean_sd(ttds);
  n_runs = runs.size();
}

MetricsReport aggregate_runs(const std::string& model, const std::vector<RunMetrics>& runs) {
  MetricsReport report;
  report.model = model;
  report.runs = runs;
  report.recompute();
  return report;
}

MetricsReport aggregate_runs(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) fail(ErrorCode::kInvalidArgument, "aggregate_runs: no reports");
  std::vector<RunMetrics> runs;
  for (const auto& r : reports) runs.insert(runs.end(), r.runs.begin(), r.runs.end());
  return aggregate_runs(reports.front().model, runs);
}

std::string metrics_report_to_string(const MetricsReport& report) {
  csv::Table t{kReportHeader, {}};
  auto f = [](double v) { return csv::format_double(v); };
  size_t fires = 0;
  for (const auto& r : report.runs) {
    t.rows.push_back({report.model, r.run_id, f(r.accuracy), f(r.precision), f(r.recall), f(r.f1),
                      f(r.ttd_mean), f(r.ttd_sd), std::to_string(r.censored_fire_count),
                      std::to_string(r.fire_count)});
    fires += r.fire_count;
  }
  t.rows.push_back({report.model, "mean", f(report.accuracy.mean), f(report.precision.mean),
                    f(report.recall.mean), f(report.f1.mean), f(report.ttd.mean), "",
                    std::to_string(report.censored_fire_count), std::to_string(fires)});
  t.rows.push_back({report.model, "sd", f(report.accuracy.sd), f(report.precision.sd),
                    f(report.recall.sd), f(report.f1.sd), f(report.ttd.sd), "", "", ""});
  return csv::to_string(t);
}

MetricsReport parse_metrics_report(const std::string& text) {
  const auto t = csv::parse(text, "metrics report");
  for (const auto& name : kReportHeader) t.column(name);
  auto col = [&t](const std::vector<std::string>& row, const char* name) {
    return row[t.column(name)];
  };
  MetricsReport report;
  std::optional<std::vector<std::string>> mean_row, sd_row;
  for (const auto& row : t.rows) {
    if (report.model.empty()) report.model = col(row, "model");
    else if (col(row, "model") != report.model) {
      fail(ErrorCode::kDataError, "metrics report mixes several models");
    }
    const std::string id = col(row, "run_id");
    if (id == "mean") { mean_row = row; continue; }
    if (id == "sd") { sd_row = row; continue; }
    RunMetrics r;
    r.run_id = id;
    r.accuracy = csv::parse_double(col(row, "accuracy"), "accuracy");
    r.precision = csv::parse_double(col(row, "precision"), "precision");
    r.recall = csv::parse_double(col(row, "recall"), "recall");
    r.f1 = csv::parse_double(col(row, "f1"), "f1");
    r.ttd_mean = csv::parse_double(col(row, "ttd_mean"), "ttd_mean");
    r.ttd_sd = csv::parse_double(col(row, "ttd_sd"), "ttd_sd");
    r.censored_fire_count =
        static_cast<size_t>(csv::parse_long(col(row, "censored_fire_count"), "censored_fire_count"));
    r.fire_count = static_cast<size_t>(csv::parse_long(col(row, "fire_count"), "fire_count"));
    report.runs.push_back(std::move(r));
  }
  if (!mean_row || !sd_row) fail(ErrorCode::kDataError, "metrics report lacks mean/sd rows");
  report.recompute();
  const std::pair<const char*, const MetricStat*> stats[] = {
      {"accuracy", &report.accuracy}, {"precision", &report.precision}, {"recall", &report.recall},
      {"f1", &report.f1}, {"ttd_mean", &report.ttd}};
  for (const auto& [name, stat] : stats) {
    const double m = csv::parse_double(col(*mean_row, name), name);
    const double s = csv::parse_double(col(*sd_row, name), name);
    if (!same_value(m, stat->mean) || !same_value(s, stat->sd)) {
      fail(ErrorCode::kDataError,
           fmt::format("metrics report: stored {} aggregate disagrees with per-run values", name));
    }
  }
  return report;
}

void write_metrics_report(const std::filesystem::path& path, const MetricsReport& report) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << metrics_report_to_string(report);
  if (!out) fail(ErrorCode::kIo, fmt::format("cannot write '{}'", path.string()));
}

MetricsReport read_metrics_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, fmt::format("cannot open '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_metrics_report(ss.str());
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
}

}  // namespace smokeynet::eval
