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

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace smokeynet::eval {

inline constexpr double kDefaultThreshold = 0.5;
inline constexpr int kDefaultHorizon = 40;

struct PredictionRow {
  std::string fire_id;
  int minute_offset = 0;
  double image_probability = 0.0;
  bool image_label = false;
};

// One row per (fire_id, offset); rows of a fire are kept contiguous.
struct PredictionLog {
  std::vector<PredictionRow> rows;

  void validate() const;
  std::vector<std::string> fire_ids() const;  // first-appearance order
};

// Columns: fire_id,minute_offset,image_probability,image_label
void write_prediction_log(const std::filesystem::path& path, const PredictionLog& log);
PredictionLog read_prediction_log(const std::filesystem::path& path);

struct ConfusionCounts {
  size_t tp = 0;
  size_t fp = 0;
  size_t tn = 0;
  size_t fn = 0;

  size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

// A prediction is positive iff probability >= threshold.
ConfusionCounts confusion_counts(const PredictionLog& log, double threshold = kDefaultThreshold);

struct ClassificationMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

ClassificationMetrics prf_metrics(const ConfusionCounts& counts);

struct FireDetection {
  std::string fire_id;
  std::optional<int> ttd;  // nullopt when censored
};

struct TtdResult {
  std::vector<FireDetection> fires;
  double mean = 0.0;  // over detected fires; NaN when none
  double sd = 0.0;    // sample SD over detected fires
  size_t censored = 0;
};

/// First offset in [0, horizon) predicted positive, per fire. Every fire must
/// have all of those offsets in the log.
TtdResult time_to_detection(const PredictionLog& log, double threshold = kDefaultThreshold,
                            int horizon = kDefaultHorizon);

struct RunMetrics {
  std::string run_id;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double ttd_mean = 0.0;
  double ttd_sd = 0.0;  // across the run's detected fires
  size_t censored_fire_count = 0;
  size_t fire_count = 0;
};

RunMetrics evaluate_run(const std::string& run_id, const PredictionLog& log,
                        double threshold = kDefaultThreshold, int horizon = kDefaultHorizon);

struct MetricStat {
  double mean = 0.0;
  double sd = 0.0;
};

// Sample mean and (n-1) SD; SD is 0 for a single value, both NaN when empty.
MetricStat mean_sd(const std::vector<double>& values);

struct MetricsReport {
  std::string model;
  std::vector<RunMetrics> runs;
  // Aggregates over runs. TTD skips runs that detected no fire.
  MetricStat accuracy;
  MetricStat precision;
  MetricStat recall;
  MetricStat f1;
  MetricStat ttd;
  size_t n_runs = 0;
  size_t censored_fire_count = 0;  // summed over runs

  // Recomputes aggregates from `runs`.
  void recompute();
};

MetricsReport aggregate_runs(const std::string& model, const std::vector<RunMetrics>& runs);
MetricsReport aggregate_runs(const std::vector<MetricsReport>& reports);

// One row per run followed by "mean" and "sd" rows. Reading verifies the
// stored aggregates against the per-run values.
void write_metrics_report(const std::filesystem::path& path, const MetricsReport& report);
MetricsReport read_metrics_report(const std::filesystem::path& path);
std::string metrics_report_to_string(const MetricsReport& report);
MetricsReport parse_metrics_report(const std::string& text);

}  // namespace smokeynet::eval
