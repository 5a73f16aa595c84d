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

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "smokeynet/metrics.hpp"

namespace smokeynet::eval {

// model,ttd_mean,ttd_sd,accuracy_mean,accuracy_sd,f1_mean,f1_sd,
// precision_mean,precision_sd,recall_mean,recall_sd
std::string table_to_string(const std::vector<MetricsReport>& reports);
std::vector<MetricsReport> parse_table(const std::string& text);
void write_table(const std::filesystem::path& path, const std::vector<MetricsReport>& reports);
std::vector<MetricsReport> read_table(const std::filesystem::path& path);

// Prediction logs of every run of one model.
struct ArmLogs {
  std::string model;
  std::vector<std::pair<std::string, PredictionLog>> runs;  // (run id, log)
};

// Per-run accuracy/precision/recall/F1 for every model, one panel per metric.
std::string metric_distribution_svg(const std::vector<MetricsReport>& reports);
// Histogram of per-fire detection times, one series per model; censored
// fires get their own bin past the horizon.
std::string ttd_histogram_svg(const std::vector<std::pair<std::string, TtdResult>>& per_model,
                              int horizon);

/// Writes table.csv, <model>_metrics.csv and plots/{metrics,ttd_histogram}.svg
/// under `out_dir` and returns the aggregated reports in input order.
std::vector<MetricsReport> write_suite_report(const std::filesystem::path& out_dir,
                                              const std::vector<ArmLogs>& arms,
                                              double threshold = kDefaultThreshold,
                                              int horizon = kDefaultHorizon);

}  // namespace smokeynet::eval
