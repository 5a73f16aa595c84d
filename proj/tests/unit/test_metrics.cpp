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

#include <doctest.h>

#include <cmath>
#include <random>

#include "smokeynet/csv.hpp"
#include "smokeynet/error.hpp"
#include "smokeynet/metrics.hpp"
#include "smokeynet/report.hpp"
#include "test_support.hpp"

using namespace smokeynet;
using namespace smokeynet::eval;

namespace {

PredictionLog random_log(uint64_t seed, int fires) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PredictionLog log;
  for (int f = 0; f < fires; ++f) {
    const double bias = u(rng) * 0.6;
    for (int o = -39; o <= 39; ++o) {
      const double p = std::clamp(u(rng) * 0.7 + (o >= 0 ? bias : 0.0), 0.0, 1.0);
      log.rows.push_back({"f" + std::to_string(f), o, p, o >= 0});
    }
  }
  return log;
}

std::optional<int> scan_first_positive(const PredictionLog& log, const std::string& fire,
                                       double threshold, int horizon) {
  for (int o = 0; o < horizon; ++o) {
    for (const auto& r : log.rows) {
      if (r.fire_id == fire && r.minute_offset == o && r.image_probability >= threshold) return o;
    }
  }
  return std::nullopt;
}

RunMetrics run_with_f1(const std::string& id, double f1) {
  RunMetrics r;
  r.run_id = id;
  r.accuracy = 0.5 + f1 / 4;
  r.precision = f1;
  r.recall = f1;
  r.f1 = f1;
  r.ttd_mean = 10.0 * f1;
  r.ttd_sd = 1.0;
  r.fire_count = 4;
  return r;
}

}  // namespace

TEST_CASE("confusion count examples") {
  PredictionLog all_pos;
  for (int i = 0; i < 7; ++i) all_pos.rows.push_back({"a", i, 1.0, true});
  CHECK(confusion_counts(all_pos) == ConfusionCounts{7, 0, 0, 0});

  PredictionLog exact;
  for (int i = 0; i < 10; ++i) exact.rows.push_back({"a", i, i % 3 == 0 ? 1.0 : 0.0, i % 3 == 0});
  const auto c = confusion_counts(exact, 0.5);
  CHECK(c.fp + c.fn == 0);

  // Hand enumerated: probabilities vs labels at 0.5.
  PredictionLog fx;
  const double probs[10] = {0.9, 0.6, 0.5, 0.49, 0.2, 0.7, 0.1, 0.55, 0.3, 0.0};
  const bool labels[10] = {true, false, true, true, false, false, false, true, false, false};
  for (int i = 0; i < 10; ++i) fx.rows.push_back({"a", i, probs[i], labels[i]});
  // positives: 0 (T), 1 (F), 2 (T), 5 (F), 7 (T)  -> TP 3, FP 2
  // negatives: 3 (T), 4, 6, 8, 9                  -> FN 1, TN 4
  CHECK(confusion_counts(fx, 0.5) == ConfusionCounts{3, 2, 4, 1});

  CHECK_THROWS_AS(confusion_counts(PredictionLog{}, 0.5), Error);
  CHECK_THROWS_AS(confusion_counts(fx, 0.0), Error);
  CHECK_THROWS_AS(confusion_counts(fx, 1.0), Error);
}

TEST_CASE("prf examples") {
  const auto m = prf_metrics({2, 1, 6, 1});
  CHECK(m.accuracy == doctest::Approx(0.8));
  CHECK(m.precision == doctest::Approx(2.0 / 3.0));
  CHECK(m.recall == doctest::Approx(2.0 / 3.0));
  CHECK(m.f1 == doctest::Approx(2.0 / 3.0));
  const auto none = prf_metrics({0, 0, 5, 3});
  CHECK(none.precision == 0.0);
  CHECK(none.f1 == 0.0);
  const auto perfect = prf_metrics({4, 0, 6, 0});
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);
}

TEST_CASE("confusion and prf agree with brute force") {
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const auto log = random_log(seed, 3);
    const double thr = 0.05 + 0.9 * static_cast<double>(seed) / 100.0;
    double tp = 0, fp = 0, tn = 0, fn = 0;
    for (const auto& r : log.rows) {
      const bool p = r.image_probability >= thr;
      (p ? (r.image_label ? tp : fp) : (r.image_label ? fn : tn)) += 1;
    }
    const auto m = prf_metrics(confusion_counts(log, thr));
    const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    CHECK(std::abs(m.accuracy - (tp + tn) / (tp + fp + tn + fn)) < 1e-12);
    CHECK(std::abs(m.precision - prec) < 1e-12);
    CHECK(std::abs(m.recall - rec) < 1e-12);
    CHECK(std::abs(m.f1 - (prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0)) < 1e-12);
  }
}

TEST_CASE("time to detection examples") {
  PredictionLog log;
  for (int o = -39; o <= 39; ++o) log.rows.push_back({"a", o, o >= 3 ? 0.9 : 0.1, o >= 0});
  for (int o = -39; o <= 39; ++o) log.rows.push_back({"b", o, o == -5 || o >= 0 ? 0.9 : 0.1, o >= 0});
  for (int o = -39; o <= 39; ++o) log.rows.push_back({"c", o, 0.2, o >= 0});
  const auto r = time_to_detection(log);
  REQUIRE(r.fires.size() == 3);
  CHECK(r.fires[0].ttd == 3);
  CHECK(r.fires[1].ttd == 0);
  CHECK_FALSE(r.fires[2].ttd.has_value());
  CHECK(r.censored == 1);
  CHECK(r.mean == doctest::Approx(1.5));
  CHECK(r.sd == doctest::Approx(std::sqrt(4.5)));

  PredictionLog gap = log;
  gap.rows.erase(std::remove_if(gap.rows.begin(), gap.rows.end(),
                                [](const auto& row) { return row.fire_id == "b" && row.minute_offset == 12; }),
                 gap.rows.end());
  try {
    time_to_detection(gap);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("b") != std::string::npos);
  }
  PredictionLog all_censored;
  for (int o = 0; o < 40; ++o) all_censored.rows.push_back({"z", o, 0.0, true});
  CHECK(std::isnan(time_to_detection(all_censored).mean));
}

TEST_CASE("time to detection matches a first-positive scan and is monotone in threshold") {
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const auto log = random_log(1000 + seed, 4);
    std::vector<std::optional<int>> previous;
    for (double thr : {0.3, 0.5, 0.7, 0.9}) {
      const auto r = time_to_detection(log, thr, 40);
      std::vector<double> hits;
      size_t censored = 0;
      for (size_t f = 0; f < r.fires.size(); ++f) {
        const auto expected = scan_first_positive(log, r.fires[f].fire_id, thr, 40);
        CHECK(r.fires[f].ttd == expected);
        if (expected) {
          hits.push_back(*expected);
        } else {
          ++censored;
        }
        if (!previous.empty() && previous[f]) {
          CHECK((!r.fires[f].ttd || *r.fires[f].ttd >= *previous[f]));
        }
      }
      CHECK(r.censored == censored);
      if (!hits.empty()) {
        double mean = 0.0;
        for (double h : hits) mean += h / static_cast<double>(hits.size());
        CHECK(std::abs(r.mean - mean) < 1e-12);
      }
      previous.clear();
      for (const auto& f : r.fires) previous.push_back(f.ttd);
    }
  }
}

TEST_CASE("aggregate runs") {
  auto one = aggregate_runs("m", {run_with_f1("r1", 0.7)});
  CHECK(one.f1.sd == 0.0);
  CHECK(one.n_runs == 1);
  auto two = aggregate_runs("m", {run_with_f1("r1", 0.7), run_with_f1("r2", 0.8)});
  CHECK(two.f1.mean == doctest::Approx(0.75));
  CHECK(two.f1.sd == doctest::Approx(0.0707).epsilon(1e-3));
  CHECK(std::abs(two.f1.sd - std::sqrt(0.005)) < 1e-12);
  std::vector<RunMetrics> same(8, run_with_f1("r", 0.6));
  const auto eight = aggregate_runs("m", same);
  CHECK(eight.f1.sd == 0.0);
  CHECK(eight.accuracy.sd == 0.0);
  CHECK(eight.ttd.sd == 0.0);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<RunMetrics> runs;
    const int n = 2 + trial % 7;
    for (int i = 0; i < n; ++i) runs.push_back(run_with_f1("r" + std::to_string(i), u(rng)));
    const auto rep = aggregate_runs("m", runs);
    double mean = 0.0;
    for (const auto& r : runs) mean += r.f1 / n;
    double ss = 0.0;
    for (const auto& r : runs) ss += (r.f1 - mean) * (r.f1 - mean);
    CHECK(std::abs(rep.f1.mean - mean) < 1e-12);
    CHECK(std::abs(rep.f1.sd - std::sqrt(ss / (n - 1))) < 1e-12);
  }
}

TEST_CASE("metrics report round trips exactly") {
  testing::TempDir dir("report");
  std::vector<RunMetrics> runs;
  for (uint64_t s = 0; s < 3; ++s) runs.push_back(evaluate_run("seed_" + std::to_string(s), random_log(s, 5)));
  const auto rep = aggregate_runs("real_weather", runs);
  write_metrics_report(dir / "m.csv", rep);
  const auto back = read_metrics_report(dir / "m.csv");
  CHECK(metrics_report_to_string(back) == metrics_report_to_string(rep));
  REQUIRE(back.runs.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(back.runs[i].f1 == rep.runs[i].f1);
    CHECK(back.runs[i].ttd_mean == rep.runs[i].ttd_mean);
  }
  CHECK(back.f1.sd == rep.f1.sd);

  auto text = metrics_report_to_string(rep);
  const auto pos = text.find("mean,");
  REQUIRE(pos != std::string::npos);
  text.replace(text.find(',', pos + 5) + 1, 1, "9");
  CHECK_THROWS_AS(parse_metrics_report(text), Error);
}

TEST_CASE("prediction log io") {
  testing::TempDir dir("pred");
  const auto log = random_log(9, 2);
  write_prediction_log(dir / "p.csv", log);
  const auto back = read_prediction_log(dir / "p.csv");
  REQUIRE(back.rows.size() == log.rows.size());
  for (size_t i = 0; i < log.rows.size(); ++i) {
    CHECK(back.rows[i].image_probability == log.rows[i].image_probability);
    CHECK(back.rows[i].minute_offset == log.rows[i].minute_offset);
  }
  CHECK(csv::read(dir / "p.csv").header ==
        std::vector<std::string>{"fire_id", "minute_offset", "image_probability", "image_label"});
  PredictionLog dup = log;
  dup.rows.push_back(dup.rows.front());
  CHECK_THROWS_AS(dup.validate(), Error);
  PredictionLog bad = log;
  bad.rows[0].image_probability = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("suite report table has three rows and ten value columns") {
  testing::TempDir dir("suite_report");
  std::vector<ArmLogs> arms;
  for (const char* name : {"baseline", "random_weather", "real_weather"}) {
    ArmLogs a{name, {}};
    a.runs.emplace_back("seed_1", random_log(std::hash<std::string>{}(name), 3));
    arms.push_back(a);
  }
  const auto reports = write_suite_report(dir.path(), arms);
  CHECK(reports.size() == 3);
  const auto table = csv::read(dir / "table.csv");
  CHECK(table.rows.size() == 3);
  CHECK(table.header.size() == 11);
  const auto parsed = read_table(dir / "table.csv");
  REQUIRE(parsed.size() == 3);
  CHECK(table_to_string(parsed) == table_to_string(reports));
  for (size_t i = 0; i < 3; ++i) {
    CHECK(parsed[i].model == reports[i].model);
    CHECK(parsed[i].f1.mean == reports[i].f1.mean);
    CHECK(parsed[i].ttd.mean == reports[i].ttd.mean);
  }
  CHECK(std::filesystem::exists(dir / "baseline_metrics.csv"));
  const auto svg = testing::read_file(dir / "plots" / "metrics.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(testing::read_file(dir / "plots" / "ttd_histogram.svg").find("real_weather") != std::string::npos);
}
