/*
 *
 * Copyright 2026 The fwattest Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#include "fwattest/report.hpp"

#include <gtest/gtest.h>

#include "json.hpp"

namespace fwattest::report {
namespace {

using harness::Mode;
using harness::Scenario;
using harness::ScenarioKind;
using harness::ScenarioReport;

std::vector<ScenarioReport> run_all(Mode mode, std::uint64_t seed = 3,
                                    std::uint32_t trials = 6) {
  std::vector<ScenarioReport> out;
  for (auto k : harness::kAllScenarios) {
    Scenario s;
    s.kind = k;
    s.mode = mode;
    s.trials = trials;
    s.seed = seed;
    s.firmware_size = 4096;
    out.push_back(harness::run_scenario(s));
  }
  return out;
}

TEST(Report, EmptyListRendersEmptyTables) {
  std::string table = scenarios_table({});
  EXPECT_NE(table.find("Scenario"), std::string::npos);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 2);
  auto j = nlohmann::json::parse(scenarios_json({}));
  EXPECT_TRUE(j["scenarios"].empty());
  std::string matrix = outcome_matrix({});
  EXPECT_EQ(std::count(matrix.begin(), matrix.end(), '\n'), 2);
}

TEST(Report, MonitorMatrixBlocksEveryAdversarialRow) {
  auto faarm = run_all(Mode::kFaarm);
  auto base = run_all(Mode::kBaseline);
  std::vector<ScenarioReport> all = base;
  all.insert(all.end(), faarm.begin(), faarm.end());
  for (const auto& r : faarm) {
    std::string cell = outcome_cell(r);
    if (harness::is_adversarial(r.scenario.kind)) {
      EXPECT_EQ(cell.rfind("Blocked (", 0), 0u) << cell;
    } else {
      EXPECT_EQ(cell.rfind("Allowed & locked", 0), 0u) << cell;
    }
  }
  for (const auto& r : base) {
    std::string cell = outcome_cell(r);
    EXPECT_EQ(cell.rfind(harness::is_adversarial(r.scenario.kind) ? "Success"
                                                                  : "Allowed",
                         0),
              0u)
        << cell;
  }
  std::string matrix = outcome_matrix(all);
  EXPECT_NE(matrix.find("NV-counter"), std::string::npos);
  EXPECT_NE(matrix.find("signature check"), std::string::npos);
  EXPECT_NE(matrix.find("region lock"), std::string::npos);
  EXPECT_NE(matrix.find("ToctouOverwrite"), std::string::npos);
  std::string rates = success_rate_table(all);
  EXPECT_NE(rates.find("100% (legitimate)"), std::string::npos);
  EXPECT_NE(rates.find("0%"), std::string::npos);
}

TEST(Report, JsonIsDeterministicForAFixedSeed) {
  std::string a = scenarios_json(run_all(Mode::kFaarm, 9));
  std::string b = scenarios_json(run_all(Mode::kFaarm, 9));
  EXPECT_EQ(a, b);
  auto j = nlohmann::json::parse(a);
  ASSERT_EQ(j["scenarios"].size(), 5u);
  auto& first = j["scenarios"][0];
  for (const char* key : {"scenario", "mode", "trials", "successes", "reasons",
                          "config", "reconciled"}) {
    EXPECT_TRUE(first.contains(key)) << key;
  }
  EXPECT_FALSE(first.contains("latency"));
}

TEST(Report, JsonWithLatencyAndTrials) {
  auto reps = run_all(Mode::kFaarm);
  auto j = nlohmann::json::parse(
      scenarios_json(reps, {.include_latency = true, .include_trials = true}));
  auto& rollback = j["scenarios"][4];
  EXPECT_EQ(rollback["scenario"], "RollbackLoad");
  EXPECT_EQ(rollback["reasons"]["Rollback"], 6);
  EXPECT_EQ(rollback["latency"]["total"]["samples"], 6);
  EXPECT_EQ(rollback["trial_records"].size(), 6u);
}

TEST(Report, CsvHasOneRowPerTrial) {
  auto reps = run_all(Mode::kFaarm);
  std::string csv = latency_csv(reps);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 5 * 6);
  EXPECT_EQ(csv.rfind("scenario,mode,trial,verify_ms,lock_ms,total_ms", 0), 0u);
}

TEST(Report, BenchRenderings) {
  harness::BenchConfig c;
  c.firmware_size = 4096;
  c.runs = 4;
  c.warmup = 1;
  auto r = harness::bench(c);
  std::string text = bench_text(r);
  EXPECT_NE(text.find("Total VerifyAndLock"), std::string::npos);
  EXPECT_NE(text.find("1.56"), std::string::npos);
  auto j = nlohmann::json::parse(bench_json(r, true));
  EXPECT_EQ(j["latency"]["total"]["samples"], 4);
  EXPECT_EQ(j["samples"]["total_ms"].size(), 4u);
  EXPECT_DOUBLE_EQ(j["reference"]["total"]["mean_ms"].get<double>(), 1.56);
  std::string csv = bench_csv(r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

}  // namespace
}  // namespace fwattest::report
