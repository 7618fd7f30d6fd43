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

#ifndef FWATTEST_REPORT_HPP_
#define FWATTEST_REPORT_HPP_

#include <string>
#include <vector>

#include "fwattest/harness.hpp"

namespace fwattest::report {

struct JsonOptions {
  // Latency varies run to run; leave it out to keep reports byte-identical
  // for a fixed seed.
  bool include_latency = false;
  bool include_trials = false;
};

// {"scenarios":[...]} with scenario, mode, trials, successes, reasons
// histogram and (optionally) latency stats.
std::string scenarios_json(const std::vector<harness::ScenarioReport>& reports,
                           const JsonOptions& options = {});

// One row per report. Header only for an empty list.
std::string scenarios_table(
    const std::vector<harness::ScenarioReport>& reports);

// Rows = scenarios, columns = Baseline / FAARM outcome.
std::string outcome_matrix(const std::vector<harness::ScenarioReport>& reports);

// Rows = scenarios, columns = Baseline / FAARM success rate.
std::string success_rate_table(
    const std::vector<harness::ScenarioReport>& reports);

// Matrix cell text for one report, e.g. "Success", "Blocked (hash check,
// signature check)", "Allowed & locked".
std::string outcome_cell(const harness::ScenarioReport& report);

// scenario,mode,trial,verify_ms,lock_ms,total_ms,outcome
std::string latency_csv(const std::vector<harness::ScenarioReport>& reports);

std::string bench_text(const harness::BenchReport& report);
std::string bench_json(const harness::BenchReport& report,
                       bool include_samples = false);
// run,verify_ms,lock_ms,total_ms
std::string bench_csv(const harness::BenchReport& report);

}  // namespace fwattest::report

#endif  // FWATTEST_REPORT_HPP_
