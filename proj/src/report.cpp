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

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "json.hpp"

namespace fwattest::report {

namespace {

using harness::BenchReport;
using harness::LatencyStats;
using harness::Mode;
using harness::ScenarioKind;
using harness::ScenarioReport;
using Json = nlohmann::ordered_json;

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string percent(std::uint32_t k, std::uint32_t n) {
  if (n == 0) return "n/a";
  return fixed(100.0 * k / n, 0) + "%";
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) {
    rows_.push_back(std::move(header));
  }
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  std::string render() const {
    std::vector<std::size_t> width(rows_.front().size(), 0);
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        width[i] = std::max(width[i], r[i].size());
      }
    }
    std::string out;
    auto line = [&](const std::vector<std::string>& r) {
      std::string l;
      for (std::size_t i = 0; i < r.size(); ++i) {
        l += r[i];
        if (i + 1 < r.size()) l += std::string(width[i] - r[i].size() + 2, ' ');
      }
      out += l + "\n";
    };
    line(rows_.front());
    std::vector<std::string> rule;
    for (auto w : width) rule.push_back(std::string(w, '-'));
    line(rule);
    for (std::size_t i = 1; i < rows_.size(); ++i) line(rows_[i]);
    return out;
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

Json stats_json(const LatencyStats& s) {
  return Json{{"mean_ms", s.mean_ms},
              {"stddev_ms", s.stddev_ms},
              {"samples", s.samples}};
}

std::string_view block_label(const harness::TrialRecord& t) {
  if (t.reason) {
    switch (*t.reason) {
      case RejectionReason::kHashMismatch:
        return "hash check";
      case RejectionReason::kBadSignature:
        return "signature check";
      case RejectionReason::kRollback:
        return "NV-counter";
      case RejectionReason::kLockFailed:
        return "lock failure";
      default:
        return "policy check";
    }
  }
  return t.quarantined ? "session recheck" : "region lock";
}

const ScenarioReport* find(const std::vector<ScenarioReport>& reports,
                           ScenarioKind kind, Mode mode) {
  for (const auto& r : reports) {
    if (r.scenario.kind == kind && r.scenario.mode == mode) return &r;
  }
  return nullptr;
}

std::vector<ScenarioKind> kinds_present(
    const std::vector<ScenarioReport>& reports) {
  std::vector<ScenarioKind> kinds;
  for (auto k : harness::kAllScenarios) {
    if (find(reports, k, Mode::kBaseline) || find(reports, k, Mode::kFaarm)) {
      kinds.push_back(k);
    }
  }
  return kinds;
}

constexpr std::string_view kToctouNote =
    "note: ToctouOverwrite appears in both the outcome matrix and the "
    "success-rate table.";

bool has_toctou(const std::vector<ScenarioKind>& kinds) {
  return std::find(kinds.begin(), kinds.end(),
                   ScenarioKind::kToctouOverwrite) != kinds.end();
}

}  // namespace

std::string outcome_cell(const ScenarioReport& r) {
  const std::uint32_t n = r.scenario.trials;
  const std::string tally = " [" +
                            std::to_string(harness::is_adversarial(
                                               r.scenario.kind)
                                               ? r.attack_success_count
                                               : r.legitimate_success_count) +
                            "/" + std::to_string(n) + "]";
  if (!harness::is_adversarial(r.scenario.kind)) {
    std::string label = r.scenario.mode == Mode::kBaseline
                            ? "Allowed"
                            : "Allowed & locked";
    if (r.legitimate_success_count != n) label = "Degraded";
    return label + tally;
  }
  if (r.attack_success_count == n) return "Success" + tally;
  if (r.attack_success_count > 0) return "Partial" + tally;
  std::set<std::string_view> labels;
  for (const auto& t : r.trials) {
    if (t.infrastructure_error.empty()) labels.insert(block_label(t));
  }
  std::string joined;
  for (auto l : labels) {
    if (!joined.empty()) joined += ", ";
    joined += l;
  }
  return "Blocked (" + joined + ")" + tally;
}

std::string scenarios_json(const std::vector<ScenarioReport>& reports,
                           const JsonOptions& options) {
  Json out;
  out["scenarios"] = Json::array();
  for (const auto& r : reports) {
    const auto& s = r.scenario;
    Json j;
    j["scenario"] = harness::scenario_name(s.kind);
    j["mode"] = harness::mode_name(s.mode);
    j["trials"] = s.trials;
    j["config"] = Json{{"seed", s.seed},
                       {"lock_mode", lock_mode_name(s.lock_mode)},
                       {"scheme", crypto::scheme_name(s.scheme)},
                       {"firmware_size", s.firmware_size},
                       {"region_capacity", s.region_capacity},
                       {"concurrent_adversary", s.concurrent_adversary}};
    j["adversarial"] = harness::is_adversarial(s.kind);
    j["successes"] = harness::is_adversarial(s.kind)
                         ? r.attack_success_count
                         : r.legitimate_success_count;
    j["attack_success_count"] = r.attack_success_count;
    j["blocked_count"] = r.blocked_count;
    j["legitimate_success_count"] = r.legitimate_success_count;
    j["infrastructure_failures"] = r.infrastructure_failures;
    j["digest_violations"] = r.digest_violations;
    Json reasons = Json::object();
    std::map<std::string, std::uint32_t> hist;
    for (const auto& t : r.trials) {
      if (t.reason) ++hist[std::string(reason_name(*t.reason))];
    }
    for (const auto& [k, v] : hist) reasons[k] = v;
    j["reasons"] = reasons;
    Json outcomes = Json::object();
    for (const auto& [k, v] : r.outcomes) outcomes[k] = v;
    j["outcomes"] = outcomes;
    j["matrix_cell"] = outcome_cell(r);
    j["reconciled"] = r.reconciled;
    // The note carries scheduling-dependent counts (denied EL1 writes).
    if (!r.reconciled || options.include_latency) {
      j["reconcile_note"] = r.reconcile_note;
    }
    if (options.include_latency) {
      j["latency"] = Json{{"verify", stats_json(r.verify_stats())},
                          {"lock", stats_json(r.lock_stats())},
                          {"total", stats_json(r.total_stats())}};
    }
    if (options.include_trials) {
      Json trials = Json::array();
      for (const auto& t : r.trials) {
        Json tj{{"index", t.index},
                {"outcome", t.outcome},
                {"attack_success", t.attack_success},
                {"legitimate_success", t.legitimate_success}};
        if (t.reason) tj["reason"] = reason_name(*t.reason);
        if (t.schedule) tj["schedule"] = interposition_name(*t.schedule);
        if (!t.infrastructure_error.empty()) {
          tj["infrastructure_error"] = t.infrastructure_error;
        }
        trials.push_back(std::move(tj));
      }
      j["trial_records"] = trials;
    }
    out["scenarios"].push_back(std::move(j));
  }
  if (has_toctou(kinds_present(reports))) out["notes"] = Json{kToctouNote};
  return out.dump(2, ' ', false, Json::error_handler_t::replace) + "\n";
}

std::string scenarios_table(const std::vector<ScenarioReport>& reports) {
  Table t({"Scenario", "Mode", "Lock", "Trials", "Attack success", "Blocked",
           "Legitimate", "Infra errors", "Reconciled", "Outcomes"});
  for (const auto& r : reports) {
    std::string outcomes;
    for (const auto& [k, v] : r.outcomes) {
      if (!outcomes.empty()) outcomes += " ";
      outcomes += k + "=" + std::to_string(v);
    }
    bool adv = harness::is_adversarial(r.scenario.kind);
    t.add({std::string(harness::scenario_name(r.scenario.kind)),
           std::string(harness::mode_name(r.scenario.mode)),
           std::string(lock_mode_name(r.scenario.lock_mode)),
           std::to_string(r.scenario.trials),
           adv ? std::to_string(r.attack_success_count) : "-",
           adv ? std::to_string(r.blocked_count) : "-",
           adv ? "-" : std::to_string(r.legitimate_success_count),
           std::to_string(r.infrastructure_failures),
           r.reconciled ? "yes" : "NO (" + r.reconcile_note + ")", outcomes});
  }
  return t.render();
}

std::string outcome_matrix(const std::vector<ScenarioReport>& reports) {
  Table t({"Scenario", "Baseline", "FAARM"});
  auto kinds = kinds_present(reports);
  for (auto k : kinds) {
    const auto* b = find(reports, k, Mode::kBaseline);
    const auto* f = find(reports, k, Mode::kFaarm);
    t.add({std::string(harness::scenario_name(k)),
           b ? outcome_cell(*b) : "-", f ? outcome_cell(*f) : "-"});
  }
  std::string out = t.render();
  if (has_toctou(kinds)) out += std::string(kToctouNote) + "\n";
  return out;
}

std::string success_rate_table(const std::vector<ScenarioReport>& reports) {
  Table t({"Scenario", "Baseline Success", "FAARM Success"});
  auto cell = [](const ScenarioReport* r) -> std::string {
    if (!r) return "-";
    if (!harness::is_adversarial(r->scenario.kind)) {
      return percent(r->legitimate_success_count, r->scenario.trials) +
             " (legitimate)";
    }
    return percent(r->attack_success_count, r->scenario.trials);
  };
  for (auto k : kinds_present(reports)) {
    t.add({std::string(harness::scenario_name(k)),
           cell(find(reports, k, Mode::kBaseline)),
           cell(find(reports, k, Mode::kFaarm))});
  }
  return t.render();
}

std::string latency_csv(const std::vector<ScenarioReport>& reports) {
  std::ostringstream out;
  out << "scenario,mode,trial,verify_ms,lock_ms,total_ms,outcome\n";
  for (const auto& r : reports) {
    for (const auto& t : r.trials) {
      out << harness::scenario_name(r.scenario.kind) << ','
          << harness::mode_name(r.scenario.mode) << ',' << t.index << ','
          << fixed(t.verify_ms, 6) << ',' << fixed(t.lock_ms, 6) << ','
          << fixed(t.total_ms, 6) << ",\"" << t.outcome << "\"\n";
    }
  }
  return out.str();
}

std::string bench_text(const BenchReport& r) {
  using Ref = harness::ReferenceLatency;
  const auto& c = r.config;
  std::string out = "bench: firmware " + std::to_string(c.firmware_size) +
                    " bytes, " + std::to_string(c.runs) + " runs (+" +
                    std::to_string(c.warmup) + " warm-up), " +
                    std::string(crypto::scheme_name(c.scheme)) + ", " +
                    std::string(lock_mode_name(c.lock_mode)) + ", seed " +
                    std::to_string(c.seed) + ", state " +
                    (c.state_dir.empty() ? std::string("memory")
                                         : c.state_dir.string()) +
                    "\n";
  Table t({"Metric", "Mean (ms)", "Std. Dev. (ms)", "Samples",
           "Reference mean (ms)", "Reference std. dev. (ms)"});
  t.add({"Hash + Signature Verification", fixed(r.verify.mean_ms),
         fixed(r.verify.stddev_ms), std::to_string(r.verify.samples),
         fixed(Ref::kVerifyMeanMs, 2), fixed(Ref::kVerifyStddevMs, 2)});
  t.add({"Locking Procedure", fixed(r.lock.mean_ms), fixed(r.lock.stddev_ms),
         std::to_string(r.lock.samples), fixed(Ref::kLockMeanMs, 2),
         fixed(Ref::kLockStddevMs, 2)});
  t.add({"Total VerifyAndLock", fixed(r.total.mean_ms),
         fixed(r.total.stddev_ms), std::to_string(r.total.samples),
         fixed(Ref::kTotalMeanMs, 2), fixed(Ref::kTotalStddevMs, 2)});
  out += t.render();
  out += "overhead vs " + fixed(c.gpu_init_ms, 0) +
         " ms GPU init: " + fixed(100.0 * r.overhead_ratio, 2) +
         "% (reference: < " + fixed(100.0 * Ref::kOverheadBound, 0) + "%)\n";
  out += "operations digest: " + r.operations_digest + "\n";
  if (r.failures) out += "failed loads: " + std::to_string(r.failures) + "\n";
  return out;
}

std::string bench_json(const BenchReport& r, bool include_samples) {
  using Ref = harness::ReferenceLatency;
  const auto& c = r.config;
  Json j;
  j["config"] = Json{{"firmware_size", c.firmware_size},
                     {"runs", c.runs},
                     {"warmup", c.warmup},
                     {"gpu_init_ms", c.gpu_init_ms},
                     {"scheme", crypto::scheme_name(c.scheme)},
                     {"lock_mode", lock_mode_name(c.lock_mode)},
                     {"seed", c.seed},
                     {"state", c.state_dir.empty() ? std::string("memory")
                                                   : c.state_dir.string()},
                     {"fsync", c.fsync}};
  j["latency"] = Json{{"verify", stats_json(r.verify)},
                      {"lock", stats_json(r.lock)},
                      {"total", stats_json(r.total)}};
  j["overhead_ratio"] = r.overhead_ratio;
  j["reference"] = Json{
      {"verify", {{"mean_ms", Ref::kVerifyMeanMs},
                  {"stddev_ms", Ref::kVerifyStddevMs}}},
      {"lock", {{"mean_ms", Ref::kLockMeanMs},
                {"stddev_ms", Ref::kLockStddevMs}}},
      {"total", {{"mean_ms", Ref::kTotalMeanMs},
                 {"stddev_ms", Ref::kTotalStddevMs}}},
      {"overhead_bound", Ref::kOverheadBound}};
  j["operations_digest"] = r.operations_digest;
  j["failures"] = r.failures;
  if (include_samples) {
    j["samples"] = Json{{"verify_ms", r.verify_samples},
                        {"lock_ms", r.lock_samples},
                        {"total_ms", r.total_samples}};
  }
  return j.dump(2, ' ', false, Json::error_handler_t::replace) + "\n";
}

std::string bench_csv(const BenchReport& r) {
  std::ostringstream out;
  out << "run,verify_ms,lock_ms,total_ms\n";
  for (std::size_t i = 0; i < r.total_samples.size(); ++i) {
    out << i << ',' << fixed(r.verify_samples[i], 6) << ','
        << fixed(r.lock_samples[i], 6) << ',' << fixed(r.total_samples[i], 6)
        << '\n';
  }
  return out.str();
}

}  // namespace fwattest::report
