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

#ifndef FWATTEST_HARNESS_HPP_
#define FWATTEST_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fwattest/crypto.hpp"
#include "fwattest/mcu_region.hpp"
#include "fwattest/monitor.hpp"

namespace fwattest::harness {

enum class ScenarioKind {
  kSignedGood,
  kTamperBeforeVerify,
  kToctouOverwrite,
  kUnsignedLoad,
  kRollbackLoad,
};

inline constexpr ScenarioKind kAllScenarios[] = {
    ScenarioKind::kSignedGood, ScenarioKind::kTamperBeforeVerify,
    ScenarioKind::kToctouOverwrite, ScenarioKind::kUnsignedLoad,
    ScenarioKind::kRollbackLoad};

// Baseline: the unverified EL1 load path. Faarm: every load goes through
// Monitor::verify_and_lock.
enum class Mode { kBaseline, kFaarm };

std::string_view scenario_name(ScenarioKind k);
std::optional<ScenarioKind> parse_scenario(std::string_view name);
std::string_view mode_name(Mode m);
std::optional<Mode> parse_mode(std::string_view name);
bool is_adversarial(ScenarioKind k);

struct Scenario {
  ScenarioKind kind = ScenarioKind::kSignedGood;
  std::uint32_t trials = 50;
  Mode mode = Mode::kFaarm;
  LockMode lock_mode = LockMode::kHardwareWP;
  std::uint64_t seed = 1;
  crypto::Scheme scheme = crypto::Scheme::kEcdsaP256;
  std::size_t firmware_size = 64 * 1024;
  std::size_t region_capacity = kDefaultRegionCapacity;
  // ToctouOverwrite only: also run a free-running EL1 writer thread.
  bool concurrent_adversary = true;
  // Run trials on several threads. Not for timing runs.
  bool parallel = false;
};

struct TrialRecord {
  std::uint32_t index = 0;
  bool attack_success = false;
  bool legitimate_success = false;
  std::optional<RejectionReason> reason;
  // Classified outcome, e.g. "Blocked(HashMismatch)", "Success",
  // "Allowed & locked", "Blocked(region lock)".
  std::string outcome;
  std::optional<Interposition> schedule;
  double verify_ms = 0;
  double lock_ms = 0;
  double total_ms = 0;
  // TOCTOU bookkeeping.
  std::uint32_t el1_attempts = 0;
  std::uint32_t el1_denied = 0;
  bool digest_violation = false;
  bool quarantined = false;
  // Audit replay of this trial's log.
  std::uint32_t audit_rejects = 0;
  std::uint32_t audit_write_denied_el1 = 0;
  std::uint32_t audit_commits = 0;
  std::string infrastructure_error;
};

struct LatencyStats {
  double mean_ms = 0;
  double stddev_ms = 0;
  std::size_t samples = 0;
};

// Sample standard deviation (n - 1); zero for fewer than two samples.
LatencyStats compute_stats(const std::vector<double>& samples_ms);

struct ScenarioReport {
  Scenario scenario;
  std::uint32_t attack_success_count = 0;
  std::uint32_t blocked_count = 0;
  std::uint32_t legitimate_success_count = 0;
  std::uint32_t infrastructure_failures = 0;
  std::uint32_t digest_violations = 0;
  std::map<std::string, std::uint32_t> outcomes;
  std::vector<TrialRecord> trials;
  // Report counts agree with the replayed audit logs.
  bool reconciled = true;
  std::string reconcile_note;

  LatencyStats verify_stats() const;
  LatencyStats lock_stats() const;
  LatencyStats total_stats() const;
};

ScenarioReport run_scenario(const Scenario& s);

struct BenchConfig {
  std::size_t firmware_size = 1024 * 1024;
  std::uint32_t runs = 100;
  std::uint32_t warmup = 10;
  double gpu_init_ms = 100.0;
  crypto::Scheme scheme = crypto::Scheme::kEcdsaP256;
  LockMode lock_mode = LockMode::kHardwareWP;
  std::uint64_t seed = 1;
  // Empty: in-memory secure state. Otherwise a file-backed state directory
  // (created fresh; must not exist).
  std::filesystem::path state_dir;
  bool fsync = true;
};

struct BenchReport {
  BenchConfig config;
  LatencyStats verify;
  LatencyStats lock;
  LatencyStats total;
  double overhead_ratio = 0;  // total mean / gpu_init_ms
  std::vector<double> verify_samples;
  std::vector<double> lock_samples;
  std::vector<double> total_samples;
  // SHA-256 over the descriptors of the timed operations; equal for equal
  // configs.
  std::string operations_digest;
  std::uint32_t failures = 0;
};

// Reference figures for a 1 MiB image over 100 runs, shown next to local
// measurements.
struct ReferenceLatency {
  static constexpr double kVerifyMeanMs = 1.34;
  static constexpr double kVerifyStddevMs = 0.05;
  static constexpr double kLockMeanMs = 0.22;
  static constexpr double kLockStddevMs = 0.03;
  static constexpr double kTotalMeanMs = 1.56;
  static constexpr double kTotalStddevMs = 0.06;
  static constexpr double kOverheadBound = 0.02;
};

BenchReport bench(const BenchConfig& config);

struct DemoTranscript {
  std::vector<std::string> lines;
  bool baseline_accepted_tampered = false;
  bool faarm_rejected_tampered = false;
  bool faarm_rejected_unsigned = false;
  bool faarm_locked_signed = false;
  bool faarm_denied_overwrite = false;
};

// Side-by-side run of the vulnerable loader and the monitor on the same
// tampered, unsigned and signed images.
DemoTranscript run_demo(std::uint64_t seed = 1);

}  // namespace fwattest::harness

#endif  // FWATTEST_HARNESS_HPP_
