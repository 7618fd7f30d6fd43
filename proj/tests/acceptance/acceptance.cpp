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

// Acceptance suite: one PASS/FAIL line per criterion, detail lines indented
// beneath. Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "fwattest/harness.hpp"
#include "fwattest/monitor.hpp"
#include "fwattest/package.hpp"
#include "fwattest/report.hpp"
#include "fwattest/secure_state.hpp"

namespace fwattest {
namespace {

using harness::Mode;
using harness::Scenario;
using harness::ScenarioKind;

struct Outcome {
  bool pass = false;
  std::string summary;
  std::vector<std::string> details;
};

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// 1. 50 trials per scenario: monitor blocks every attack and admits every
// legitimate load; baseline falls to every attack.
Outcome scenario_matrix() {
  Outcome o;
  o.pass = true;
  int checked = 0;
  for (std::uint64_t seed : {1ull, 7ull, 20261016ull}) {
    std::vector<harness::ScenarioReport> reports;
    for (Mode mode : {Mode::kBaseline, Mode::kFaarm}) {
      for (auto kind : harness::kAllScenarios) {
        Scenario s;
        s.kind = kind;
        s.mode = mode;
        s.trials = 50;
        s.seed = seed;
        auto rep = harness::run_scenario(s);
        bool adversarial = harness::is_adversarial(kind);
        bool ok = rep.infrastructure_failures == 0 && rep.reconciled;
        if (adversarial) {
          ok = ok && rep.attack_success_count ==
                         (mode == Mode::kBaseline ? 50u : 0u);
        } else {
          ok = ok && rep.legitimate_success_count == 50u;
        }
        if (!ok) {
          o.pass = false;
          o.details.push_back(
              "seed " + std::to_string(seed) + " " +
              std::string(harness::scenario_name(kind)) + "/" +
              std::string(harness::mode_name(mode)) + ": attack " +
              std::to_string(rep.attack_success_count) + " legit " +
              std::to_string(rep.legitimate_success_count) + " infra " +
              std::to_string(rep.infrastructure_failures) + " " +
              rep.reconcile_note);
        }
        ++checked;
        reports.push_back(std::move(rep));
      }
    }
    if (seed == 1) {
      std::istringstream matrix(report::outcome_matrix(reports) +
                                report::success_rate_table(reports));
      for (std::string line; std::getline(matrix, line);) {
        o.details.push_back(line);
      }
    }
  }
  o.summary = std::to_string(checked) +
              " scenario runs x 50 trials over 3 seeds; FAARM 0/50 attack "
              "success, SignedGood 50/50, baseline 50/50 attack success";
  return o;
}

// 2. No SUCCESS result ever coexists with a locked digest that differs from
// the verified one.
Outcome toctou_closure() {
  Outcome o;
  std::uint64_t trials = 0, violations = 0, successes = 0, infra = 0;
  std::uint64_t attempts = 0, denied = 0;
  std::map<std::string, std::uint64_t> per_point;
  bool reconciled = true;
  for (LockMode mode : {LockMode::kHardwareWP, LockMode::kSoftwareLock}) {
    for (std::uint64_t seed : {11ull, 12ull, 13ull, 14ull}) {
      Scenario s;
      s.kind = ScenarioKind::kToctouOverwrite;
      s.mode = Mode::kFaarm;
      s.lock_mode = mode;
      s.trials = 150;
      s.seed = seed;
      s.firmware_size = 16 * 1024;
      s.concurrent_adversary = true;
      auto rep = harness::run_scenario(s);
      trials += rep.trials.size();
      violations += rep.digest_violations;
      successes += rep.attack_success_count;
      infra += rep.infrastructure_failures;
      reconciled = reconciled && rep.reconciled;
      for (const auto& t : rep.trials) {
        attempts += t.el1_attempts;
        denied += t.el1_denied;
        if (t.schedule) ++per_point[std::string(interposition_name(*t.schedule))];
      }
    }
  }
  o.pass = trials >= 1000 && violations == 0 && successes == 0 && infra == 0 &&
           reconciled && per_point.size() == 3;
  o.summary = std::to_string(trials) +
              " concurrent schedules (hardware-wp + software-lock), " +
              std::to_string(violations) + " digest violations, " +
              std::to_string(successes) + " attack successes";
  for (const auto& [point, n] : per_point) {
    o.details.push_back("interposition " + point + ": " + std::to_string(n) +
                        " trials");
  }
  o.details.push_back("EL1 write attempts " + std::to_string(attempts) +
                      ", denied " + std::to_string(denied) +
                      ", audit reconciled: " + (reconciled ? "yes" : "no"));
  if (infra) o.details.push_back("infrastructure errors: " + std::to_string(infra));
  return o;
}

// 3. Random mixes of valid and rollback loads.
Outcome anti_rollback() {
  Outcome o;
  o.pass = true;
  const auto key = testing::fixture_key(31);
  std::mt19937_64 rng(2026);
  std::uint64_t loads = 0, rollbacks = 0, accepts = 0;
  for (int seq = 0; seq < 100 && o.pass; ++seq) {
    McuRegion region(LockMode::kHardwareWP);
    Monitor monitor(region, MonitorConfig{.token_seed = 1});
    monitor.provision(std::make_unique<MemoryBackend>(), key.public_key());
    std::uint64_t counter = 0;
    std::vector<std::uint64_t> expected;
    for (int i = 0; i < 100; ++i) {
      bool rollback = counter > 0 && rng() % 2 == 0;
      std::uint64_t v = rollback ? 1 + rng() % counter : counter + 1 + rng() % 3;
      auto pkg = testing::signed_package(key, v, 256, rng());
      LoadResult r = monitor.verify_and_lock(pkg);
      ++loads;
      std::uint64_t after = monitor.state().nv_counter();
      if (rollback) {
        ++rollbacks;
        if (r.ok() || r.reason != RejectionReason::kRollback ||
            after != counter) {
          o.pass = false;
          o.details.push_back("sequence " + std::to_string(seq) + " step " +
                              std::to_string(i) + ": rollback to " +
                              std::to_string(v) + " not rejected cleanly");
          break;
        }
      } else {
        ++accepts;
        if (!r.ok() || after != v) {
          o.pass = false;
          o.details.push_back("sequence " + std::to_string(seq) + " step " +
                              std::to_string(i) + ": valid v" +
                              std::to_string(v) + " rejected: " + r.detail);
          break;
        }
        counter = v;
        expected.push_back(v);
      }
    }
    AuditReplay replay = replay_audit(monitor.state().audit_lines());
    bool increasing = true;
    for (std::size_t i = 1; i < replay.accepted_versions.size(); ++i) {
      increasing = increasing &&
                   replay.accepted_versions[i] > replay.accepted_versions[i - 1];
    }
    if (!replay.chain_ok || !increasing ||
        replay.accepted_versions != expected ||
        replay.committed_versions != expected) {
      o.pass = false;
      o.details.push_back("sequence " + std::to_string(seq) +
                          ": replay disagrees with the model");
    }
  }
  o.summary = "100 sequences x 100 loads (" + std::to_string(accepts) +
              " valid, " + std::to_string(rollbacks) +
              " rollback); replayed accepted versions strictly increasing, "
              "counter unchanged on every rollback";
  return o;
}

// 4. Order-of-magnitude latency check against the reference figures.
Outcome latency() {
  Outcome o;
  harness::BenchConfig c;
  c.firmware_size = 1024 * 1024;
  c.runs = 100;
  c.warmup = 10;
  auto r = harness::bench(c);
  using Ref = harness::ReferenceLatency;
  o.pass = r.failures == 0 && r.total.samples >= 100 &&
           r.total.mean_ms <= 20.0 && r.overhead_ratio < 0.20;
  o.summary = "total mean " + fmt(r.total.mean_ms) + " ms (sd " +
              fmt(r.total.stddev_ms) + ", n=" +
              std::to_string(r.total.samples) + "), overhead " +
              fmt(100 * r.overhead_ratio, 2) +
              "% of 100 ms GPU init; limits <= 20 ms and < 20%";
  o.details.push_back("measured  verify " + fmt(r.verify.mean_ms) + " +/- " +
                      fmt(r.verify.stddev_ms) + " ms | lock " +
                      fmt(r.lock.mean_ms) + " +/- " + fmt(r.lock.stddev_ms) +
                      " ms | total " + fmt(r.total.mean_ms) + " +/- " +
                      fmt(r.total.stddev_ms) + " ms | overhead " +
                      fmt(100 * r.overhead_ratio, 2) + "%");
  o.details.push_back("reference verify " + fmt(Ref::kVerifyMeanMs, 2) +
                      " +/- " + fmt(Ref::kVerifyStddevMs, 2) + " ms | lock " +
                      fmt(Ref::kLockMeanMs, 2) + " +/- " +
                      fmt(Ref::kLockStddevMs, 2) + " ms | total " +
                      fmt(Ref::kTotalMeanMs, 2) + " +/- " +
                      fmt(Ref::kTotalStddevMs, 2) + " ms | overhead < " +
                      fmt(100 * Ref::kOverheadBound, 0) + "%");
  return o;
}

// 5. Single-byte mutations of a .pkg container must all be rejected.
Outcome mutation_fuzz() {
  Outcome o;
  std::map<std::string, std::uint64_t> reasons;
  std::uint64_t total = 0, accepted = 0;
  struct Run {
    crypto::Scheme scheme;
    int mutations;
  };
  for (Run run : {Run{crypto::Scheme::kEcdsaP256, 1200},
                  Run{crypto::Scheme::kEd25519, 600}}) {
    const auto key = testing::fixture_key(41, run.scheme);
    const auto pkg = testing::signed_package(key, 5, 1024, 3);
    const Bytes container = encode_container(pkg.raw());
    McuRegion region(LockMode::kHardwareWP);
    Monitor monitor(region);
    monitor.provision(std::make_unique<MemoryBackend>(), key.public_key());
    std::mt19937_64 rng(static_cast<std::uint64_t>(run.scheme) * 1000 + 5);
    for (int i = 0; i < run.mutations; ++i) {
      Bytes mutated = container;
      std::size_t pos = rng() % mutated.size();
      mutated[pos] ^= static_cast<std::uint8_t>(1 + rng() % 255);
      ++total;
      RawBundle raw;
      try {
        raw = decode_container(mutated);
      } catch (const BundleError&) {
        // Framing damage: refused before the monitor sees a bundle.
        ++reasons[std::string(reason_name(RejectionReason::kMalformedBundle)) +
                  " (container)"];
        continue;
      }
      LoadResult r = monitor.verify_and_lock(raw);
      if (r.ok() || !r.reason) {
        ++accepted;
        o.details.push_back("accepted mutation at byte " + std::to_string(pos));
      } else {
        ++reasons[std::string(reason_name(*r.reason))];
      }
    }
    // The unmutated container still verifies.
    if (!monitor.verify_and_lock(decode_container(container)).ok()) {
      ++accepted;  // count as failure of the harness itself
      o.details.push_back("pristine container rejected");
    }
  }
  o.pass = total >= 1000 && accepted == 0;
  o.summary = std::to_string(total) + " single-byte mutations, " +
              std::to_string(accepted) + " accepted";
  std::string hist;
  for (const auto& [k, v] : reasons) {
    hist += (hist.empty() ? "" : ", ") + k + "=" + std::to_string(v);
  }
  o.details.push_back("reasons: " + hist);
  return o;
}

// Scripted device session used for kill-point injection.
// Returns the number of durable writes it made.
std::uint64_t device_script(std::unique_ptr<FileBackend> backend,
                            const crypto::KeyPair& key) {
  FileBackend* raw = backend.get();
  McuRegion region(LockMode::kHardwareWP);
  Monitor m(region, MonitorConfig{.token_seed = 1});
  m.provision(std::move(backend), key.public_key());
  m.verify_and_lock(testing::signed_package(key, 1, 512, 1));
  m.verify_and_lock(testing::signed_package(key, 1, 512, 2));  // rollback
  region.el1_write(0, Bytes(4, 0x41));                         // denied
  LoadResult r = m.verify_and_lock(testing::signed_package(key, 3, 512, 3));
  m.session_start();
  if (r.token) m.submit_task(*r.token, make_task_envelope(as_bytes("t")));
  RawBundle bad = testing::signed_package(key, 9, 512, 4).raw();
  bad.firmware[0] ^= 1;
  m.verify_and_lock(bad);
  m.verify_and_lock(testing::signed_package(key, 4, 512, 5));
  m.verify_and_lock(testing::signed_package(key, 7, 512, 6));
  return raw->durable_writes();
}

// 6. Crash at every durable write, clean or torn, then recover.
Outcome crash_consistency() {
  Outcome o;
  const auto key = testing::fixture_key(51);
  std::uint64_t total_writes = 0;
  {
    testing::TempDir probe("fwattest-probe");
    total_writes =
        device_script(std::make_unique<FileBackend>(probe.path()), key);
  }
  const std::vector<std::uint64_t> planned = {1, 3, 4, 7};
  std::uint64_t points = 0, corrupted = 0;
  for (bool torn : {false, true}) {
    for (std::uint64_t k = 1; k <= total_writes; ++k) {
      ++points;
      testing::TempDir dir("fwattest-kill");
      FileBackend::Options opts;
      opts.fault = {k, torn};
      bool crashed = false;
      try {
        device_script(std::make_unique<FileBackend>(dir.path(), opts), key);
      } catch (const SimulatedCrash&) {
        crashed = true;
      }
      std::string where = std::string(torn ? "torn" : "clean") +
                          " crash at write " + std::to_string(k);
      if (!crashed) {
        ++corrupted;
        o.details.push_back(where + ": fault did not fire");
        continue;
      }
      if (k == 1) {
        // PROVISION never landed; an unprovisioned directory is the correct
        // recovered state.
        try {
          SecureState::open(std::make_unique<FileBackend>(dir.path()));
          ++corrupted;
          o.details.push_back(where + ": opened without a PROVISION record");
        } catch (const Error&) {
        }
        continue;
      }
      try {
        SecureState s =
            SecureState::open(std::make_unique<FileBackend>(dir.path()));
        AuditReplay replay = replay_audit(s.audit_lines());
        PersistedState on_disk = decode_state(read_file(dir / "state.json"));
        bool prefix =
            replay.committed_versions.size() <= planned.size() &&
            std::equal(replay.committed_versions.begin(),
                       replay.committed_versions.end(), planned.begin());
        if (!replay.chain_ok || s.nv_counter() != replay.committed_version ||
            on_disk.nv_counter != s.nv_counter() || !prefix) {
          ++corrupted;
          o.details.push_back(where + ": counter " +
                              std::to_string(s.nv_counter()) +
                              " vs last COMMIT " +
                              std::to_string(replay.committed_version));
        }
      } catch (const std::exception& e) {
        ++corrupted;
        o.details.push_back(where + ": " + e.what());
      }
    }
  }
  o.pass = total_writes > 0 && corrupted == 0;
  o.summary = std::to_string(points) + " kill points (" +
              std::to_string(total_writes) +
              " durable writes x clean/torn), " + std::to_string(corrupted) +
              " corrupted states";
  return o;
}

// 7. Before/after demo transcript.
Outcome demo() {
  Outcome o;
  auto t = harness::run_demo(1);
  o.pass = t.baseline_accepted_tampered && t.faarm_rejected_tampered &&
           t.faarm_rejected_unsigned && t.faarm_locked_signed &&
           t.faarm_denied_overwrite;
  o.summary =
      "baseline accepts tampered image; monitor rejects tampered and "
      "unsigned images, loads and locks the signed one, denies overwrite";
  for (const auto& l : t.lines) o.details.push_back(l);
  return o;
}

}  // namespace
}  // namespace fwattest

int main() {
  using namespace fwattest;
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"scenario-matrix", scenario_matrix},
      {"toctou-closure", toctou_closure},
      {"anti-rollback", anti_rollback},
      {"latency", latency},
      {"mutation-fuzz", mutation_fuzz},
      {"crash-consistency", crash_consistency},
      {"demo-transcript", demo},
  };
  int failed = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << index << "] "
              << c.name << ": " << o.summary << " (" << fmt(secs, 1)
              << " s)\n";
    for (const auto& d : o.details) std::cout << "      " << d << "\n";
    std::cout.flush();
    if (!o.pass) ++failed;
  }
  std::cout << (failed ? "FAILED: " : "ALL PASSED: ")
            << (7 - failed) << "/7 criteria\n";
  return failed ? 1 : 0;
}
