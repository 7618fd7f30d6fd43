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

#include "fwattest/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include "fwattest/package.hpp"
#include "fwattest/secure_state.hpp"

namespace fwattest::harness {

namespace {

using SteadyClock = std::chrono::steady_clock;

constexpr std::string_view kMcuId = "MALI-MCU-XYZ";
constexpr std::string_view kTimestamp = "2025-10-10T12:00:00Z";
// Chunk the EL1 adversary writes per attempt.
constexpr std::size_t kAttackChunk = 64;

struct ScenarioName {
  ScenarioKind kind;
  std::string_view name;
};

constexpr ScenarioName kScenarioNames[] = {
    {ScenarioKind::kSignedGood, "SignedGood"},
    {ScenarioKind::kTamperBeforeVerify, "TamperBeforeVerify"},
    {ScenarioKind::kToctouOverwrite, "ToctouOverwrite"},
    {ScenarioKind::kUnsignedLoad, "UnsignedLoad"},
    {ScenarioKind::kRollbackLoad, "RollbackLoad"},
};

double ms_since(SteadyClock::time_point t0) {
  return std::chrono::duration<double, std::milli>(SteadyClock::now() - t0)
      .count();
}

Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes out(n);
  std::size_t i = 0;
  while (i < n) {
    std::uint64_t w = rng();
    for (int b = 0; b < 8 && i < n; ++b, ++i) out[i] = (w >> (8 * b)) & 0xff;
  }
  return out;
}

// Bytes guaranteed to differ from `base[offset, offset + n)`.
Bytes differing_chunk(std::mt19937_64& rng, ByteView base, std::size_t offset,
                      std::size_t n) {
  Bytes chunk = random_bytes(rng, n);
  for (std::size_t i = 0; i < n && offset + i < base.size(); ++i) {
    if (chunk[i] == base[offset + i]) chunk[i] ^= 0xff;
  }
  return chunk;
}

FirmwarePackage vendor_package(Bytes firmware, std::uint64_t version,
                               const crypto::KeyPair& key) {
  return build_package(std::move(firmware), version, std::string(kMcuId),
                       std::string(kTimestamp),
                       {std::string(kFlagRequiresLock)}, key);
}

Bytes make_task() {
  static constexpr std::string_view kCiphertext = "opaque-task-ciphertext";
  return make_task_envelope(as_bytes(kCiphertext));
}

std::string blocked(RejectionReason r) {
  return "Blocked(" + std::string(reason_name(r)) + ")";
}

// One trial's emulated platform: a region, the monitor and a fresh
// in-memory secure state.
struct Platform {
  McuRegion region;
  Monitor monitor;

  Platform(const Scenario& s, const crypto::PublicKey& anchor,
           std::uint64_t token_seed)
      : region(s.lock_mode, s.region_capacity),
        monitor(region, MonitorConfig{std::string(kMcuId),
                                      {std::string(kFlagRequiresLock)},
                                      token_seed}) {
    monitor.provision(std::make_unique<MemoryBackend>(), anchor);
  }

  void tally_audit(TrialRecord& rec) const {
    for (const auto& r : monitor.state().audit()) {
      switch (r.event) {
        case AuditEvent::kVerifyReject:
          ++rec.audit_rejects;
          break;
        case AuditEvent::kCommit:
          ++rec.audit_commits;
          break;
        case AuditEvent::kWriteDenied:
          if (r.detail && r.detail->starts_with("origin=EL1 ")) {
            ++rec.audit_write_denied_el1;
          }
          break;
        default:
          break;
      }
    }
  }
};

void copy_timings(TrialRecord& rec, const LoadResult& r) {
  rec.verify_ms = r.timings.verify_ms;
  rec.lock_ms = r.timings.lock_ms;
  rec.total_ms = r.timings.total_ms;
}

// Unverified EL1 loader: copies whatever it is given and calls it usable.
bool baseline_load(McuRegion& region, ByteView firmware) {
  return region.el1_write(0, firmware).applied();
}

class TrialRunner {
 public:
  TrialRunner(const Scenario& s, const crypto::KeyPair& vendor,
              const crypto::KeyPair& attacker)
      : s_(s), vendor_(vendor), attacker_(attacker) {}

  TrialRecord run(std::uint32_t index) {
    TrialRecord rec;
    rec.index = index;
    std::seed_seq seq{static_cast<std::uint32_t>(s_.seed),
                      static_cast<std::uint32_t>(s_.seed >> 32),
                      static_cast<std::uint32_t>(s_.kind), index};
    std::mt19937_64 rng(seq);
    try {
      if (s_.mode == Mode::kBaseline) {
        run_baseline(rng, rec);
      } else {
        run_faarm(rng, rec);
      }
    } catch (const std::exception& e) {
      rec.infrastructure_error = e.what();
      rec.attack_success = false;
      rec.legitimate_success = false;
      rec.outcome = "InfrastructureError";
    }
    return rec;
  }

 private:
  // Mutations an EL1 adversary can make to a vendor package before handing
  // it to the loader. Returns the bundle and the image it would execute.
  RawBundle tamper(std::mt19937_64& rng, const FirmwarePackage& pkg) {
    RawBundle raw = pkg.raw();
    if (rng() % 2 == 0) {
      // Patch a few bytes in place; manifest left alone.
      std::size_t flips = 1 + rng() % 4;
      for (std::size_t i = 0; i < flips; ++i) {
        std::size_t pos = rng() % raw.firmware.size();
        raw.firmware[pos] ^= static_cast<std::uint8_t>(1 + rng() % 255);
      }
    } else {
      // Substitute the image and fix up the manifest hash to match.
      raw.firmware = differing_chunk(rng, pkg.firmware, 0, pkg.firmware.size());
      Manifest m = pkg.manifest;
      m.firmware_hash = crypto::hash(raw.firmware);
      raw.manifest = canonical_bytes(m);
    }
    return raw;
  }

  RawBundle unsigned_bundle(std::mt19937_64& rng) {
    Bytes malicious = random_bytes(rng, s_.firmware_size);
    Manifest m = make_manifest(1, std::string(kMcuId), std::string(kTimestamp),
                               crypto::hash(malicious),
                               {std::string(kFlagRequiresLock)});
    RawBundle raw{std::move(malicious), canonical_bytes(m),
                  Bytes(crypto::Signature::kSize, 0)};
    if (rng() % 2 == 1) {
      // Signed, but by a key the device does not trust.
      Bytes payload = crypto::signing_payload(m.firmware_hash, raw.manifest);
      crypto::Signature sig = crypto::sign(attacker_, payload);
      raw.signature.assign(sig.bytes().begin(), sig.bytes().end());
    }
    return raw;
  }

  void run_faarm(std::mt19937_64& rng, TrialRecord& rec) {
    Platform p(s_, vendor_.public_key(), rng());
    switch (s_.kind) {
      case ScenarioKind::kSignedGood: {
        Bytes fw = random_bytes(rng, s_.firmware_size);
        crypto::Digest h = crypto::hash(fw);
        LoadResult r = p.monitor.verify_and_lock(vendor_package(fw, 1, vendor_));
        copy_timings(rec, r);
        rec.reason = r.reason;
        bool usable = r.ok() && p.region.digest() == h &&
                      p.monitor.session_start() == SessionResult::kReady &&
                      p.monitor.submit_task(*r.token, make_task()).admitted;
        rec.legitimate_success = usable;
        rec.outcome = usable ? "Allowed & locked"
                             : (r.reason ? blocked(*r.reason) : "Unusable");
        break;
      }
      case ScenarioKind::kTamperBeforeVerify: {
        FirmwarePackage pkg =
            vendor_package(random_bytes(rng, s_.firmware_size), 1, vendor_);
        RawBundle raw = tamper(rng, pkg);
        // EL1 also pre-stages its image in the region before verification.
        p.region.set_interposer([&](Interposition point) {
          if (point == Interposition::kPreVerify) {
            p.region.el1_write(0, raw.firmware);
          }
        });
        LoadResult r = p.monitor.verify_and_lock(raw);
        p.region.set_interposer({});
        finish_load_attack(p, rec, r, crypto::hash(raw.firmware));
        break;
      }
      case ScenarioKind::kUnsignedLoad: {
        RawBundle raw = unsigned_bundle(rng);
        LoadResult r = p.monitor.verify_and_lock(raw);
        finish_load_attack(p, rec, r, crypto::hash(raw.firmware));
        break;
      }
      case ScenarioKind::kRollbackLoad: {
        std::uint64_t newer = 2 + rng() % 9;
        std::uint64_t older = 1 + rng() % newer;  // older <= newer
        LoadResult setup = p.monitor.verify_and_lock(
            vendor_package(random_bytes(rng, s_.firmware_size), newer,
                           vendor_));
        if (!setup.ok()) throw Error("rollback setup load was rejected");
        Bytes old_fw = random_bytes(rng, s_.firmware_size);
        crypto::Digest old_digest = crypto::hash(old_fw);
        LoadResult r = p.monitor.verify_and_lock(
            vendor_package(std::move(old_fw), older, vendor_));
        finish_load_attack(p, rec, r, old_digest);
        break;
      }
      case ScenarioKind::kToctouOverwrite:
        run_faarm_toctou(rng, rec, p);
        break;
    }
    p.tally_audit(rec);
  }

  void finish_load_attack(Platform& p, TrialRecord& rec, const LoadResult& r,
                          const crypto::Digest& attacker_digest) {
    copy_timings(rec, r);
    rec.reason = r.reason;
    rec.attack_success = r.ok() && p.region.digest() == attacker_digest;
    rec.outcome = rec.attack_success ? "Success"
                  : r.reason         ? blocked(*r.reason)
                                     : "Blocked";
  }

  void run_faarm_toctou(std::mt19937_64& rng, TrialRecord& rec, Platform& p) {
    Bytes fw = random_bytes(rng, s_.firmware_size);
    const crypto::Digest h = crypto::hash(fw);
    FirmwarePackage pkg = vendor_package(fw, 1, vendor_);

    std::atomic<std::uint32_t> attempts{0}, denied{0};
    auto attack = [&](std::size_t offset, ByteView chunk) {
      WriteAttempt a = p.region.el1_write(offset, chunk);
      attempts.fetch_add(1);
      if (!a.applied()) denied.fetch_add(1);
    };

    const auto schedule = static_cast<Interposition>(rec.index % 3);
    rec.schedule = schedule;
    const std::size_t offset =
        rng() % (fw.size() > kAttackChunk ? fw.size() - kAttackChunk : 1);
    const Bytes chunk = differing_chunk(rng, fw, offset, kAttackChunk);
    p.region.set_interposer([&](Interposition point) {
      if (point == schedule) attack(offset, chunk);
    });

    std::atomic<bool> stop{false};
    std::thread hammer;
    if (s_.concurrent_adversary) {
      std::uint64_t hammer_seed = rng();
      std::uint32_t start_delay = static_cast<std::uint32_t>(rng() % 2000);
      hammer = std::thread([&, hammer_seed, start_delay] {
        std::mt19937_64 hrng(hammer_seed);
        for (std::uint32_t i = 0; i < start_delay; ++i) {
          std::atomic_signal_fence(std::memory_order_seq_cst);
        }
        // Bounded so a trial cannot flood the audit log.
        for (int n = 0; n < 4096 && !stop.load(std::memory_order_relaxed);
             ++n) {
          std::size_t off = hrng() % fw.size();
          Bytes c = differing_chunk(hrng, fw, off,
                                    std::min(kAttackChunk, fw.size() - off));
          attack(off, c);
          std::this_thread::yield();
        }
      });
    }

    LoadResult r = p.monitor.verify_and_lock(pkg);
    bool violation = r.ok() && !(p.region.digest() == h);
    stop.store(true);
    if (hammer.joinable()) hammer.join();
    p.region.set_interposer({});
    copy_timings(rec, r);
    rec.reason = r.reason;
    if (!r.ok()) {
      throw Error("legitimate package rejected in TOCTOU trial: " + r.detail);
    }

    if (s_.lock_mode == LockMode::kSoftwareLock) {
      // Transient tamper that bypasses a software lock.
      p.region.test_hook_write(offset, chunk);
    }
    bool quarantined =
        p.monitor.session_start() == SessionResult::kQuarantined;
    TaskOutcome task = p.monitor.submit_task(*r.token, make_task());
    bool admitted_on_bad = task.admitted && !(p.region.digest() == h);

    rec.digest_violation = violation;
    rec.quarantined = quarantined;
    rec.el1_attempts = attempts.load();
    rec.el1_denied = denied.load();
    rec.attack_success = violation || admitted_on_bad;
    rec.outcome = rec.attack_success ? "Success"
                  : quarantined      ? "Blocked(recheck)"
                                     : "Blocked(region lock)";
  }

  void run_baseline(std::mt19937_64& rng, TrialRecord& rec) {
    McuRegion region(s_.lock_mode, s_.region_capacity);
    auto t0 = SteadyClock::now();
    switch (s_.kind) {
      case ScenarioKind::kSignedGood: {
        Bytes fw = random_bytes(rng, s_.firmware_size);
        rec.legitimate_success =
            baseline_load(region, fw) && region.digest() == crypto::hash(fw);
        rec.outcome = rec.legitimate_success ? "Allowed" : "Unusable";
        break;
      }
      case ScenarioKind::kTamperBeforeVerify: {
        FirmwarePackage pkg =
            vendor_package(random_bytes(rng, s_.firmware_size), 1, vendor_);
        RawBundle raw = tamper(rng, pkg);
        rec.attack_success = baseline_load(region, raw.firmware) &&
                             region.digest() == crypto::hash(raw.firmware);
        break;
      }
      case ScenarioKind::kUnsignedLoad: {
        RawBundle raw = unsigned_bundle(rng);
        rec.attack_success = baseline_load(region, raw.firmware) &&
                             region.digest() == crypto::hash(raw.firmware);
        break;
      }
      case ScenarioKind::kRollbackLoad: {
        Bytes newer = random_bytes(rng, s_.firmware_size);
        Bytes older = random_bytes(rng, s_.firmware_size);
        baseline_load(region, newer);
        rec.attack_success = baseline_load(region, older) &&
                             region.digest() == crypto::hash(older);
        break;
      }
      case ScenarioKind::kToctouOverwrite: {
        Bytes fw = random_bytes(rng, s_.firmware_size);
        baseline_load(region, fw);
        std::size_t offset = rng() % (fw.size() > kAttackChunk
                                          ? fw.size() - kAttackChunk
                                          : 1);
        Bytes chunk = differing_chunk(rng, fw, offset, kAttackChunk);
        WriteAttempt a = region.el1_write(offset, chunk);
        rec.el1_attempts = 1;
        rec.el1_denied = a.applied() ? 0 : 1;
        rec.attack_success = a.applied() && !(region.digest() == crypto::hash(fw));
        break;
      }
    }
    rec.total_ms = ms_since(t0);
    if (is_adversarial(s_.kind)) {
      rec.outcome = rec.attack_success ? "Success" : "Blocked";
    }
  }

  const Scenario& s_;
  const crypto::KeyPair& vendor_;
  const crypto::KeyPair& attacker_;
};

void reconcile(ScenarioReport& rep) {
  if (rep.scenario.mode == Mode::kBaseline) {
    rep.reconciled = true;
    rep.reconcile_note = "baseline loader keeps no audit log";
    return;
  }
  std::uint64_t rejects = 0, commits = 0, denied_records = 0, denied_seen = 0;
  for (const auto& t : rep.trials) {
    if (!t.infrastructure_error.empty()) continue;
    rejects += t.audit_rejects;
    commits += t.audit_commits;
    denied_records += t.audit_write_denied_el1;
    denied_seen += t.el1_denied;
  }
  switch (rep.scenario.kind) {
    case ScenarioKind::kSignedGood:
      rep.reconciled =
          rejects == 0 && commits == rep.legitimate_success_count;
      rep.reconcile_note = "VERIFY_REJECT=" + std::to_string(rejects) +
                           " COMMIT=" + std::to_string(commits);
      break;
    case ScenarioKind::kToctouOverwrite:
      rep.reconciled = denied_records == denied_seen && rejects == 0;
      rep.reconcile_note = "WRITE_DENIED(EL1)=" +
                           std::to_string(denied_records) +
                           " denied_attempts=" + std::to_string(denied_seen);
      break;
    default:
      rep.reconciled = rejects == rep.blocked_count;
      rep.reconcile_note = "VERIFY_REJECT=" + std::to_string(rejects) +
                           " blocked=" + std::to_string(rep.blocked_count);
      break;
  }
}

LatencyStats stats_of(const std::vector<TrialRecord>& trials,
                      double TrialRecord::*field) {
  std::vector<double> v;
  for (const auto& t : trials) {
    if (t.infrastructure_error.empty()) v.push_back(t.*field);
  }
  return compute_stats(v);
}

}  // namespace

std::string_view scenario_name(ScenarioKind k) {
  for (const auto& n : kScenarioNames) {
    if (n.kind == k) return n.name;
  }
  return "unknown";
}

std::optional<ScenarioKind> parse_scenario(std::string_view name) {
  for (const auto& n : kScenarioNames) {
    if (n.name == name) return n.kind;
  }
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
  for (const auto& n : kScenarioNames) {
    std::string cand(n.name);
    std::transform(cand.begin(), cand.end(), cand.begin(), ::tolower);
    if (cand == lower) return n.kind;
  }
  return std::nullopt;
}

std::string_view mode_name(Mode m) {
  return m == Mode::kBaseline ? "baseline" : "faarm";
}

std::optional<Mode> parse_mode(std::string_view name) {
  if (name == "baseline") return Mode::kBaseline;
  if (name == "faarm") return Mode::kFaarm;
  return std::nullopt;
}

bool is_adversarial(ScenarioKind k) { return k != ScenarioKind::kSignedGood; }

LatencyStats compute_stats(const std::vector<double>& samples) {
  LatencyStats s;
  s.samples = samples.size();
  if (samples.empty()) return s;
  double sum = 0;
  for (double x : samples) sum += x;
  s.mean_ms = sum / samples.size();
  if (samples.size() > 1) {
    double sq = 0;
    for (double x : samples) sq += (x - s.mean_ms) * (x - s.mean_ms);
    s.stddev_ms = std::sqrt(sq / (samples.size() - 1));
  }
  return s;
}

LatencyStats ScenarioReport::verify_stats() const {
  return stats_of(trials, &TrialRecord::verify_ms);
}
LatencyStats ScenarioReport::lock_stats() const {
  return stats_of(trials, &TrialRecord::lock_ms);
}
LatencyStats ScenarioReport::total_stats() const {
  return stats_of(trials, &TrialRecord::total_ms);
}

ScenarioReport run_scenario(const Scenario& s) {
  if (s.trials < 1) throw Error("a scenario needs at least one trial");
  if (s.firmware_size == 0 || s.firmware_size > s.region_capacity) {
    throw Error("firmware size must be in [1, region capacity]");
  }
  const crypto::KeyPair vendor =
      crypto::keygen(s.scheme, s.seed, crypto::KeySource::kTestFixture);
  const crypto::KeyPair attacker = crypto::keygen(
      s.scheme, s.seed ^ 0xa77ac4e5ull, crypto::KeySource::kTestFixture);

  ScenarioReport rep;
  rep.scenario = s;
  rep.trials.resize(s.trials);

  if (s.parallel && s.trials > 1) {
    std::atomic<std::uint32_t> next{0};
    unsigned workers = std::max(1u, std::min(std::thread::hardware_concurrency(),
                                             s.trials));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        TrialRunner runner(s, vendor, attacker);
        for (std::uint32_t i; (i = next.fetch_add(1)) < s.trials;) {
          rep.trials[i] = runner.run(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  } else {
    TrialRunner runner(s, vendor, attacker);
    for (std::uint32_t i = 0; i < s.trials; ++i) rep.trials[i] = runner.run(i);
  }

  for (const auto& t : rep.trials) {
    if (!t.infrastructure_error.empty()) {
      ++rep.infrastructure_failures;
      ++rep.outcomes["InfrastructureError"];
      continue;
    }
    ++rep.outcomes[t.outcome];
    if (t.attack_success) ++rep.attack_success_count;
    if (t.legitimate_success) ++rep.legitimate_success_count;
    if (t.digest_violation) ++rep.digest_violations;
  }
  if (is_adversarial(s.kind)) {
    rep.blocked_count =
        s.trials - rep.attack_success_count - rep.infrastructure_failures;
  }
  reconcile(rep);
  return rep;
}

BenchReport bench(const BenchConfig& config) {
  if (config.runs < 1) throw Error("bench needs at least one run");
  BenchReport rep;
  rep.config = config;

  const crypto::KeyPair vendor =
      crypto::keygen(config.scheme, config.seed,
                     crypto::KeySource::kTestFixture);
  std::mt19937_64 rng(config.seed);
  const Bytes fw = random_bytes(rng, config.firmware_size);
  const std::uint32_t total_runs = config.warmup + config.runs;

  // Signing is vendor-side work and stays outside the timed region.
  std::vector<FirmwarePackage> packages;
  packages.reserve(total_runs);
  for (std::uint32_t v = 1; v <= total_runs; ++v) {
    packages.push_back(vendor_package(fw, v, vendor));
  }

  McuRegion region(config.lock_mode,
                   std::max(kDefaultRegionCapacity, config.firmware_size));
  Monitor monitor(region, MonitorConfig{std::string(kMcuId),
                                        {std::string(kFlagRequiresLock)},
                                        config.seed});
  std::unique_ptr<StateBackend> backend;
  if (config.state_dir.empty()) {
    backend = std::make_unique<MemoryBackend>();
  } else {
    if (std::filesystem::exists(config.state_dir)) {
      throw Error("bench state directory already exists: " +
                  config.state_dir.string());
    }
    FileBackend::Options opts;
    opts.fsync = config.fsync;
    backend = std::make_unique<FileBackend>(config.state_dir, opts);
  }
  monitor.provision(std::move(backend), vendor.public_key());

  std::string ops;
  for (std::uint32_t i = 0; i < total_runs; ++i) {
    LoadResult r = monitor.verify_and_lock(packages[i]);
    if (!r.ok()) {
      ++rep.failures;
      continue;
    }
    if (i < config.warmup) continue;
    rep.verify_samples.push_back(r.timings.verify_ms);
    rep.lock_samples.push_back(r.timings.lock_ms);
    rep.total_samples.push_back(r.timings.total_ms);
    ops += "verify_and_lock version=" + std::to_string(i + 1) +
           " size=" + std::to_string(config.firmware_size) +
           " scheme=" + std::string(crypto::scheme_name(config.scheme)) +
           " lock=" + std::string(lock_mode_name(config.lock_mode)) + "\n";
  }
  rep.verify = compute_stats(rep.verify_samples);
  rep.lock = compute_stats(rep.lock_samples);
  rep.total = compute_stats(rep.total_samples);
  rep.overhead_ratio = rep.total.mean_ms / config.gpu_init_ms;
  rep.operations_digest = crypto::hash(as_bytes(ops)).hex();
  return rep;
}

DemoTranscript run_demo(std::uint64_t seed) {
  DemoTranscript t;
  auto say = [&](std::string line) { t.lines.push_back(std::move(line)); };
  const crypto::KeyPair vendor = crypto::keygen(
      crypto::Scheme::kEcdsaP256, seed, crypto::KeySource::kTestFixture);
  std::mt19937_64 rng(seed);
  Bytes good_fw = random_bytes(rng, 64 * 1024);
  FirmwarePackage signed_pkg = vendor_package(good_fw, 3, vendor);

  RawBundle tampered = signed_pkg.raw();
  tampered.firmware[0x100] ^= 0x5a;
  Bytes evil = random_bytes(rng, 64 * 1024);
  Manifest evil_manifest = make_manifest(
      3, std::string(kMcuId), std::string(kTimestamp), crypto::hash(evil),
      {std::string(kFlagRequiresLock)});
  RawBundle unsigned_bundle{evil, canonical_bytes(evil_manifest),
                            Bytes(crypto::Signature::kSize, 0)};

  auto short_hex = [](const crypto::Digest& d) {
    return d.hex().substr(0, 16) + "...";
  };

  say("=== BEFORE: vulnerable EL1 firmware loading (no attestation) ===");
  {
    McuRegion region(LockMode::kHardwareWP);
    bool ok = baseline_load(region, tampered.firmware);
    t.baseline_accepted_tampered =
        ok && region.digest() == crypto::hash(tampered.firmware);
    say("[EL1] load tampered firmware.bin (sha256 " +
        short_hex(crypto::hash(tampered.firmware)) + ") -> " +
        (ok ? "ACCEPTED" : "refused"));
    say("[MCU] running unverified firmware: attacker code executes");
    WriteAttempt w = region.el1_write(0x200, as_bytes("PWN"));
    say(std::string("[EL1] overwrite MCU firmware region -> ") +
        (w.applied() ? "APPLIED (region never locked)" : "denied"));
  }

  say("=== AFTER: EL3 VerifyAndLock ===");
  McuRegion region(LockMode::kHardwareWP);
  Monitor monitor(region, MonitorConfig{std::string(kMcuId),
                                        {std::string(kFlagRequiresLock)},
                                        seed});
  monitor.provision(std::make_unique<MemoryBackend>(), vendor.public_key());
  say("[EL3] anchor provisioned (" +
      std::string(crypto::scheme_name(vendor.scheme())) + "), nv_counter=0");

  LoadResult r1 = monitor.verify_and_lock(tampered);
  t.faarm_rejected_tampered =
      r1.reason == RejectionReason::kHashMismatch;
  say("[EL3] tampered firmware.bin -> " +
      (r1.ok() ? std::string("ACCEPTED")
               : "REJECTED (" + std::string(reason_name(*r1.reason)) + ")"));

  LoadResult r2 = monitor.verify_and_lock(unsigned_bundle);
  t.faarm_rejected_unsigned = r2.reason == RejectionReason::kBadSignature;
  say("[EL3] unsigned firmware.bin -> " +
      (r2.ok() ? std::string("ACCEPTED")
               : "REJECTED (" + std::string(reason_name(*r2.reason)) + ")"));

  LoadResult r3 = monitor.verify_and_lock(signed_pkg);
  t.faarm_locked_signed = r3.ok() &&
                          region.lock_state() == LockState::kLocked &&
                          region.digest() == crypto::hash(good_fw);
  say("[EL3] vendor-signed firmware v3 (sha256 " +
      short_hex(crypto::hash(good_fw)) + ") -> " +
      (r3.ok() ? "SUCCESS: loaded and locked (" +
                     std::string(lock_mode_name(region.mode())) +
                     "), nv_counter=" +
                     std::to_string(monitor.state().nv_counter())
               : "REJECTED (" + std::string(reason_name(*r3.reason)) + ")"));

  WriteAttempt w = region.el1_write(0x200, as_bytes("PWN"));
  t.faarm_denied_overwrite = !w.applied();
  say(std::string("[EL1] overwrite MCU firmware region -> ") +
      (w.applied() ? "APPLIED"
                   : "DENIED (" + std::string(deny_reason_name(w.reason)) +
                         ")"));
  if (r3.ok()) {
    bool ready = monitor.session_start() == SessionResult::kReady;
    say(std::string("[EL3] session recheck -> ") +
        (ready ? "clean, secure tasks admitted" : "quarantined"));
  }
  say("[EL3] status: " + std::string(phase_name(monitor.status().phase)));
  return t;
}

}  // namespace fwattest::harness
