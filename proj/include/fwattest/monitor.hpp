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

#ifndef FWATTEST_MONITOR_HPP_
#define FWATTEST_MONITOR_HPP_

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fwattest/crypto.hpp"
#include "fwattest/mcu_region.hpp"
#include "fwattest/package.hpp"
#include "fwattest/secure_state.hpp"

namespace fwattest {

enum class Phase { kUnprovisioned, kIdle, kVerifying, kLoadedLocked,
                   kQuarantined };

enum class RejectionReason {
  kBadSignature,
  kHashMismatch,
  kRollback,
  kUnknownFlag,
  kOversize,
  kLockFailed,
  kMalformedBundle,
};

std::string_view phase_name(Phase p);
std::string_view reason_name(RejectionReason r);
std::optional<RejectionReason> parse_reason(std::string_view name);

// CLI exit codes: 0 on success, 10..16 per rejection reason.
inline constexpr int kExitSuccess = 0;
int exit_code(RejectionReason r);

// Stand-in for the TZASC/SMMU configuration. Bookkeeping only; the region
// lock is what actually enforces write protection.
enum class Agent { kEl1, kEl3, kGpu };
std::string_view agent_name(Agent a);

struct ProtectionEntry {
  std::string region;
  std::set<Agent> allowed;

  friend bool operator==(const ProtectionEntry&,
                         const ProtectionEntry&) = default;
};

inline constexpr std::string_view kFirmwareRegionId = "mcu-firmware";
inline constexpr std::string_view kTaskDataRegionId = "gpu-task-data";

struct ProtectionTable {
  std::vector<ProtectionEntry> entries;

  // Normal-world default: EL1 can reach everything.
  static ProtectionTable open_default();
  // After a successful load: firmware = {EL3}, task data = {EL3, GPU}.
  static ProtectionTable attested();

  const ProtectionEntry* find(std::string_view region) const;
  friend bool operator==(const ProtectionTable&,
                         const ProtectionTable&) = default;
};

// Session-scoped authorization, bound to the loaded version and digest.
struct AuthToken {
  std::array<std::uint8_t, 16> id{};
  std::uint64_t version = 0;
  crypto::Digest digest;

  std::string id_hex() const { return to_hex(id); }
  friend bool operator==(const AuthToken&, const AuthToken&) = default;
};

struct StageTimings {
  double verify_ms = 0;  // hash + manifest checks + signature + version
  double lock_ms = 0;    // secure write + lock + protection table
  double total_ms = 0;   // whole call, including audit and counter commit
};

struct LoadResult {
  std::optional<AuthToken> token;
  std::optional<RejectionReason> reason;
  std::string detail;
  StageTimings timings;

  bool ok() const { return token.has_value(); }
};

enum class SessionResult { kReady, kQuarantined };

enum class TaskDenial { kInvalidToken, kNotLoaded, kQuarantined, kBadEnvelope };
std::string_view task_denial_name(TaskDenial d);

struct TaskOutcome {
  bool admitted = false;
  std::optional<TaskDenial> denial;
  std::optional<crypto::Digest> ran_on;  // firmware digest the task ran on
};

// Opaque task payloads carry this 4-byte envelope magic; the monitor checks
// the envelope and nothing else.
inline constexpr std::string_view kTaskEnvelopeMagic = "ETSK";
Bytes make_task_envelope(ByteView ciphertext);

struct MonitorStatus {
  Phase phase = Phase::kUnprovisioned;
  std::optional<std::uint64_t> current_version;
  std::optional<crypto::Digest> current_digest;
  std::uint64_t nv_counter = 0;
};

struct MonitorConfig {
  std::string mcu_id = "MALI-MCU-XYZ";
  std::set<std::string> known_flags = {std::string(kFlagRequiresLock)};
  // Seeds token ids for reproducible runs; otherwise the OS CSPRNG is used.
  std::optional<std::uint64_t> token_seed;
};

// EL3 secure monitor. Entry points serialize on one internal mutex; EL1
// agents interact only through the region's write path and submit_task().
class Monitor {
 public:
  Monitor(McuRegion& region, MonitorConfig config = {});
  Monitor(McuRegion& region, SecureState state, MonitorConfig config = {});
  ~Monitor();
  Monitor(const Monitor&) = delete;
  Monitor& operator=(const Monitor&) = delete;

  void provision(std::unique_ptr<StateBackend> backend,
                 const crypto::PublicKey& anchor, bool reset = false,
                 Clock clock = utc_now);

  // The full load protocol. Steps, each short-circuiting with its reason:
  //   1. H = hash(firmware)
  //   2. H == manifest.firmware_hash              (HashMismatch)
  //   3. signature over H ‖ canonical manifest    (BadSignature)
  //   4. manifest.version > nv_counter            (Rollback)
  //   5. mcu_id, flags, size policy               (MalformedBundle,
  //                                                UnknownFlag, Oversize)
  //   6. secure write + lock, one critical section (LockFailed)
  //   7. protection table
  //   8. counter commit, token issue
  // Throws Error (after restoring the region) if persistence fails.
  LoadResult verify_and_lock(const RawBundle& bundle);
  LoadResult verify_and_lock(const FirmwarePackage& pkg);

  // Throws Error if nothing has been loaded.
  SessionResult session_start();

  TaskOutcome submit_task(const AuthToken& token, ByteView payload);

  MonitorStatus status() const;
  ProtectionTable protection() const;

  const SecureState& state() const;
  SecureState& state();
  McuRegion& region() { return region_; }
  const MonitorConfig& config() const { return config_; }

 private:
  struct Candidate {
    Bytes firmware;
    std::optional<Manifest> manifest;
    Bytes manifest_bytes;
    Bytes signature;
    std::optional<RejectionReason> parse_failure;
    std::string parse_detail;
  };

  LoadResult run_load(Candidate c);
  LoadResult reject(RejectionReason reason, std::string detail,
                    const std::optional<std::uint64_t>& version,
                    const std::optional<crypto::Digest>& digest);
  AuthToken issue_token(std::uint64_t version, const crypto::Digest& digest);
  bool token_valid(const AuthToken& token) const;
  void install_observer();

  McuRegion& region_;
  MonitorConfig config_;
  mutable std::mutex mu_;
  std::unique_ptr<SecureState> state_;
  std::atomic<SecureState*> audit_sink_{nullptr};
  std::atomic<std::uint64_t> pending_version_{0};

  Phase phase_ = Phase::kUnprovisioned;
  Phase phase_before_load_ = Phase::kUnprovisioned;
  std::optional<std::uint64_t> current_version_;
  std::optional<crypto::Digest> current_digest_;
  std::optional<AuthToken> token_;
  ProtectionTable protection_ = ProtectionTable::open_default();
  std::optional<std::mt19937_64> token_rng_;
};

}  // namespace fwattest

#endif  // FWATTEST_MONITOR_HPP_
