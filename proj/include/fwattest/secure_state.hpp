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

#ifndef FWATTEST_SECURE_STATE_HPP_
#define FWATTEST_SECURE_STATE_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fwattest/bytes.hpp"
#include "fwattest/crypto.hpp"

namespace fwattest {

enum class AuditEvent {
  kProvision,
  kVerifyAccept,
  kVerifyReject,
  kLock,
  kWriteDenied,
  kSessionRecheck,
  kTaskAdmit,
  kTaskDeny,
  // Counter commit; written ahead of state.json.
  kCommit,
};

std::string_view event_name(AuditEvent e);
std::optional<AuditEvent> parse_event(std::string_view name);

struct AuditRecord {
  std::uint64_t seq = 0;
  std::string time;
  AuditEvent event = AuditEvent::kProvision;
  std::optional<std::uint64_t> version;
  std::optional<std::string> reason;
  std::optional<std::string> digest;
  std::optional<std::string> detail;

  friend bool operator==(const AuditRecord&, const AuditRecord&) = default;
};

// One audit.log line (without the newline), chained to the previous line.
std::string encode_audit_line(const AuditRecord& r,
                              const std::string& prev_hash);
// Throws Error on anything that is not a well-formed record line.
AuditRecord decode_audit_line(std::string_view line,
                              std::string* prev_hash = nullptr);

inline const std::string kGenesisHash(64, '0');

struct PersistedState {
  crypto::PublicKey anchor;
  std::uint64_t nv_counter = 0;

  friend bool operator==(const PersistedState&,
                         const PersistedState&) = default;
};

Bytes encode_state(const PersistedState& s);
PersistedState decode_state(ByteView json);

// Raised by fault injection in place of a process crash.
class SimulatedCrash : public Error {
 public:
  SimulatedCrash() : Error("simulated crash") {}
};

// Crash plan for kill-point testing: the `crash_at`-th durable write (audit
// append or state write, counted from 1) crashes. With `torn`, half of the
// bytes reach the disk first.
struct FaultPlan {
  std::uint64_t crash_at = 0;
  bool torn = false;
};

// Where SecureState keeps its bytes. Implementations need not be
// thread-safe; SecureState serializes access.
class StateBackend {
 public:
  virtual ~StateBackend() = default;
  virtual std::optional<Bytes> load_state() = 0;
  virtual void store_state(ByteView json) = 0;
  // Complete lines only; a torn trailing line is discarded (and removed).
  virtual std::vector<std::string> load_audit() = 0;
  virtual void append_audit(const std::string& line) = 0;
  // Moves current state and log aside for a destructive re-provision.
  virtual void archive() = 0;
};

class MemoryBackend : public StateBackend {
 public:
  std::optional<Bytes> load_state() override { return state_; }
  void store_state(ByteView json) override {
    state_ = Bytes(json.begin(), json.end());
  }
  std::vector<std::string> load_audit() override { return lines_; }
  void append_audit(const std::string& line) override {
    lines_.push_back(line);
  }
  void archive() override {
    archived_.push_back(std::move(lines_));
    lines_.clear();
    state_.reset();
  }

  const std::vector<std::vector<std::string>>& archived() const {
    return archived_;
  }

 private:
  std::optional<Bytes> state_;
  std::vector<std::string> lines_;
  std::vector<std::vector<std::string>> archived_;
};

// state.json + audit.log in one directory, guarded by an exclusive flock on
// `.lock` for the lifetime of the backend (single writer).
class FileBackend : public StateBackend {
 public:
  struct Options {
    bool fsync = true;
    FaultPlan fault;
  };

  explicit FileBackend(std::filesystem::path dir);
  FileBackend(std::filesystem::path dir, Options options);
  ~FileBackend() override;
  FileBackend(const FileBackend&) = delete;
  FileBackend& operator=(const FileBackend&) = delete;

  std::optional<Bytes> load_state() override;
  void store_state(ByteView json) override;
  std::vector<std::string> load_audit() override;
  void append_audit(const std::string& line) override;
  void archive() override;

  const std::filesystem::path& dir() const { return dir_; }
  std::uint64_t durable_writes() const { return writes_; }

 private:
  // Counts the write and applies the fault plan. Returns true if the caller
  // should write only half the bytes and then crash.
  bool begin_write();

  std::filesystem::path dir_;
  Options options_;
  int lock_fd_ = -1;
  int audit_fd_ = -1;
  std::uint64_t writes_ = 0;
};

inline constexpr std::string_view kStateFile = "state.json";
inline constexpr std::string_view kAuditFile = "audit.log";
inline constexpr std::string_view kStateDirEnv = "FWATTEST_STATE_DIR";

// Results of replaying and checking an audit log.
struct AuditReplay {
  bool chain_ok = true;
  std::string error;
  std::size_t records = 0;
  std::optional<crypto::PublicKey> anchor;
  std::uint64_t committed_version = 0;
  std::vector<std::uint64_t> accepted_versions;
  std::vector<std::uint64_t> committed_versions;
};

AuditReplay replay_audit(const std::vector<std::string>& lines);

// Read-only inspection of a state directory; takes no lock.
struct StateSnapshot {
  std::optional<PersistedState> state;
  std::vector<std::string> audit_lines;
};
StateSnapshot read_state_dir(const std::filesystem::path& dir);

enum class VersionDecision { kAccept, kRollback };

using Clock = std::function<std::string()>;
std::string utc_now();

// EL3 trusted state: anchor, monotonic counter, hash-chained audit log.
// All members are safe to call from several threads.
class SecureState {
 public:
  // Fails if the backend already holds a state unless `reset` is set, in
  // which case the old state and log are archived first.
  static SecureState provision(std::unique_ptr<StateBackend> backend,
                               const crypto::PublicKey& anchor,
                               bool reset = false, Clock clock = utc_now);

  // Loads and recovers: drops a torn audit tail, checks the hash chain and
  // rolls the counter forward to the last COMMIT record. Throws Error if the
  // backend was never provisioned or the chain is broken.
  static SecureState open(std::unique_ptr<StateBackend> backend,
                          Clock clock = utc_now);

  SecureState(SecureState&&) noexcept;
  SecureState& operator=(SecureState&&) noexcept;
  ~SecureState();

  const crypto::PublicKey& anchor() const { return anchor_; }
  std::uint64_t nv_counter() const;

  // Phase one of the counter update: a pure check, strict inequality.
  VersionDecision check_and_advance(std::uint64_t candidate) const;

  // Phase two: writes the COMMIT record, then state.json. Throws Error if
  // `version` would not increase the counter.
  void commit(std::uint64_t version, const crypto::Digest& digest);

  // Assigns seq, time and chain hash, then persists before returning.
  AuditRecord append_audit(AuditRecord record);

  std::vector<AuditRecord> audit() const;
  std::vector<std::string> audit_lines() const;

  StateBackend& backend() { return *backend_; }

 private:
  SecureState(std::unique_ptr<StateBackend> backend, crypto::PublicKey anchor,
              Clock clock);

  AuditRecord append_locked(AuditRecord record);

  mutable std::unique_ptr<std::mutex> mu_;
  std::unique_ptr<StateBackend> backend_;
  crypto::PublicKey anchor_;
  Clock clock_;
  std::uint64_t nv_counter_ = 0;
  std::uint64_t next_seq_ = 1;
  std::string prev_hash_ = kGenesisHash;
  std::vector<std::string> lines_;
};

}  // namespace fwattest

#endif  // FWATTEST_SECURE_STATE_HPP_
