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

#include "fwattest/monitor.hpp"

#include <openssl/crypto.h>
#include <openssl/rand.h>

#include <algorithm>
#include <chrono>

namespace fwattest {

namespace {

using SteadyClock = std::chrono::steady_clock;

double ms_between(SteadyClock::time_point a, SteadyClock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

struct ReasonInfo {
  RejectionReason reason;
  std::string_view name;
  int exit_code;
};

constexpr ReasonInfo kReasons[] = {
    {RejectionReason::kBadSignature, "BadSignature", 10},
    {RejectionReason::kHashMismatch, "HashMismatch", 11},
    {RejectionReason::kRollback, "Rollback", 12},
    {RejectionReason::kUnknownFlag, "UnknownFlag", 13},
    {RejectionReason::kLockFailed, "LockFailed", 14},
    {RejectionReason::kMalformedBundle, "MalformedBundle", 15},
    {RejectionReason::kOversize, "Oversize", 16},
};

}  // namespace

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::kUnprovisioned:
      return "Unprovisioned";
    case Phase::kIdle:
      return "Idle";
    case Phase::kVerifying:
      return "Verifying";
    case Phase::kLoadedLocked:
      return "Loaded-Locked";
    case Phase::kQuarantined:
      return "Quarantined";
  }
  return "unknown";
}

std::string_view reason_name(RejectionReason r) {
  for (const auto& info : kReasons) {
    if (info.reason == r) return info.name;
  }
  return "unknown";
}

std::optional<RejectionReason> parse_reason(std::string_view name) {
  for (const auto& info : kReasons) {
    if (info.name == name) return info.reason;
  }
  return std::nullopt;
}

int exit_code(RejectionReason r) {
  for (const auto& info : kReasons) {
    if (info.reason == r) return info.exit_code;
  }
  return 1;
}

std::string_view agent_name(Agent a) {
  switch (a) {
    case Agent::kEl1:
      return "EL1";
    case Agent::kEl3:
      return "EL3";
    case Agent::kGpu:
      return "GPU";
  }
  return "unknown";
}

std::string_view task_denial_name(TaskDenial d) {
  switch (d) {
    case TaskDenial::kInvalidToken:
      return "invalid-token";
    case TaskDenial::kNotLoaded:
      return "not-loaded";
    case TaskDenial::kQuarantined:
      return "quarantined";
    case TaskDenial::kBadEnvelope:
      return "bad-envelope";
  }
  return "unknown";
}

ProtectionTable ProtectionTable::open_default() {
  return ProtectionTable{{
      {std::string(kFirmwareRegionId), {Agent::kEl1, Agent::kEl3}},
      {std::string(kTaskDataRegionId), {Agent::kEl1, Agent::kEl3, Agent::kGpu}},
  }};
}

ProtectionTable ProtectionTable::attested() {
  return ProtectionTable{{
      {std::string(kFirmwareRegionId), {Agent::kEl3}},
      {std::string(kTaskDataRegionId), {Agent::kEl3, Agent::kGpu}},
  }};
}

const ProtectionEntry* ProtectionTable::find(std::string_view region) const {
  for (const auto& e : entries) {
    if (e.region == region) return &e;
  }
  return nullptr;
}

Bytes make_task_envelope(ByteView ciphertext) {
  Bytes out(kTaskEnvelopeMagic.size() + ciphertext.size());
  auto it = std::copy(kTaskEnvelopeMagic.begin(), kTaskEnvelopeMagic.end(),
                      out.begin());
  std::copy(ciphertext.begin(), ciphertext.end(), it);
  return out;
}

Monitor::Monitor(McuRegion& region, MonitorConfig config)
    : region_(region), config_(std::move(config)) {
  if (config_.token_seed) token_rng_.emplace(*config_.token_seed);
  install_observer();
}

Monitor::Monitor(McuRegion& region, SecureState state, MonitorConfig config)
    : Monitor(region, std::move(config)) {
  state_ = std::make_unique<SecureState>(std::move(state));
  audit_sink_.store(state_.get());
  phase_ = Phase::kIdle;
}

Monitor::~Monitor() {
  region_.set_observer({});
}

void Monitor::install_observer() {
  RegionObserver obs;
  obs.on_write = [this](const WriteAttempt& a) {
    SecureState* sink = audit_sink_.load();
    if (a.applied() || sink == nullptr) return;
    AuditRecord rec;
    rec.event = AuditEvent::kWriteDenied;
    rec.detail = "origin=" + std::string(origin_name(a.origin)) +
                 " offset=" + std::to_string(a.offset) +
                 " length=" + std::to_string(a.length) +
                 " reason=" + std::string(deny_reason_name(a.reason));
    sink->append_audit(std::move(rec));
  };
  obs.on_lock = [this](const LockEvent& e) {
    SecureState* sink = audit_sink_.load();
    if (sink == nullptr) return;
    AuditRecord rec;
    rec.event = AuditEvent::kLock;
    if (std::uint64_t v = pending_version_.load()) rec.version = v;
    rec.digest = e.digest.hex();
    rec.detail = std::string(lock_mode_name(e.mode)) + (e.noop ? " no-op" : "");
    sink->append_audit(std::move(rec));
  };
  region_.set_observer(std::move(obs));
}

void Monitor::provision(std::unique_ptr<StateBackend> backend,
                        const crypto::PublicKey& anchor, bool reset,
                        Clock clock) {
  std::lock_guard lk(mu_);
  audit_sink_.store(nullptr);
  auto fresh = std::make_unique<SecureState>(SecureState::provision(
      std::move(backend), anchor, reset, std::move(clock)));
  state_ = std::move(fresh);
  audit_sink_.store(state_.get());
  phase_ = Phase::kIdle;
  current_version_.reset();
  current_digest_.reset();
  token_.reset();
  protection_ = ProtectionTable::open_default();
}

const SecureState& Monitor::state() const {
  if (!state_) throw Error("monitor is not provisioned");
  return *state_;
}

SecureState& Monitor::state() {
  if (!state_) throw Error("monitor is not provisioned");
  return *state_;
}

LoadResult Monitor::verify_and_lock(const RawBundle& bundle) {
  Candidate c;
  c.firmware = bundle.firmware;
  c.manifest_bytes = bundle.manifest;
  c.signature = bundle.signature;
  if (bundle.manifest.size() > kMaxManifestSize) {
    c.parse_failure = RejectionReason::kMalformedBundle;
    c.parse_detail = "manifest exceeds 64 KiB";
  } else {
    try {
      c.manifest = parse_manifest(bundle.manifest);
    } catch (const ManifestError& e) {
      c.parse_failure = RejectionReason::kMalformedBundle;
      c.parse_detail = std::string("manifest rejected: ") + e.what();
    }
  }
  return run_load(std::move(c));
}

LoadResult Monitor::verify_and_lock(const FirmwarePackage& pkg) {
  Candidate c;
  c.firmware = pkg.firmware;
  c.signature.assign(pkg.signature.bytes().begin(),
                     pkg.signature.bytes().end());
  try {
    c.manifest_bytes = canonical_bytes(pkg.manifest);
    c.manifest = pkg.manifest;
  } catch (const ManifestError& e) {
    c.parse_failure = RejectionReason::kMalformedBundle;
    c.parse_detail = std::string("manifest rejected: ") + e.what();
  }
  return run_load(std::move(c));
}

LoadResult Monitor::reject(RejectionReason reason, std::string detail,
                           const std::optional<std::uint64_t>& version,
                           const std::optional<crypto::Digest>& digest) {
  AuditRecord rec;
  rec.event = AuditEvent::kVerifyReject;
  rec.reason = std::string(reason_name(reason));
  rec.version = version;
  if (digest) rec.digest = digest->hex();
  if (!detail.empty()) rec.detail = detail;
  phase_ = phase_before_load_;
  pending_version_.store(0);
  state_->append_audit(std::move(rec));
  LoadResult r;
  r.reason = reason;
  r.detail = std::move(detail);
  return r;
}

// `c` is the monitor's private copy of the package; EL1 cannot touch it
// after this point.
LoadResult Monitor::run_load(Candidate c) {
  std::lock_guard lk(mu_);
  if (!state_) throw Error("monitor is not provisioned");

  phase_before_load_ = phase_;
  phase_ = Phase::kVerifying;
  region_.interpose(Interposition::kPreVerify);

  const auto t0 = SteadyClock::now();
  auto finish = [&](LoadResult r, SteadyClock::time_point t_verify) {
    r.timings.verify_ms = ms_between(t0, t_verify);
    r.timings.total_ms = ms_between(t0, SteadyClock::now());
    return r;
  };

  if (c.parse_failure) {
    return finish(reject(*c.parse_failure, c.parse_detail, std::nullopt,
                         std::nullopt),
                  SteadyClock::now());
  }
  const Manifest& m = *c.manifest;

  // 1-2. Digest and its binding to the manifest.
  const crypto::Digest h = crypto::hash(c.firmware);
  if (!(h == m.firmware_hash)) {
    return finish(reject(RejectionReason::kHashMismatch,
                         "firmware digest does not match manifest", m.version,
                         h),
                  SteadyClock::now());
  }
  // 3. Signature over H ‖ manifest.
  Bytes payload = crypto::signing_payload(h, c.manifest_bytes);
  if (!crypto::verify(state_->anchor(), payload, c.signature)) {
    return finish(reject(RejectionReason::kBadSignature,
                         "signature does not verify under the anchor",
                         m.version, h),
                  SteadyClock::now());
  }
  // 4. Anti-rollback; the counter itself moves only at step 8.
  if (state_->check_and_advance(m.version) == VersionDecision::kRollback) {
    return finish(reject(RejectionReason::kRollback,
                         "version " + std::to_string(m.version) +
                             " <= counter " +
                             std::to_string(state_->nv_counter()),
                         m.version, h),
                  SteadyClock::now());
  }
  // 5. Signed policy.
  if (m.mcu_id != config_.mcu_id) {
    return finish(reject(RejectionReason::kMalformedBundle,
                         "mcu_id " + m.mcu_id + " does not match " +
                             config_.mcu_id,
                         m.version, h),
                  SteadyClock::now());
  }
  for (const auto& flag : m.flags) {
    if (!config_.known_flags.contains(flag)) {
      return finish(reject(RejectionReason::kUnknownFlag,
                           "unknown flag " + flag, m.version, h),
                    SteadyClock::now());
    }
  }
  if (c.firmware.size() > region_.capacity()) {
    return finish(reject(RejectionReason::kOversize,
                         "firmware exceeds region capacity", m.version, h),
                  SteadyClock::now());
  }
  const auto t_verified = SteadyClock::now();

  AuditRecord accept;
  accept.event = AuditEvent::kVerifyAccept;
  accept.version = m.version;
  accept.digest = h.hex();
  pending_version_.store(m.version);
  state_->append_audit(std::move(accept));

  // 6-8. One critical section with respect to the EL1 write path. Any
  // failure inside it (including persistence) puts the old image back.
  SteadyClock::time_point t_locked;
  {
    McuRegion::Update update = region_.begin_update();
    const ProtectionTable previous = protection_;
    auto abandon = [&] {
      update.restore();
      protection_ = previous;
      phase_ = phase_before_load_;
      pending_version_.store(0);
    };
    try {
      update.write(c.firmware);
      region_.interpose(Interposition::kPostVerifyPreLock);
      if (update.lock() == LockOutcome::kEngageFailed) {
        if (m.has_flag(kFlagRequiresLock)) {
          update.restore();
          return finish(reject(RejectionReason::kLockFailed,
                               "hardware write protection did not engage",
                               m.version, h),
                        t_verified);
        }
        update.lock_software();
      }
      protection_ = ProtectionTable::attested();
      t_locked = SteadyClock::now();
      state_->commit(m.version, h);
    } catch (...) {
      abandon();
      throw;
    }
  }
  pending_version_.store(0);
  current_version_ = m.version;
  current_digest_ = h;
  token_ = issue_token(m.version, h);
  phase_ = Phase::kLoadedLocked;

  region_.interpose(Interposition::kPostLock);

  LoadResult r;
  r.token = token_;
  r.timings.lock_ms = ms_between(t_verified, t_locked);
  return finish(std::move(r), t_verified);
}

AuthToken Monitor::issue_token(std::uint64_t version,
                               const crypto::Digest& digest) {
  AuthToken t;
  t.version = version;
  t.digest = digest;
  if (token_rng_) {
    for (std::size_t i = 0; i < t.id.size(); i += 8) {
      std::uint64_t word = (*token_rng_)();
      for (std::size_t j = 0; j < 8; ++j) t.id[i + j] = (word >> (8 * j));
    }
  } else if (RAND_bytes(t.id.data(), static_cast<int>(t.id.size())) != 1) {
    throw Error("RAND_bytes failed");
  }
  return t;
}

bool Monitor::token_valid(const AuthToken& token) const {
  return token_ &&
         CRYPTO_memcmp(token.id.data(), token_->id.data(), token.id.size()) ==
             0 &&
         token.version == token_->version && token.digest == token_->digest;
}

SessionResult Monitor::session_start() {
  std::lock_guard lk(mu_);
  if (!state_ ||
      (phase_ != Phase::kLoadedLocked && phase_ != Phase::kQuarantined)) {
    throw Error("session_start: no firmware loaded");
  }
  AuditRecord rec;
  rec.event = AuditEvent::kSessionRecheck;
  rec.version = current_version_;
  if (current_digest_) rec.digest = current_digest_->hex();
  if (phase_ == Phase::kQuarantined) {
    rec.detail = "quarantined";
    state_->append_audit(std::move(rec));
    return SessionResult::kQuarantined;
  }
  if (region_.recheck() == RecheckResult::kClean) {
    rec.detail = "clean";
    state_->append_audit(std::move(rec));
    return SessionResult::kReady;
  }
  phase_ = Phase::kQuarantined;
  token_.reset();
  rec.detail = "tampered";
  state_->append_audit(std::move(rec));
  return SessionResult::kQuarantined;
}

TaskOutcome Monitor::submit_task(const AuthToken& token, ByteView payload) {
  std::lock_guard lk(mu_);
  TaskOutcome out;
  auto deny = [&](TaskDenial d) {
    out.denial = d;
    if (state_) {
      AuditRecord rec;
      rec.event = AuditEvent::kTaskDeny;
      rec.version = token.version;
      rec.digest = token.digest.hex();
      rec.reason = std::string(task_denial_name(d));
      state_->append_audit(std::move(rec));
    }
    return out;
  };

  if (phase_ == Phase::kQuarantined) return deny(TaskDenial::kQuarantined);
  if (phase_ != Phase::kLoadedLocked) return deny(TaskDenial::kNotLoaded);
  if (!token_valid(token)) return deny(TaskDenial::kInvalidToken);
  if (region_.recheck() == RecheckResult::kTampered) {
    phase_ = Phase::kQuarantined;
    token_.reset();
    AuditRecord rec;
    rec.event = AuditEvent::kSessionRecheck;
    rec.version = current_version_;
    rec.digest = current_digest_->hex();
    rec.detail = "tampered";
    state_->append_audit(std::move(rec));
    return deny(TaskDenial::kQuarantined);
  }
  if (payload.size() < kTaskEnvelopeMagic.size() ||
      as_chars(payload.first(kTaskEnvelopeMagic.size())) !=
          kTaskEnvelopeMagic) {
    return deny(TaskDenial::kBadEnvelope);
  }

  AuditRecord rec;
  rec.event = AuditEvent::kTaskAdmit;
  rec.version = current_version_;
  rec.digest = current_digest_->hex();
  rec.detail = "payload_bytes=" + std::to_string(payload.size());
  state_->append_audit(std::move(rec));
  out.admitted = true;
  out.ran_on = current_digest_;
  return out;
}

MonitorStatus Monitor::status() const {
  std::lock_guard lk(mu_);
  MonitorStatus s;
  s.phase = phase_;
  s.current_version = current_version_;
  s.current_digest = current_digest_;
  if (state_) s.nv_counter = state_->nv_counter();
  return s;
}

ProtectionTable Monitor::protection() const {
  std::lock_guard lk(mu_);
  return protection_;
}

}  // namespace fwattest
