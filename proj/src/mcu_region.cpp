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

#include "fwattest/mcu_region.hpp"

namespace fwattest {

std::string_view lock_mode_name(LockMode m) {
  return m == LockMode::kHardwareWP ? "hardware-wp" : "software-lock";
}

std::optional<LockMode> parse_lock_mode(std::string_view name) {
  if (name == "hardware-wp" || name == "hw" || name == "hardware") {
    return LockMode::kHardwareWP;
  }
  if (name == "software-lock" || name == "sw" || name == "software") {
    return LockMode::kSoftwareLock;
  }
  return std::nullopt;
}

std::string_view origin_name(WriteOrigin o) {
  switch (o) {
    case WriteOrigin::kEl1:
      return "EL1";
    case WriteOrigin::kEl3SecureLoader:
      return "EL3-SecureLoader";
    case WriteOrigin::kTestHook:
      return "TestHook";
  }
  return "unknown";
}

std::string_view deny_reason_name(DenyReason r) {
  switch (r) {
    case DenyReason::kNone:
      return "none";
    case DenyReason::kLocked:
      return "locked";
    case DenyReason::kRange:
      return "range";
    case DenyReason::kBusy:
      return "busy";
  }
  return "unknown";
}

std::string_view interposition_name(Interposition p) {
  switch (p) {
    case Interposition::kPreVerify:
      return "pre-verify";
    case Interposition::kPostVerifyPreLock:
      return "post-verify-pre-lock";
    case Interposition::kPostLock:
      return "post-lock";
  }
  return "unknown";
}

McuRegion::McuRegion(LockMode mode, std::size_t capacity)
    : capacity_(capacity), configured_mode_(mode), mode_(mode) {}

WriteAttempt McuRegion::el1_write(std::size_t offset, ByteView bytes) {
  return write_from(WriteOrigin::kEl1, offset, bytes);
}

WriteAttempt McuRegion::test_hook_write(std::size_t offset, ByteView bytes) {
  return write_from(WriteOrigin::kTestHook, offset, bytes);
}

WriteAttempt McuRegion::write_from(WriteOrigin origin, std::size_t offset,
                                   ByteView bytes) {
  WriteAttempt a{origin, offset, bytes.size(), WriteOutcome::kDenied,
                 DenyReason::kNone};
  {
    std::lock_guard lk(mu_);
    bool soft_bypass = origin == WriteOrigin::kTestHook &&
                       mode_ == LockMode::kSoftwareLock;
    if (offset > capacity_ || bytes.size() > capacity_ - offset) {
      a.reason = DenyReason::kRange;
    } else if (updating_) {
      a.reason = DenyReason::kBusy;
    } else if (state_ == LockState::kLocked && !soft_bypass) {
      a.reason = DenyReason::kLocked;
    } else {
      if (offset + bytes.size() > content_.size()) {
        content_.resize(offset + bytes.size(), 0);
      }
      std::copy(bytes.begin(), bytes.end(), content_.begin() + offset);
      a.outcome = WriteOutcome::kApplied;
    }
  }
  notify_write(a);
  return a;
}

Bytes McuRegion::content() const {
  std::lock_guard lk(mu_);
  return content_;
}

crypto::Digest McuRegion::digest() const {
  std::lock_guard lk(mu_);
  return crypto::hash(content_);
}

LockMode McuRegion::mode() const {
  std::lock_guard lk(mu_);
  return mode_;
}

LockState McuRegion::lock_state() const {
  std::lock_guard lk(mu_);
  return state_;
}

std::optional<crypto::Digest> McuRegion::running_digest() const {
  std::lock_guard lk(mu_);
  return running_digest_;
}

RegionDump McuRegion::dump() const {
  std::lock_guard lk(mu_);
  return RegionDump{capacity_, content_.size(), mode_, state_,
                    crypto::hash(content_), running_digest_};
}

void McuRegion::secure_write_atomic(ByteView firmware) {
  if (lock_state() == LockState::kLocked) {
    throw Error("secure write into a locked region");
  }
  Update u = begin_update();
  u.write(firmware);
  // A standalone write leaves the region unlocked; keep the new image.
  u.locked_ = true;
}

LockOutcome McuRegion::lock() {
  LockEvent ev;
  {
    std::lock_guard lk(mu_);
    if (state_ == LockState::kLocked) {
      ev = LockEvent{true, mode_, *running_digest_};
    } else {
      if (configured_mode_ == LockMode::kHardwareWP &&
          fail_next_hw_lock_.exchange(false)) {
        return LockOutcome::kEngageFailed;
      }
      engage_locked(configured_mode_);
      ev = LockEvent{false, mode_, *running_digest_};
    }
  }
  notify_lock(ev);
  return ev.noop ? LockOutcome::kAlreadyLocked : LockOutcome::kLocked;
}

RecheckResult McuRegion::recheck() const {
  std::lock_guard lk(mu_);
  if (state_ != LockState::kLocked) {
    throw Error("recheck requires a locked region");
  }
  return crypto::hash(content_) == *running_digest_ ? RecheckResult::kClean
                                                    : RecheckResult::kTampered;
}

void McuRegion::set_observer(RegionObserver observer) {
  std::lock_guard lk(hooks_mu_);
  observer_ = std::move(observer);
}

void McuRegion::set_interposer(std::function<void(Interposition)> hook) {
  std::lock_guard lk(hooks_mu_);
  interposer_ = std::move(hook);
}

void McuRegion::interpose(Interposition point) {
  std::function<void(Interposition)> hook;
  {
    std::lock_guard lk(hooks_mu_);
    hook = interposer_;
  }
  if (hook) hook(point);
}

void McuRegion::engage_locked(LockMode mode) {
  mode_ = mode;
  state_ = LockState::kLocked;
  running_digest_ = crypto::hash(content_);
}

void McuRegion::notify_write(const WriteAttempt& a) const {
  std::function<void(const WriteAttempt&)> cb;
  {
    std::lock_guard lk(hooks_mu_);
    cb = observer_.on_write;
  }
  if (cb) cb(a);
}

void McuRegion::notify_lock(const LockEvent& e) const {
  std::function<void(const LockEvent&)> cb;
  {
    std::lock_guard lk(hooks_mu_);
    cb = observer_.on_lock;
  }
  if (cb) cb(e);
}

McuRegion::Update McuRegion::begin_update() {
  return Update(*this);
}

McuRegion::Update::Update(McuRegion& region) : region_(region) {
  std::lock_guard lk(region_.mu_);
  if (region_.updating_) throw Error("region update already in progress");
  region_.updating_ = true;
  saved_content_ = region_.content_;
  saved_mode_ = region_.mode_;
  saved_state_ = region_.state_;
  saved_digest_ = region_.running_digest_;
  // Unlock-for-update: EL1 stays shut out by `updating_`.
  region_.state_ = LockState::kUnlocked;
  region_.running_digest_.reset();
}

McuRegion::Update::~Update() {
  if (!locked_) restore();
  std::lock_guard lk(region_.mu_);
  region_.updating_ = false;
}

void McuRegion::Update::write(ByteView firmware) {
  std::lock_guard lk(region_.mu_);
  if (firmware.size() > region_.capacity_) {
    throw Error("firmware (" + std::to_string(firmware.size()) +
                " bytes) exceeds region capacity (" +
                std::to_string(region_.capacity_) + " bytes)");
  }
  if (region_.state_ == LockState::kLocked) {
    throw Error("secure write into a locked region");
  }
  region_.content_.assign(firmware.begin(), firmware.end());
}

LockOutcome McuRegion::Update::lock() {
  LockEvent ev;
  {
    std::lock_guard lk(region_.mu_);
    if (region_.state_ == LockState::kLocked) {
      ev = LockEvent{true, region_.mode_, *region_.running_digest_};
    } else {
      if (region_.configured_mode_ == LockMode::kHardwareWP &&
          region_.fail_next_hw_lock_.exchange(false)) {
        return LockOutcome::kEngageFailed;
      }
      region_.engage_locked(region_.configured_mode_);
      ev = LockEvent{false, region_.mode_, *region_.running_digest_};
    }
  }
  locked_ = true;
  region_.notify_lock(ev);
  return ev.noop ? LockOutcome::kAlreadyLocked : LockOutcome::kLocked;
}

void McuRegion::Update::lock_software() {
  LockEvent ev;
  {
    std::lock_guard lk(region_.mu_);
    region_.engage_locked(LockMode::kSoftwareLock);
    ev = LockEvent{false, region_.mode_, *region_.running_digest_};
  }
  locked_ = true;
  region_.notify_lock(ev);
}

void McuRegion::Update::restore() {
  std::lock_guard lk(region_.mu_);
  region_.content_ = saved_content_;
  region_.mode_ = saved_mode_;
  region_.state_ = saved_state_;
  region_.running_digest_ = saved_digest_;
  locked_ = true;  // nothing left to undo
}

}  // namespace fwattest
