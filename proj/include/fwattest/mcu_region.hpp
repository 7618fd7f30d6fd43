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

#ifndef FWATTEST_MCU_REGION_HPP_
#define FWATTEST_MCU_REGION_HPP_

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "fwattest/bytes.hpp"
#include "fwattest/crypto.hpp"
#include "fwattest/package.hpp"

namespace fwattest {

enum class LockMode { kHardwareWP, kSoftwareLock };
enum class LockState { kUnlocked, kLocked };
enum class WriteOrigin { kEl1, kEl3SecureLoader, kTestHook };
enum class WriteOutcome { kApplied, kDenied };
enum class DenyReason { kNone, kLocked, kRange, kBusy };

// Points in the load protocol where a test harness may schedule adversarial
// writes deterministically.
enum class Interposition { kPreVerify, kPostVerifyPreLock, kPostLock };

enum class RecheckResult { kClean, kTampered };

std::string_view lock_mode_name(LockMode m);
std::optional<LockMode> parse_lock_mode(std::string_view name);
std::string_view origin_name(WriteOrigin o);
std::string_view deny_reason_name(DenyReason r);
std::string_view interposition_name(Interposition p);

struct WriteAttempt {
  WriteOrigin origin = WriteOrigin::kEl1;
  std::size_t offset = 0;
  std::size_t length = 0;
  WriteOutcome outcome = WriteOutcome::kApplied;
  DenyReason reason = DenyReason::kNone;

  bool applied() const { return outcome == WriteOutcome::kApplied; }
};

struct LockEvent {
  bool noop = false;
  LockMode mode = LockMode::kHardwareWP;
  crypto::Digest digest;
};

// Callbacks run on the thread that made the attempt, outside the region's
// internal mutex. They may call back into the region.
struct RegionObserver {
  std::function<void(const WriteAttempt&)> on_write;
  std::function<void(const LockEvent&)> on_lock;
};

enum class LockOutcome { kLocked, kAlreadyLocked, kEngageFailed };

struct RegionDump {
  std::size_t capacity = 0;
  std::size_t size = 0;
  LockMode mode = LockMode::kHardwareWP;
  LockState state = LockState::kUnlocked;
  crypto::Digest content_digest;
  std::optional<crypto::Digest> running_digest;
};

// Emulated GPU MCU firmware memory. Content is the loaded image (at most
// `capacity` bytes). Shared between one monitor and any number of EL1
// writer threads.
class McuRegion {
 public:
  explicit McuRegion(LockMode mode,
                     std::size_t capacity = kDefaultRegionCapacity);
  McuRegion(const McuRegion&) = delete;
  McuRegion& operator=(const McuRegion&) = delete;

  // Normal-world write path. Applied iff unlocked and no monitor load is in
  // progress; writes past the current end grow the image.
  WriteAttempt el1_write(std::size_t offset, ByteView bytes);

  // Stand-in for transient tampering (e.g. glitching across a power cycle).
  // Bypasses a software lock; cannot bypass hardware write protection.
  WriteAttempt test_hook_write(std::size_t offset, ByteView bytes);

  // EL1 reads are permitted, locked or not.
  Bytes content() const;
  crypto::Digest digest() const;

  std::size_t capacity() const { return capacity_; }
  LockMode configured_mode() const { return configured_mode_; }
  LockMode mode() const;
  LockState lock_state() const;
  std::optional<crypto::Digest> running_digest() const;
  RegionDump dump() const;

  // Standalone loader primitives. Throws Error if the region is locked or
  // the image exceeds capacity.
  void secure_write_atomic(ByteView firmware);
  // Double lock is a recorded no-op.
  LockOutcome lock();

  // Throws Error while unlocked.
  RecheckResult recheck() const;

  // Makes the next hardware write-protect engagement fail (one shot).
  void inject_hw_lock_failure() { fail_next_hw_lock_.store(true); }

  void set_observer(RegionObserver observer);
  void set_interposer(std::function<void(Interposition)> hook);
  void interpose(Interposition point);

  // Monitor-owned load transaction: while open, every EL1 write is denied.
  // Opening it on a locked region unlocks it for the update; destroying it
  // without a successful lock restores the previous image and lock state.
  class Update {
   public:
    Update(const Update&) = delete;
    Update& operator=(const Update&) = delete;
    ~Update();

    // Throws Error if the image exceeds capacity.
    void write(ByteView firmware);
    // Engages the region's configured lock mode.
    LockOutcome lock();
    // Software lock regardless of configured mode (fallback path).
    void lock_software();
    // Puts the pre-update image and lock state back.
    void restore();

   private:
    friend class McuRegion;
    explicit Update(McuRegion& region);

    McuRegion& region_;
    Bytes saved_content_;
    LockMode saved_mode_;
    LockState saved_state_;
    std::optional<crypto::Digest> saved_digest_;
    bool locked_ = false;
  };

  Update begin_update();

 private:
  WriteAttempt write_from(WriteOrigin origin, std::size_t offset,
                          ByteView bytes);
  void engage_locked(LockMode mode);  // requires mu_
  void notify_write(const WriteAttempt& a) const;
  void notify_lock(const LockEvent& e) const;

  const std::size_t capacity_;
  const LockMode configured_mode_;
  mutable std::mutex mu_;
  Bytes content_;
  LockMode mode_;  // mode actually engaged for the current image
  LockState state_ = LockState::kUnlocked;
  std::optional<crypto::Digest> running_digest_;
  bool updating_ = false;
  std::atomic<bool> fail_next_hw_lock_{false};

  mutable std::mutex hooks_mu_;
  RegionObserver observer_;
  std::function<void(Interposition)> interposer_;
};

}  // namespace fwattest

#endif  // FWATTEST_MCU_REGION_HPP_
