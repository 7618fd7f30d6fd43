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

#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <thread>

#include "fixtures.hpp"

namespace fwattest {
namespace {

using testing::pseudo_random;

const Bytes kPatch = {0xde, 0xad, 0xbe, 0xef};

TEST(McuRegion, UnlockedEl1WriteApplies) {
  McuRegion r(LockMode::kHardwareWP, 1024);
  auto a = r.el1_write(0, kPatch);
  EXPECT_TRUE(a.applied());
  EXPECT_EQ(r.content(), kPatch);
  EXPECT_TRUE(r.el1_write(8, kPatch).applied());
  EXPECT_EQ(r.content().size(), 12u);
}

TEST(McuRegion, OutOfRangeDenied) {
  McuRegion r(LockMode::kHardwareWP, 16);
  auto a = r.el1_write(14, kPatch);
  EXPECT_FALSE(a.applied());
  EXPECT_EQ(a.reason, DenyReason::kRange);
  EXPECT_EQ(r.el1_write(SIZE_MAX, kPatch).reason, DenyReason::kRange);
  EXPECT_THROW(r.secure_write_atomic(Bytes(17)), Error);
}

class LockModes : public ::testing::TestWithParam<LockMode> {};

TEST_P(LockModes, LockedRegionDeniesEl1AndKeepsDigest) {
  McuRegion r(GetParam(), 1 << 16);
  Bytes fw = pseudo_random(1, 4096);
  r.secure_write_atomic(fw);
  EXPECT_EQ(r.lock(), LockOutcome::kLocked);
  auto h = crypto::hash(fw);
  EXPECT_EQ(r.running_digest(), h);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 500; ++i) {
    auto a = r.el1_write(rng() % 4096, kPatch);
    ASSERT_FALSE(a.applied());
    ASSERT_EQ(a.reason, DenyReason::kLocked);
  }
  EXPECT_EQ(r.digest(), h);
  EXPECT_EQ(r.recheck(), RecheckResult::kClean);
  // Reads stay allowed.
  EXPECT_EQ(r.content(), fw);
}

TEST_P(LockModes, DoubleLockIsNoop) {
  McuRegion r(GetParam());
  r.secure_write_atomic(kPatch);
  std::vector<LockEvent> events;
  r.set_observer({nullptr, [&](const LockEvent& e) { events.push_back(e); }});
  EXPECT_EQ(r.lock(), LockOutcome::kLocked);
  EXPECT_EQ(r.lock(), LockOutcome::kAlreadyLocked);
  ASSERT_EQ(events.size(), 2u);
  EXPECT_FALSE(events[0].noop);
  EXPECT_TRUE(events[1].noop);
  EXPECT_EQ(events[0].mode, GetParam());
}

TEST_P(LockModes, SecureWriteRefusedWhileLocked) {
  McuRegion r(GetParam());
  r.secure_write_atomic(kPatch);
  r.lock();
  EXPECT_THROW(r.secure_write_atomic(kPatch), Error);
}

INSTANTIATE_TEST_SUITE_P(Modes, LockModes,
                         ::testing::Values(LockMode::kHardwareWP,
                                           LockMode::kSoftwareLock));

TEST(McuRegion, TestHookBypassesOnlySoftwareLock) {
  McuRegion hw(LockMode::kHardwareWP);
  hw.secure_write_atomic(Bytes(64, 1));
  hw.lock();
  EXPECT_FALSE(hw.test_hook_write(0, kPatch).applied());
  EXPECT_EQ(hw.recheck(), RecheckResult::kClean);

  McuRegion sw(LockMode::kSoftwareLock);
  sw.secure_write_atomic(Bytes(64, 1));
  sw.lock();
  EXPECT_TRUE(sw.test_hook_write(0, kPatch).applied());
  EXPECT_EQ(sw.recheck(), RecheckResult::kTampered);
}

TEST(McuRegion, RecheckNeedsLock) {
  McuRegion r(LockMode::kHardwareWP);
  EXPECT_THROW(r.recheck(), Error);
}

TEST(McuRegion, HardwareLockFailureIsOneShot) {
  McuRegion r(LockMode::kHardwareWP);
  r.secure_write_atomic(kPatch);
  r.inject_hw_lock_failure();
  EXPECT_EQ(r.lock(), LockOutcome::kEngageFailed);
  EXPECT_EQ(r.lock_state(), LockState::kUnlocked);
  EXPECT_EQ(r.lock(), LockOutcome::kLocked);
}

TEST(Update, DeniesEl1AsBusyAndRestoresOnAbort) {
  McuRegion r(LockMode::kHardwareWP);
  Bytes old_fw(32, 7);
  r.secure_write_atomic(old_fw);
  r.lock();
  {
    auto u = r.begin_update();
    EXPECT_EQ(r.el1_write(0, kPatch).reason, DenyReason::kBusy);
    u.write(Bytes(48, 9));
    EXPECT_EQ(r.el1_write(0, kPatch).reason, DenyReason::kBusy);
    // No lock: destruction puts the old locked image back.
  }
  EXPECT_EQ(r.content(), old_fw);
  EXPECT_EQ(r.lock_state(), LockState::kLocked);
  EXPECT_EQ(r.recheck(), RecheckResult::kClean);
}

TEST(Update, LockedUpdateReplacesImage) {
  McuRegion r(LockMode::kHardwareWP);
  r.secure_write_atomic(Bytes(32, 7));
  r.lock();
  Bytes fw(48, 9);
  {
    auto u = r.begin_update();
    u.write(fw);
    EXPECT_EQ(u.lock(), LockOutcome::kLocked);
  }
  EXPECT_EQ(r.content(), fw);
  EXPECT_EQ(r.running_digest(), crypto::hash(fw));
  EXPECT_EQ(r.el1_write(0, kPatch).reason, DenyReason::kLocked);
}

TEST(Update, SoftwareFallbackRecordsMode) {
  McuRegion r(LockMode::kHardwareWP);
  auto u = r.begin_update();
  u.write(kPatch);
  u.lock_software();
  EXPECT_EQ(r.mode(), LockMode::kSoftwareLock);
  EXPECT_EQ(r.configured_mode(), LockMode::kHardwareWP);
}

TEST(Update, NestedUpdateRejected) {
  McuRegion r(LockMode::kHardwareWP);
  auto u = r.begin_update();
  EXPECT_THROW(r.begin_update(), Error);
}

TEST(McuRegion, ObserverSeesEveryAttempt) {
  McuRegion r(LockMode::kHardwareWP);
  std::vector<WriteAttempt> seen;
  r.set_observer({[&](const WriteAttempt& a) { seen.push_back(a); }, nullptr});
  r.el1_write(0, kPatch);
  r.lock();
  r.el1_write(0, kPatch);
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_TRUE(seen[0].applied());
  EXPECT_EQ(seen[1].reason, DenyReason::kLocked);
  EXPECT_EQ(seen[1].origin, WriteOrigin::kEl1);
}

// Writers racing the lock: every write lands either wholly before the lock
// (and is part of the locked digest) or is denied.
TEST(McuRegion, ConcurrentWritersCannotChangeLockedImage) {
  for (int round = 0; round < 50; ++round) {
    McuRegion r(LockMode::kHardwareWP, 8192);
    r.secure_write_atomic(Bytes(4096, 0));
    std::atomic<bool> go{false}, stop{false};
    std::vector<std::thread> writers;
    for (int t = 0; t < 3; ++t) {
      writers.emplace_back([&, t] {
        std::mt19937_64 rng(round * 10 + t);
        while (!go.load()) std::this_thread::yield();
        while (!stop.load()) r.el1_write(rng() % 4000, kPatch);
      });
    }
    go.store(true);
    std::this_thread::yield();
    r.lock();
    auto locked = r.running_digest();
    for (int i = 0; i < 100; ++i) std::this_thread::yield();
    stop.store(true);
    for (auto& w : writers) w.join();
    ASSERT_EQ(r.digest(), *locked);
  }
}

TEST(Names, ParseRoundTrips) {
  EXPECT_EQ(parse_lock_mode("hardware-wp"), LockMode::kHardwareWP);
  EXPECT_EQ(parse_lock_mode("software-lock"), LockMode::kSoftwareLock);
  EXPECT_EQ(parse_lock_mode("hw"), LockMode::kHardwareWP);
  EXPECT_EQ(parse_lock_mode("sw"), LockMode::kSoftwareLock);
  EXPECT_FALSE(parse_lock_mode("none"));
  EXPECT_EQ(deny_reason_name(DenyReason::kLocked), "locked");
}

}  // namespace
}  // namespace fwattest
