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

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "fwattest/monitor.hpp"
#include "fwattest/secure_state.hpp"

namespace fwattest {
namespace {

using testing::fixture_key;
using testing::TempDir;

const std::vector<std::uint64_t> kCommits = {1, 3, 7, 8};

// Provision, then a mix of commits and plain audit records.
void run_script(std::unique_ptr<FileBackend> backend) {
  SecureState s = SecureState::provision(std::move(backend),
                                         fixture_key().public_key());
  s.commit(kCommits[0], crypto::hash({}));
  s.append_audit({.event = AuditEvent::kVerifyReject, .reason = "Rollback"});
  s.commit(kCommits[1], crypto::hash({}));
  s.commit(kCommits[2], crypto::hash({}));
  s.append_audit({.event = AuditEvent::kLock, .version = 7});
  s.commit(kCommits[3], crypto::hash({}));
}

std::uint64_t count_writes() {
  TempDir dir;
  auto backend = std::make_unique<FileBackend>(dir.path());
  FileBackend* raw = backend.get();
  SecureState s =
      SecureState::provision(std::move(backend), fixture_key().public_key());
  s.commit(kCommits[0], crypto::hash({}));
  s.append_audit({.event = AuditEvent::kVerifyReject, .reason = "Rollback"});
  s.commit(kCommits[1], crypto::hash({}));
  s.commit(kCommits[2], crypto::hash({}));
  s.append_audit({.event = AuditEvent::kLock, .version = 7});
  s.commit(kCommits[3], crypto::hash({}));
  return raw->durable_writes();
}

bool is_prefix(const std::vector<std::uint64_t>& p,
               const std::vector<std::uint64_t>& of) {
  return p.size() <= of.size() && std::equal(p.begin(), p.end(), of.begin());
}

class KillPoint : public ::testing::TestWithParam<bool> {};

TEST_P(KillPoint, EveryCrashPointRecoversToLastCommit) {
  const bool torn = GetParam();
  const std::uint64_t total = count_writes();
  ASSERT_GE(total, 10u);
  for (std::uint64_t k = 1; k <= total; ++k) {
    SCOPED_TRACE("crash at write " + std::to_string(k));
    TempDir dir;
    FileBackend::Options opts;
    opts.fault = {k, torn};
    EXPECT_THROW(run_script(std::make_unique<FileBackend>(dir.path(), opts)),
                 SimulatedCrash);
    if (k == 1) {
      // Died before the PROVISION record reached disk: nothing to recover.
      EXPECT_THROW(
          SecureState::open(std::make_unique<FileBackend>(dir.path())), Error);
      continue;
    }
    {
      SecureState s =
          SecureState::open(std::make_unique<FileBackend>(dir.path()));
      AuditReplay replay = replay_audit(s.audit_lines());
      ASSERT_TRUE(replay.chain_ok) << replay.error;
      EXPECT_EQ(s.nv_counter(), replay.committed_version);
      EXPECT_TRUE(is_prefix(replay.committed_versions, kCommits));
      EXPECT_EQ(decode_state(read_file(dir / "state.json")).nv_counter,
                s.nv_counter());
      // The recovered state keeps working.
      s.commit(s.nv_counter() + 100, crypto::hash({}));
    }
    SecureState again =
        SecureState::open(std::make_unique<FileBackend>(dir.path()));
    EXPECT_TRUE(replay_audit(again.audit_lines()).chain_ok);
  }
}

INSTANTIATE_TEST_SUITE_P(Modes, KillPoint, ::testing::Bool(),
                         [](const auto& info) {
                           return info.param ? "Torn" : "Clean";
                         });

TEST(MonitorCrash, InterruptedLoadRestoresRegionAndRecovers) {
  TempDir dir;
  auto key = fixture_key();
  {
    McuRegion region(LockMode::kHardwareWP);
    Monitor m(region);
    m.provision(std::make_unique<FileBackend>(dir.path()), key.public_key());
    ASSERT_TRUE(m.verify_and_lock(testing::signed_package(key, 2)).ok());
  }
  std::uint64_t writes_for_load = 0;
  {
    TempDir probe;
    McuRegion region(LockMode::kHardwareWP);
    auto backend = std::make_unique<FileBackend>(probe.path());
    FileBackend* raw = backend.get();
    Monitor m(region, SecureState::provision(std::move(backend),
                                             key.public_key()));
    std::uint64_t before = raw->durable_writes();
    ASSERT_TRUE(m.verify_and_lock(testing::signed_package(key, 5, 4096, 3)).ok());
    writes_for_load = raw->durable_writes() - before;
  }
  ASSERT_GT(writes_for_load, 0u);
  for (std::uint64_t k = 1; k <= writes_for_load; ++k) {
    SCOPED_TRACE("crash at load write " + std::to_string(k));
    TempDir copy;
    std::filesystem::copy(dir.path(), copy.path(),
                          std::filesystem::copy_options::recursive |
                              std::filesystem::copy_options::overwrite_existing);
    std::filesystem::remove(copy / ".lock");
    {
      McuRegion region(LockMode::kHardwareWP);
      FileBackend::Options opts;
      opts.fault = {k, true};
      Monitor m(region, SecureState::open(std::make_unique<FileBackend>(
                            copy.path(), opts)));
      Bytes before = region.content();
      auto pkg = testing::signed_package(key, 5, 4096, 3);
      bool crashed = false;
      try {
        m.verify_and_lock(pkg);
      } catch (const Error&) {
        crashed = true;
      }
      ASSERT_TRUE(crashed);
      // Persistence failed, so the load must not stand.
      EXPECT_NE(region.digest(), crypto::hash(pkg.firmware));
      EXPECT_EQ(region.content(), before);
    }
    SecureState s =
        SecureState::open(std::make_unique<FileBackend>(copy.path()));
    AuditReplay replay = replay_audit(s.audit_lines());
    ASSERT_TRUE(replay.chain_ok) << replay.error;
    EXPECT_EQ(s.nv_counter(), replay.committed_version);
    EXPECT_TRUE(s.nv_counter() == 2 || s.nv_counter() == 5);
  }
}

}  // namespace
}  // namespace fwattest
