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

#ifndef FWATTEST_TOOLS_COMMANDS_HPP_
#define FWATTEST_TOOLS_COMMANDS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fwattest/crypto.hpp"
#include "fwattest/mcu_region.hpp"
#include "fwattest/package.hpp"

namespace fwattest::cli {

inline constexpr int kExitInfra = 1;
inline constexpr int kExitUsage = 2;
// attack: a FAARM-mode adversarial trial succeeded.
inline constexpr int kExitAttackSucceeded = 3;

// Thrown for bad flag combinations that CLI11 cannot express.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Effective settings shared by every subcommand. Echoed into each report.
struct CliConfig {
  std::filesystem::path state_dir;
  std::string mcu_id = "MALI-MCU-XYZ";
  std::size_t region_capacity = kDefaultRegionCapacity;
  LockMode lock_mode = LockMode::kHardwareWP;
  bool json = false;
  std::optional<std::uint64_t> seed;
  bool test_fixtures = false;
};

// Requires a state directory from --state-dir or FWATTEST_STATE_DIR.
std::filesystem::path require_state_dir(const CliConfig& cfg);
std::string config_line(const CliConfig& cfg);

struct KeygenArgs {
  crypto::Scheme scheme = crypto::Scheme::kEcdsaP256;
  // Writes <out>.key (private) and <out>.pub (anchor).
  std::filesystem::path out;
  bool force = false;
};
int cmd_keygen(const CliConfig& cfg, const KeygenArgs& a, std::ostream& out,
               std::ostream& err);

struct SignArgs {
  std::filesystem::path firmware;
  std::uint64_t version = 0;
  std::vector<std::string> flags;
  std::string timestamp;  // empty: now
  std::filesystem::path key;
  std::filesystem::path out;
  bool force = false;
};
int cmd_sign(const CliConfig& cfg, const SignArgs& a, std::ostream& out,
             std::ostream& err);

struct ProvisionArgs {
  std::filesystem::path anchor;
  bool reset = false;
};
int cmd_provision(const CliConfig& cfg, const ProvisionArgs& a,
                  std::ostream& out, std::ostream& err);

struct VerifyArgs {
  std::filesystem::path bundle;
  bool inject_lock_failure = false;
};
int cmd_verify(const CliConfig& cfg, const VerifyArgs& a, std::ostream& out,
               std::ostream& err);

int cmd_status(const CliConfig& cfg, std::ostream& out, std::ostream& err);

struct LogArgs {
  bool check = false;
};
int cmd_log(const CliConfig& cfg, const LogArgs& a, std::ostream& out,
            std::ostream& err);

struct AttackArgs {
  std::vector<std::string> scenarios;
  bool all = false;
  std::string mode = "both";
  std::uint32_t trials = 50;
  crypto::Scheme scheme = crypto::Scheme::kEcdsaP256;
  std::size_t firmware_size = 64 * 1024;
  bool no_concurrent = false;
  bool parallel = false;
  bool latency = false;
  bool trial_records = false;
  std::filesystem::path csv;
};
int cmd_attack(const CliConfig& cfg, const AttackArgs& a, std::ostream& out,
               std::ostream& err);

struct BenchArgs {
  std::size_t firmware_size = 1024 * 1024;
  std::uint32_t runs = 100;
  std::uint32_t warmup = 10;
  double gpu_init_ms = 100.0;
  crypto::Scheme scheme = crypto::Scheme::kEcdsaP256;
  std::filesystem::path file_state;
  bool no_fsync = false;
  bool samples = false;
  std::filesystem::path csv;
};
int cmd_bench(const CliConfig& cfg, const BenchArgs& a, std::ostream& out,
              std::ostream& err);

int cmd_demo(const CliConfig& cfg, std::ostream& out, std::ostream& err);

struct DumpArgs {
  std::filesystem::path bundle;
};
int cmd_dump(const CliConfig& cfg, const DumpArgs& a, std::ostream& out,
             std::ostream& err);

}  // namespace fwattest::cli

#endif  // FWATTEST_TOOLS_COMMANDS_HPP_
