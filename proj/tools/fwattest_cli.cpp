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

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "fwattest/secure_state.hpp"

namespace {

using fwattest::cli::CliConfig;

const std::map<std::string, fwattest::crypto::Scheme> kSchemes = {
    {"ecdsa-p256", fwattest::crypto::Scheme::kEcdsaP256},
    {"p256", fwattest::crypto::Scheme::kEcdsaP256},
    {"ed25519", fwattest::crypto::Scheme::kEd25519},
};

const std::map<std::string, fwattest::LockMode> kLockModes = {
    {"hardware-wp", fwattest::LockMode::kHardwareWP},
    {"hw", fwattest::LockMode::kHardwareWP},
    {"software-lock", fwattest::LockMode::kSoftwareLock},
    {"sw", fwattest::LockMode::kSoftwareLock},
};

void add_scheme(CLI::App* cmd, fwattest::crypto::Scheme* target) {
  cmd->add_option("--scheme", *target, "ecdsa-p256 | ed25519")
      ->transform(CLI::CheckedTransformer(kSchemes, CLI::ignore_case))
      ->default_str("ecdsa-p256");
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = fwattest::cli;

  CLI::App app{"Firmware attestation and MCU region locking emulator"};
  app.require_subcommand(1);
  app.fallthrough();

  CliConfig cfg;
  app.add_option("--state-dir", cfg.state_dir, "EL3 state directory")
      ->envname(std::string(fwattest::kStateDirEnv));
  app.add_option("--mcu-id", cfg.mcu_id, "Identity of this MCU")
      ->capture_default_str();
  app.add_option("--capacity", cfg.region_capacity,
                 "MCU firmware region size (accepts K/M suffixes)")
      ->transform(CLI::AsSizeValue(false))
      ->capture_default_str();
  app.add_option("--lock-mode", cfg.lock_mode, "hardware-wp | software-lock")
      ->transform(CLI::CheckedTransformer(kLockModes, CLI::ignore_case))
      ->default_str("hardware-wp");
  app.add_flag("--json", cfg.json, "Machine-readable output");
  app.add_option("--seed", cfg.seed, "Seed for reproducible runs");
  app.add_flag("--test-fixtures", cfg.test_fixtures,
               "Allow seeded key material and fault injection");

  cli::KeygenArgs keygen;
  auto* c_keygen = app.add_subcommand("keygen", "Generate a vendor key pair");
  add_scheme(c_keygen, &keygen.scheme);
  c_keygen->add_option("--out", keygen.out, "Writes <out>.key and <out>.pub")
      ->required();
  c_keygen->add_flag("--force", keygen.force, "Overwrite existing files");

  cli::SignArgs sign;
  auto* c_sign = app.add_subcommand("sign", "Build a signed firmware bundle");
  c_sign->add_option("--firmware", sign.firmware)->required()->check(
      CLI::ExistingFile);
  c_sign->add_option("--version", sign.version, "Firmware version (>= 1)")
      ->required();
  c_sign->add_option("--flag", sign.flags, "Manifest flag (repeatable)");
  c_sign->add_option("--timestamp", sign.timestamp,
                     "RFC-3339 UTC time (default: now)");
  c_sign->add_option("--key", sign.key, "Private key file")
      ->required()
      ->check(CLI::ExistingFile);
  c_sign->add_option("--out", sign.out,
                     "Bundle path (.pkg file or directory)")
      ->required();
  c_sign->add_flag("--force", sign.force, "Overwrite an existing bundle");

  cli::ProvisionArgs provision;
  auto* c_prov = app.add_subcommand("provision", "Install the trust anchor");
  c_prov->add_option("--anchor", provision.anchor, "Public key file")
      ->required()
      ->check(CLI::ExistingFile);
  c_prov->add_flag("--reset", provision.reset,
                   "Archive existing state and start over");

  cli::VerifyArgs verify;
  auto* c_verify =
      app.add_subcommand("verify", "Verify, load and lock a firmware bundle");
  c_verify->add_option("bundle", verify.bundle)->required();
  c_verify->add_flag("--inject-lock-failure", verify.inject_lock_failure,
                     "Make hardware write protection fail to engage");

  app.add_subcommand("status", "Show the persisted monitor state");

  cli::LogArgs log;
  auto* c_log = app.add_subcommand("log", "Print or check the audit log");
  c_log->add_flag("--check", log.check, "Validate the hash chain only");

  cli::AttackArgs attack;
  auto* c_attack = app.add_subcommand("attack", "Run attack scenarios");
  c_attack->add_flag("--all", attack.all, "All five scenarios");
  c_attack->add_option("--scenario", attack.scenarios,
                       "Scenario name (repeatable)");
  c_attack->add_option("--mode", attack.mode, "baseline | faarm | both")
      ->check(CLI::IsMember({"baseline", "faarm", "both"}, CLI::ignore_case))
      ->capture_default_str();
  c_attack->add_option("--trials", attack.trials)->capture_default_str();
  add_scheme(c_attack, &attack.scheme);
  c_attack->add_option("--firmware-size", attack.firmware_size)
      ->transform(CLI::AsSizeValue(false))
      ->capture_default_str();
  c_attack->add_flag("--no-concurrent", attack.no_concurrent,
                     "TOCTOU: interposition points only, no writer thread");
  c_attack->add_flag("--parallel", attack.parallel, "Run trials in parallel");
  c_attack->add_flag("--latency", attack.latency,
                     "Include latency stats in JSON");
  c_attack->add_flag("--trial-records", attack.trial_records,
                     "Include per-trial records in JSON");
  c_attack->add_option("--csv", attack.csv, "Write raw latency samples");

  cli::BenchArgs bench;
  auto* c_bench = app.add_subcommand("bench", "Time VerifyAndLock");
  c_bench->add_option("--size", bench.firmware_size, "Firmware size")
      ->transform(CLI::AsSizeValue(false))
      ->capture_default_str();
  c_bench->add_option("--runs", bench.runs)->capture_default_str();
  c_bench->add_option("--warmup", bench.warmup)->capture_default_str();
  c_bench->add_option("--gpu-init-ms", bench.gpu_init_ms,
                      "Nominal GPU init time for the overhead ratio")
      ->capture_default_str();
  add_scheme(c_bench, &bench.scheme);
  c_bench->add_option("--file-state", bench.file_state,
                      "Time against a fresh file-backed state directory");
  c_bench->add_flag("--no-fsync", bench.no_fsync);
  c_bench->add_flag("--samples", bench.samples, "Include samples in JSON");
  c_bench->add_option("--csv", bench.csv, "Write raw samples");

  app.add_subcommand("demo", "Before/after transcript");

  cli::DumpArgs dump;
  auto* c_dump = app.add_subcommand("dump", "Describe a bundle");
  c_dump->add_option("bundle", dump.bundle)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kExitUsage;
  }

  std::ostream& out = std::cout;
  std::ostream& err = std::cerr;
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (name == "keygen") return cli::cmd_keygen(cfg, keygen, out, err);
    if (name == "sign") return cli::cmd_sign(cfg, sign, out, err);
    if (name == "provision") return cli::cmd_provision(cfg, provision, out, err);
    if (name == "verify") return cli::cmd_verify(cfg, verify, out, err);
    if (name == "status") return cli::cmd_status(cfg, out, err);
    if (name == "log") return cli::cmd_log(cfg, log, out, err);
    if (name == "attack") return cli::cmd_attack(cfg, attack, out, err);
    if (name == "bench") return cli::cmd_bench(cfg, bench, out, err);
    if (name == "demo") return cli::cmd_demo(cfg, out, err);
    if (name == "dump") return cli::cmd_dump(cfg, dump, out, err);
  } catch (const cli::UsageError& e) {
    err << "fwattest: " << e.what() << "\n";
    return cli::kExitUsage;
  } catch (const std::exception& e) {
    err << "fwattest: " << e.what() << "\n";
    return cli::kExitInfra;
  }
  return cli::kExitUsage;
}
