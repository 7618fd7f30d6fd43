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

#include "commands.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>

#include "fwattest/harness.hpp"
#include "fwattest/monitor.hpp"
#include "fwattest/report.hpp"
#include "fwattest/secure_state.hpp"
#include "json.hpp"

namespace fwattest::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

Json config_json(const CliConfig& cfg) {
  Json j{{"state_dir", cfg.state_dir.string()},
         {"mcu_id", cfg.mcu_id},
         {"region_capacity", cfg.region_capacity},
         {"lock_mode", lock_mode_name(cfg.lock_mode)},
         {"format", cfg.json ? "json" : "text"}};
  j["seed"] = cfg.seed ? Json(*cfg.seed) : Json(nullptr);
  return j;
}

std::string dump(const Json& j) {
  return j.dump(2, ' ', false, Json::error_handler_t::replace) + "\n";
}

void refuse_overwrite(const fs::path& p, bool force) {
  if (!force && fs::exists(p)) {
    throw UsageError(p.string() + " exists (use --force to overwrite)");
  }
}

// Bundle reads are generous; size policy belongs to the monitor.
BundleLimits read_limits() {
  return BundleLimits{std::size_t{1} << 30, std::size_t{1} << 30};
}

std::optional<std::uint64_t> fixture_seed(const CliConfig& cfg) {
  if (cfg.seed && !cfg.test_fixtures) {
    throw UsageError("--seed requires --test-fixtures for key material");
  }
  return cfg.seed;
}

void write_text(const fs::path& p, const std::string& text) {
  write_file_atomic(p, as_bytes(text), false);
}

struct Committed {
  std::uint64_t version = 0;
  std::optional<std::string> digest;
};

Committed last_commit(const std::vector<std::string>& lines) {
  Committed c;
  for (const auto& line : lines) {
    AuditRecord r = decode_audit_line(line);
    if (r.event == AuditEvent::kCommit && r.version) {
      c.version = *r.version;
      c.digest = r.digest;
    }
  }
  return c;
}

}  // namespace

fs::path require_state_dir(const CliConfig& cfg) {
  if (cfg.state_dir.empty()) {
    throw UsageError("no state directory (use --state-dir or " +
                     std::string(kStateDirEnv) + ")");
  }
  return cfg.state_dir;
}

std::string config_line(const CliConfig& cfg) {
  std::string s = "config: state_dir=" +
                  (cfg.state_dir.empty() ? "-" : cfg.state_dir.string()) +
                  " mcu_id=" + cfg.mcu_id +
                  " capacity=" + std::to_string(cfg.region_capacity) +
                  " lock_mode=" + std::string(lock_mode_name(cfg.lock_mode)) +
                  " format=" + (cfg.json ? "json" : "text");
  s += " seed=" + (cfg.seed ? std::to_string(*cfg.seed) : std::string("-"));
  return s;
}

int cmd_keygen(const CliConfig& cfg, const KeygenArgs& a, std::ostream& out,
               std::ostream&) {
  auto seed = fixture_seed(cfg);
  fs::path priv = a.out;
  priv += ".key";
  fs::path pub = a.out;
  pub += ".pub";
  refuse_overwrite(priv, a.force);
  refuse_overwrite(pub, a.force);

  crypto::KeyPair key = crypto::keygen(
      a.scheme, seed,
      seed ? crypto::KeySource::kTestFixture : crypto::KeySource::kProduction);
  Bytes secret = key.serialize_private();
  write_file_atomic(priv, secret);
  fs::permissions(priv, fs::perms::owner_read | fs::perms::owner_write);
  write_file_atomic(pub, key.public_key().serialize());

  std::string anchor_hex = to_hex(key.public_key().serialize());
  if (cfg.json) {
    out << dump(Json{{"command", "keygen"},
                     {"config", config_json(cfg)},
                     {"scheme", crypto::scheme_name(a.scheme)},
                     {"private_key", priv.string()},
                     {"anchor", pub.string()},
                     {"anchor_hex", anchor_hex}});
  } else {
    out << config_line(cfg) << "\n"
        << "wrote " << priv.string() << " (private, keep offline)\n"
        << "wrote " << pub.string() << " (anchor " << anchor_hex << ")\n";
  }
  return 0;
}

int cmd_sign(const CliConfig& cfg, const SignArgs& a, std::ostream& out,
             std::ostream&) {
  if (a.version == 0) throw UsageError("--version must be >= 1");
  refuse_overwrite(a.out, a.force);
  crypto::KeyPair key = crypto::KeyPair::parse(read_file(a.key));
  std::string ts = a.timestamp;
  if (ts.empty()) {
    ts = format_timestamp(std::chrono::floor<std::chrono::seconds>(
        std::chrono::system_clock::now()));
  }
  FirmwarePackage pkg = build_package(read_file(a.firmware), a.version,
                                      cfg.mcu_id, ts, a.flags, key);
  write_bundle(pkg, a.out);

  std::string manifest(as_chars(canonical_bytes(pkg.manifest)));
  if (cfg.json) {
    out << dump(Json{{"command", "sign"},
                     {"config", config_json(cfg)},
                     {"bundle", a.out.string()},
                     {"scheme", crypto::scheme_name(key.scheme())},
                     {"manifest", Json::parse(manifest)},
                     {"signature", to_hex(pkg.signature.view())}});
  } else {
    out << config_line(cfg) << "\n"
        << "signed " << a.out.string() << " ("
        << crypto::scheme_name(key.scheme()) << ")\n"
        << "manifest " << manifest << "\n";
  }
  return 0;
}

int cmd_provision(const CliConfig& cfg, const ProvisionArgs& a,
                  std::ostream& out, std::ostream&) {
  fs::path dir = require_state_dir(cfg);
  crypto::PublicKey anchor = crypto::PublicKey::parse(read_file(a.anchor));
  SecureState st = SecureState::provision(std::make_unique<FileBackend>(dir),
                                          anchor, a.reset);
  if (cfg.json) {
    out << dump(Json{{"command", "provision"},
                     {"config", config_json(cfg)},
                     {"scheme", crypto::scheme_name(anchor.scheme())},
                     {"anchor_hex", to_hex(anchor.serialize())},
                     {"nv_counter", st.nv_counter()},
                     {"reset", a.reset}});
  } else {
    out << config_line(cfg) << "\n"
        << "provisioned " << dir.string() << " with "
        << crypto::scheme_name(anchor.scheme()) << " anchor, nv_counter="
        << st.nv_counter() << (a.reset ? " (previous state archived)" : "")
        << "\n";
  }
  return 0;
}

int cmd_verify(const CliConfig& cfg, const VerifyArgs& a, std::ostream& out,
               std::ostream& err) {
  fs::path dir = require_state_dir(cfg);
  if (a.inject_lock_failure && !cfg.test_fixtures) {
    throw UsageError("--inject-lock-failure requires --test-fixtures");
  }
  std::optional<std::uint64_t> token_seed =
      cfg.test_fixtures ? cfg.seed : std::nullopt;

  auto report_reject = [&](std::string_view reason, const std::string& detail,
                           int code) {
    if (cfg.json) {
      out << dump(Json{{"command", "verify"},
                       {"config", config_json(cfg)},
                       {"result", "REJECT"},
                       {"reason", reason},
                       {"detail", detail},
                       {"exit_code", code}});
    } else {
      out << config_line(cfg) << "\n";
    }
    err << "REJECT " << reason << ": " << detail << "\n";
    return code;
  };

  // Framing problems stop before the monitor ever sees the bytes.
  RawBundle raw;
  try {
    raw = read_raw_bundle(a.bundle, read_limits());
  } catch (const BundleError& e) {
    switch (e.kind()) {
      case BundleError::Kind::kIo:
        throw;
      case BundleError::Kind::kOversizedFirmware:
      case BundleError::Kind::kOversizedManifest:
        return report_reject(reason_name(RejectionReason::kOversize), e.what(),
                             exit_code(RejectionReason::kOversize));
      default:
        return report_reject(reason_name(RejectionReason::kMalformedBundle),
                             e.what(),
                             exit_code(RejectionReason::kMalformedBundle));
    }
  }

  McuRegion region(cfg.lock_mode, cfg.region_capacity);
  if (a.inject_lock_failure) region.inject_hw_lock_failure();
  Monitor monitor(region,
                  SecureState::open(std::make_unique<FileBackend>(dir)),
                  MonitorConfig{.mcu_id = cfg.mcu_id, .token_seed = token_seed});
  LoadResult r = monitor.verify_and_lock(raw);
  if (!r.ok()) {
    return report_reject(reason_name(*r.reason), r.detail,
                         exit_code(*r.reason));
  }

  MonitorStatus st = monitor.status();
  std::string mode(lock_mode_name(region.mode()));
  if (cfg.json) {
    out << dump(Json{{"command", "verify"},
                     {"config", config_json(cfg)},
                     {"result", "SUCCESS"},
                     {"version", r.token->version},
                     {"digest", r.token->digest.hex()},
                     {"lock_mode", mode},
                     {"token", r.token->id_hex()},
                     {"nv_counter", st.nv_counter},
                     {"phase", phase_name(st.phase)},
                     {"timings_ms",
                      {{"verify", r.timings.verify_ms},
                       {"lock", r.timings.lock_ms},
                       {"total", r.timings.total_ms}}},
                     {"exit_code", kExitSuccess}});
  } else {
    out << config_line(cfg) << "\n"
        << "SUCCESS: version " << r.token->version << " loaded and locked ("
        << mode << ")\n"
        << "digest " << r.token->digest.hex() << "\n"
        << "token " << r.token->id_hex() << "\n"
        << "nv_counter " << st.nv_counter << "\n";
  }
  return kExitSuccess;
}

int cmd_status(const CliConfig& cfg, std::ostream& out, std::ostream&) {
  fs::path dir = require_state_dir(cfg);
  StateSnapshot snap = read_state_dir(dir);
  Json j{{"command", "status"}, {"config", config_json(cfg)}};
  if (!snap.state) {
    j["phase"] = phase_name(Phase::kUnprovisioned);
    j["provisioned"] = false;
  } else {
    AuditReplay rep = replay_audit(snap.audit_lines);
    Committed c = rep.chain_ok ? last_commit(snap.audit_lines) : Committed{};
    j["phase"] = phase_name(Phase::kIdle);
    j["provisioned"] = true;
    j["scheme"] = crypto::scheme_name(snap.state->anchor.scheme());
    j["anchor_hex"] = to_hex(snap.state->anchor.serialize());
    j["nv_counter"] = snap.state->nv_counter;
    j["last_committed_version"] =
        c.version ? Json(c.version) : Json(nullptr);
    j["last_committed_digest"] = c.digest ? Json(*c.digest) : Json(nullptr);
    j["audit_records"] = snap.audit_lines.size();
    j["chain_ok"] = rep.chain_ok;
  }
  if (cfg.json) {
    out << dump(j);
    return 0;
  }
  out << config_line(cfg) << "\n";
  out << "phase: " << j["phase"].get<std::string>() << "\n";
  if (!snap.state) return 0;
  out << "anchor: " << j["scheme"].get<std::string>() << " "
      << j["anchor_hex"].get<std::string>() << "\n"
      << "nv_counter: " << snap.state->nv_counter << "\n"
      << "last committed: "
      << (j["last_committed_version"].is_null()
              ? std::string("none")
              : "v" + std::to_string(j["last_committed_version"].get<
                                     std::uint64_t>()) +
                    " " + j["last_committed_digest"].get<std::string>())
      << "\n"
      << "audit: " << snap.audit_lines.size() << " records, chain "
      << (j["chain_ok"].get<bool>() ? "OK" : "BROKEN") << "\n";
  return 0;
}

int cmd_log(const CliConfig& cfg, const LogArgs& a, std::ostream& out,
            std::ostream& err) {
  fs::path dir = require_state_dir(cfg);
  StateSnapshot snap = read_state_dir(dir);
  AuditReplay rep = replay_audit(snap.audit_lines);

  // The tip of the chain is only vouched for by the counter in state.json.
  bool counter_ok =
      !snap.state || snap.state->nv_counter == rep.committed_version;
  bool ok = rep.chain_ok && counter_ok;
  std::string problem = !rep.chain_ok ? rep.error
                        : counter_ok
                            ? ""
                            : "state.json nv_counter " +
                                  std::to_string(snap.state->nv_counter) +
                                  " != last COMMIT " +
                                  std::to_string(rep.committed_version);

  if (a.check) {
    if (cfg.json) {
      out << dump(Json{{"command", "log"},
                       {"config", config_json(cfg)},
                       {"chain_ok", ok},
                       {"records", rep.records},
                       {"error", problem}});
    } else if (ok) {
      out << "chain OK, " << rep.records << " records\n";
    }
    if (!ok) err << "chain BROKEN: " << problem << "\n";
    return ok ? 0 : kExitInfra;
  }

  if (cfg.json) {
    Json records = Json::array();
    for (const auto& line : snap.audit_lines) {
      records.push_back(Json::parse(line, nullptr, false));
    }
    out << dump(Json{{"command", "log"},
                     {"config", config_json(cfg)},
                     {"chain_ok", ok},
                     {"records", records}});
  } else {
    for (const auto& line : snap.audit_lines) {
      AuditRecord r = decode_audit_line(line);
      out << r.seq << " " << r.time << " " << event_name(r.event);
      if (r.version) out << " v" << *r.version;
      if (r.reason) out << " reason=" << *r.reason;
      if (r.digest) out << " digest=" << r.digest->substr(0, 16);
      if (r.detail) out << " " << *r.detail;
      out << "\n";
    }
  }
  if (!ok) err << "chain BROKEN: " << problem << "\n";
  return ok ? 0 : kExitInfra;
}

int cmd_attack(const CliConfig& cfg, const AttackArgs& a, std::ostream& out,
               std::ostream& err) {
  using namespace harness;
  if (a.all == !a.scenarios.empty()) {
    throw UsageError("give either --all or one or more --scenario");
  }
  if (a.trials == 0) throw UsageError("--trials must be >= 1");
  std::vector<ScenarioKind> kinds;
  if (a.all) {
    kinds.assign(std::begin(kAllScenarios), std::end(kAllScenarios));
  } else {
    for (const auto& name : a.scenarios) {
      auto k = parse_scenario(name);
      if (!k) throw UsageError("unknown scenario: " + name);
      kinds.push_back(*k);
    }
  }
  std::vector<Mode> modes;
  if (a.mode == "both") {
    modes = {Mode::kBaseline, Mode::kFaarm};
  } else if (auto m = parse_mode(a.mode)) {
    modes = {*m};
  } else {
    throw UsageError("unknown mode: " + a.mode);
  }

  std::vector<ScenarioReport> reports;
  for (Mode mode : modes) {
    for (ScenarioKind kind : kinds) {
      Scenario s;
      s.kind = kind;
      s.trials = a.trials;
      s.mode = mode;
      s.lock_mode = cfg.lock_mode;
      s.seed = cfg.seed.value_or(1);
      s.scheme = a.scheme;
      s.firmware_size = a.firmware_size;
      s.region_capacity = cfg.region_capacity;
      s.concurrent_adversary = !a.no_concurrent;
      s.parallel = a.parallel;
      reports.push_back(run_scenario(s));
    }
  }

  if (!a.csv.empty()) write_text(a.csv, report::latency_csv(reports));
  if (cfg.json) {
    out << report::scenarios_json(
        reports, {.include_latency = a.latency,
                  .include_trials = a.trial_records});
  } else {
    out << config_line(cfg) << "\n\n"
        << report::scenarios_table(reports) << "\n"
        << report::outcome_matrix(reports) << "\n"
        << report::success_rate_table(reports);
  }

  int rc = 0;
  for (const auto& r : reports) {
    if (r.infrastructure_failures > 0) {
      err << scenario_name(r.scenario.kind) << ": "
          << r.infrastructure_failures << " trial(s) failed to run\n";
      rc = kExitInfra;
    }
  }
  for (const auto& r : reports) {
    if (r.scenario.mode == Mode::kFaarm && r.attack_success_count > 0) {
      err << scenario_name(r.scenario.kind) << ": " << r.attack_success_count
          << " attack success(es) under FAARM\n";
      rc = kExitAttackSucceeded;
    }
  }
  return rc;
}

int cmd_bench(const CliConfig& cfg, const BenchArgs& a, std::ostream& out,
              std::ostream& err) {
  if (a.runs == 0) throw UsageError("--runs must be >= 1");
  if (a.runs < 100) {
    err << "warning: fewer than 100 runs; stddev is less reliable\n";
  }
  harness::BenchConfig bc;
  bc.firmware_size = a.firmware_size;
  bc.runs = a.runs;
  bc.warmup = a.warmup;
  bc.gpu_init_ms = a.gpu_init_ms;
  bc.scheme = a.scheme;
  bc.lock_mode = cfg.lock_mode;
  bc.seed = cfg.seed.value_or(1);
  bc.state_dir = a.file_state;
  bc.fsync = !a.no_fsync;
  harness::BenchReport rep = harness::bench(bc);

  if (!a.csv.empty()) write_text(a.csv, report::bench_csv(rep));
  if (cfg.json) {
    out << report::bench_json(rep, a.samples);
  } else {
    out << config_line(cfg) << "\n" << report::bench_text(rep);
  }
  return rep.failures == 0 ? 0 : kExitInfra;
}

int cmd_demo(const CliConfig& cfg, std::ostream& out, std::ostream&) {
  harness::DemoTranscript t = harness::run_demo(cfg.seed.value_or(1));
  bool ok = t.baseline_accepted_tampered && t.faarm_rejected_tampered &&
            t.faarm_rejected_unsigned && t.faarm_locked_signed &&
            t.faarm_denied_overwrite;
  if (cfg.json) {
    out << dump(Json{{"command", "demo"},
                     {"config", config_json(cfg)},
                     {"transcript", t.lines},
                     {"baseline_accepted_tampered",
                      t.baseline_accepted_tampered},
                     {"faarm_rejected_tampered", t.faarm_rejected_tampered},
                     {"faarm_rejected_unsigned", t.faarm_rejected_unsigned},
                     {"faarm_locked_signed", t.faarm_locked_signed},
                     {"faarm_denied_overwrite", t.faarm_denied_overwrite}});
  } else {
    out << config_line(cfg) << "\n";
    for (const auto& line : t.lines) out << line << "\n";
  }
  return ok ? 0 : kExitInfra;
}

int cmd_dump(const CliConfig& cfg, const DumpArgs& a, std::ostream& out,
             std::ostream& err) {
  RawBundle raw = read_raw_bundle(a.bundle, read_limits());
  crypto::Digest h = crypto::hash(raw.firmware);
  Json j{{"command", "dump"},
         {"config", config_json(cfg)},
         {"bundle", a.bundle.string()},
         {"firmware_bytes", raw.firmware.size()},
         {"firmware_sha256", h.hex()},
         {"manifest_bytes", raw.manifest.size()},
         {"signature_hex", to_hex(raw.signature)}};
  std::string problem;
  try {
    Manifest m = parse_manifest(raw.manifest);
    j["manifest"] = Json::parse(as_chars(raw.manifest));
    j["hash_matches_manifest"] = m.firmware_hash == h;
  } catch (const ManifestError& e) {
    problem = e.what();
    j["manifest_error"] = problem;
  }
  if (cfg.json) {
    out << dump(j);
  } else {
    out << config_line(cfg) << "\n"
        << "bundle " << a.bundle.string() << "\n"
        << "firmware " << raw.firmware.size() << " bytes, sha256 " << h.hex()
        << "\n"
        << "manifest " << std::string(as_chars(raw.manifest)) << "\n"
        << "signature " << to_hex(raw.signature) << "\n";
    if (problem.empty()) {
      out << "hash matches manifest: "
          << (j["hash_matches_manifest"].get<bool>() ? "yes" : "no") << "\n";
    }
  }
  if (!problem.empty()) err << "manifest rejected: " << problem << "\n";
  return 0;
}

}  // namespace fwattest::cli
