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

#include "fwattest/secure_state.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>

#include "json.hpp"

namespace fwattest {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

struct EventName {
  AuditEvent event;
  std::string_view name;
};

constexpr EventName kEventNames[] = {
    {AuditEvent::kProvision, "PROVISION"},
    {AuditEvent::kVerifyAccept, "VERIFY_ACCEPT"},
    {AuditEvent::kVerifyReject, "VERIFY_REJECT"},
    {AuditEvent::kLock, "LOCK"},
    {AuditEvent::kWriteDenied, "WRITE_DENIED"},
    {AuditEvent::kSessionRecheck, "SESSION_RECHECK"},
    {AuditEvent::kTaskAdmit, "TASK_ADMIT"},
    {AuditEvent::kTaskDeny, "TASK_DENY"},
    {AuditEvent::kCommit, "COMMIT"},
};

std::string line_hash(std::string_view line) {
  return crypto::hash(as_bytes(line)).hex();
}

void write_all(int fd, const char* data, std::size_t size,
               const fs::path& path) {
  std::size_t off = 0;
  while (off < size) {
    ssize_t n = ::write(fd, data + off, size - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error("write failed: " + path.string() + ": " +
                  std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

// Splits into complete lines. Returns the byte length of the complete
// prefix so a torn tail can be cut off.
std::vector<std::string> split_lines(std::string_view text,
                                     std::size_t* complete_len = nullptr) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\n') {
      lines.emplace_back(text.substr(start, i - start));
      start = i + 1;
    }
  }
  if (complete_len) *complete_len = start;
  return lines;
}

std::string read_text(const fs::path& p) {
  Bytes b = read_file(p);
  return std::string(b.begin(), b.end());
}

}  // namespace

std::string_view event_name(AuditEvent e) {
  for (const auto& en : kEventNames) {
    if (en.event == e) return en.name;
  }
  return "UNKNOWN";
}

std::optional<AuditEvent> parse_event(std::string_view name) {
  for (const auto& en : kEventNames) {
    if (en.name == name) return en.event;
  }
  return std::nullopt;
}

std::string encode_audit_line(const AuditRecord& r,
                              const std::string& prev_hash) {
  ojson j = ojson::object();
  j["seq"] = r.seq;
  j["time"] = r.time;
  j["event"] = std::string(event_name(r.event));
  if (r.version) j["version"] = *r.version;
  if (r.reason) j["reason"] = *r.reason;
  if (r.digest) j["digest"] = *r.digest;
  if (r.detail) j["detail"] = *r.detail;
  j["prev"] = prev_hash;
  return j.dump(-1, ' ', false, ojson::error_handler_t::replace);
}

AuditRecord decode_audit_line(std::string_view line, std::string* prev_hash) {
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const ojson::exception& e) {
    throw Error(std::string("audit line is not JSON: ") + e.what());
  }
  try {
    AuditRecord r;
    r.seq = j.at("seq").get<std::uint64_t>();
    r.time = j.at("time").get<std::string>();
    auto ev = parse_event(j.at("event").get<std::string>());
    if (!ev) throw Error("unknown audit event");
    r.event = *ev;
    if (j.contains("version")) r.version = j["version"].get<std::uint64_t>();
    if (j.contains("reason")) r.reason = j["reason"].get<std::string>();
    if (j.contains("digest")) r.digest = j["digest"].get<std::string>();
    if (j.contains("detail")) r.detail = j["detail"].get<std::string>();
    if (prev_hash) *prev_hash = j.at("prev").get<std::string>();
    return r;
  } catch (const ojson::exception& e) {
    throw Error(std::string("malformed audit record: ") + e.what());
  }
}

Bytes encode_state(const PersistedState& s) {
  ojson j = ojson::object();
  j["anchor"] = to_hex(s.anchor.serialize());
  j["nv_counter"] = s.nv_counter;
  std::string text = j.dump();
  return Bytes(text.begin(), text.end());
}

PersistedState decode_state(ByteView json) {
  try {
    ojson j = ojson::parse(as_chars(json));
    auto anchor = from_hex(j.at("anchor").get<std::string>());
    if (!anchor) throw Error("state anchor is not hex");
    return PersistedState{crypto::PublicKey::parse(*anchor),
                          j.at("nv_counter").get<std::uint64_t>()};
  } catch (const ojson::exception& e) {
    throw Error(std::string("malformed state file: ") + e.what());
  }
}

AuditReplay replay_audit(const std::vector<std::string>& lines) {
  AuditReplay out;
  std::string expected_prev = kGenesisHash;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto fail = [&](const std::string& why) {
      out.chain_ok = false;
      out.error = "line " + std::to_string(i + 1) + ": " + why;
      return out;
    };
    std::string prev;
    AuditRecord r;
    try {
      r = decode_audit_line(lines[i], &prev);
    } catch (const Error& e) {
      return fail(e.what());
    }
    if (prev != expected_prev) return fail("hash chain broken");
    if (r.seq != i + 1) return fail("sequence gap");
    if (i == 0 && r.event != AuditEvent::kProvision) {
      return fail("log does not start with PROVISION");
    }
    switch (r.event) {
      case AuditEvent::kProvision: {
        if (i != 0) return fail("PROVISION after start of log");
        auto raw = r.detail ? from_hex(*r.detail) : std::nullopt;
        if (!raw) return fail("PROVISION without anchor");
        try {
          out.anchor = crypto::PublicKey::parse(*raw);
        } catch (const Error& e) {
          return fail(e.what());
        }
        break;
      }
      case AuditEvent::kVerifyAccept:
        if (r.version) out.accepted_versions.push_back(*r.version);
        break;
      case AuditEvent::kCommit:
        if (!r.version || *r.version <= out.committed_version) {
          return fail("non-increasing COMMIT");
        }
        out.committed_version = *r.version;
        out.committed_versions.push_back(*r.version);
        break;
      default:
        break;
    }
    expected_prev = line_hash(lines[i]);
    ++out.records;
  }
  return out;
}

StateSnapshot read_state_dir(const fs::path& dir) {
  StateSnapshot snap;
  std::error_code ec;
  if (fs::exists(dir / kStateFile, ec)) {
    snap.state = decode_state(read_file(dir / kStateFile));
  }
  if (fs::exists(dir / kAuditFile, ec)) {
    snap.audit_lines = split_lines(read_text(dir / kAuditFile));
  }
  return snap;
}

std::string utc_now() {
  using namespace std::chrono;
  auto now = floor<milliseconds>(system_clock::now());
  auto days = floor<std::chrono::days>(now);
  year_month_day ymd{days};
  hh_mm_ss hms{now - days};
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day()),
                int(hms.hours().count()), int(hms.minutes().count()),
                int(hms.seconds().count()),
                int(hms.subseconds().count()));
  return buf;
}

// ---------------------------------------------------------------------------
// FileBackend

FileBackend::FileBackend(fs::path dir) : FileBackend(std::move(dir), {}) {}

FileBackend::FileBackend(fs::path dir, Options options)
    : dir_(std::move(dir)), options_(options) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) {
    throw Error("cannot create state directory " + dir_.string() + ": " +
                ec.message());
  }
  fs::path lock = dir_ / ".lock";
  lock_fd_ = ::open(lock.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0600);
  if (lock_fd_ < 0) {
    throw Error("cannot open " + lock.string() + ": " + std::strerror(errno));
  }
  if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(lock_fd_);
    lock_fd_ = -1;
    throw Error("state directory " + dir_.string() +
                " is owned by another monitor instance");
  }
}

FileBackend::~FileBackend() {
  if (audit_fd_ >= 0) ::close(audit_fd_);
  if (lock_fd_ >= 0) ::close(lock_fd_);
}

bool FileBackend::begin_write() {
  ++writes_;
  if (options_.fault.crash_at != 0 && writes_ == options_.fault.crash_at) {
    if (!options_.fault.torn) throw SimulatedCrash();
    return true;
  }
  return false;
}

std::optional<Bytes> FileBackend::load_state() {
  std::error_code ec;
  fs::path p = dir_ / kStateFile;
  if (!fs::exists(p, ec)) return std::nullopt;
  return read_file(p);
}

void FileBackend::store_state(ByteView json) {
  fs::path p = dir_ / kStateFile;
  if (begin_write()) {
    // Torn: the temp file is half written and never renamed.
    fs::path tmp = p;
    tmp += ".tmp";
    int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC,
                    0644);
    if (fd >= 0) {
      write_all(fd, reinterpret_cast<const char*>(json.data()),
                json.size() / 2, tmp);
      ::close(fd);
    }
    throw SimulatedCrash();
  }
  write_file_atomic(p, json, options_.fsync);
}

std::vector<std::string> FileBackend::load_audit() {
  fs::path p = dir_ / kAuditFile;
  std::error_code ec;
  if (!fs::exists(p, ec)) return {};
  std::string text = read_text(p);
  std::size_t complete = 0;
  auto lines = split_lines(text, &complete);
  if (complete != text.size()) {
    fs::resize_file(p, complete, ec);
    if (ec) throw Error("cannot truncate torn audit tail: " + ec.message());
  }
  return lines;
}

void FileBackend::append_audit(const std::string& line) {
  fs::path p = dir_ / kAuditFile;
  if (audit_fd_ < 0) {
    audit_fd_ =
        ::open(p.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (audit_fd_ < 0) {
      throw Error("cannot open " + p.string() + ": " + std::strerror(errno));
    }
  }
  if (begin_write()) {
    write_all(audit_fd_, line.data(), line.size() / 2, p);
    throw SimulatedCrash();
  }
  std::string framed = line + "\n";
  write_all(audit_fd_, framed.data(), framed.size(), p);
  if (options_.fsync && ::fsync(audit_fd_) != 0) {
    throw Error("fsync failed: " + p.string());
  }
}

void FileBackend::archive() {
  if (audit_fd_ >= 0) {
    ::close(audit_fd_);
    audit_fd_ = -1;
  }
  fs::path target;
  for (int n = 1;; ++n) {
    target = dir_ / ("archive-" + std::to_string(n));
    if (!fs::exists(target)) break;
  }
  fs::create_directories(target);
  for (std::string_view name : {kStateFile, kAuditFile}) {
    std::error_code ec;
    if (fs::exists(dir_ / name, ec)) fs::rename(dir_ / name, target / name);
  }
}

// ---------------------------------------------------------------------------
// SecureState

SecureState::SecureState(std::unique_ptr<StateBackend> backend,
                         crypto::PublicKey anchor, Clock clock)
    : mu_(std::make_unique<std::mutex>()),
      backend_(std::move(backend)),
      anchor_(std::move(anchor)),
      clock_(std::move(clock)) {}

SecureState::SecureState(SecureState&&) noexcept = default;
SecureState& SecureState::operator=(SecureState&&) noexcept = default;
SecureState::~SecureState() = default;

SecureState SecureState::provision(std::unique_ptr<StateBackend> backend,
                                   const crypto::PublicKey& anchor, bool reset,
                                   Clock clock) {
  bool existing = backend->load_state().has_value() ||
                  !backend->load_audit().empty();
  if (existing) {
    if (!reset) {
      throw Error("state already provisioned (use reset to re-provision)");
    }
    backend->archive();
  }
  SecureState s(std::move(backend), anchor, std::move(clock));
  AuditRecord rec;
  rec.event = AuditEvent::kProvision;
  rec.detail = to_hex(anchor.serialize());
  s.append_audit(std::move(rec));
  s.backend_->store_state(encode_state({anchor, 0}));
  return s;
}

SecureState SecureState::open(std::unique_ptr<StateBackend> backend,
                              Clock clock) {
  std::vector<std::string> lines = backend->load_audit();
  AuditReplay replay = replay_audit(lines);
  if (!replay.chain_ok) {
    throw Error("audit log integrity check failed: " + replay.error);
  }
  std::optional<Bytes> raw = backend->load_state();
  std::optional<PersistedState> stored;
  if (raw) stored = decode_state(*raw);
  if (!stored && !replay.anchor) throw Error("state is not provisioned");
  if (stored && replay.anchor && !(stored->anchor == *replay.anchor)) {
    throw Error("state anchor does not match the provisioned anchor");
  }
  crypto::PublicKey anchor = stored ? stored->anchor : *replay.anchor;
  std::uint64_t counter = std::max(stored ? stored->nv_counter : 0,
                                   replay.committed_version);

  SecureState s(std::move(backend), anchor, std::move(clock));
  s.nv_counter_ = counter;
  s.next_seq_ = lines.size() + 1;
  if (!lines.empty()) s.prev_hash_ = line_hash(lines.back());
  s.lines_ = std::move(lines);
  PersistedState reconciled{anchor, counter};
  if (!stored || !(*stored == reconciled)) {
    s.backend_->store_state(encode_state(reconciled));
  }
  return s;
}

std::uint64_t SecureState::nv_counter() const {
  std::lock_guard lk(*mu_);
  return nv_counter_;
}

VersionDecision SecureState::check_and_advance(std::uint64_t candidate) const {
  std::lock_guard lk(*mu_);
  return candidate > nv_counter_ ? VersionDecision::kAccept
                                 : VersionDecision::kRollback;
}

void SecureState::commit(std::uint64_t version, const crypto::Digest& digest) {
  std::lock_guard lk(*mu_);
  if (version <= nv_counter_) {
    throw Error("counter commit would not advance: " + std::to_string(version) +
                " <= " + std::to_string(nv_counter_));
  }
  AuditRecord rec;
  rec.event = AuditEvent::kCommit;
  rec.version = version;
  rec.digest = digest.hex();
  append_locked(std::move(rec));
  nv_counter_ = version;
  backend_->store_state(encode_state({anchor_, version}));
}

AuditRecord SecureState::append_audit(AuditRecord record) {
  std::lock_guard lk(*mu_);
  return append_locked(std::move(record));
}

AuditRecord SecureState::append_locked(AuditRecord record) {
  record.seq = next_seq_;
  record.time = clock_();
  std::string line = encode_audit_line(record, prev_hash_);
  backend_->append_audit(line);
  ++next_seq_;
  prev_hash_ = line_hash(line);
  lines_.push_back(std::move(line));
  return record;
}

std::vector<AuditRecord> SecureState::audit() const {
  std::lock_guard lk(*mu_);
  std::vector<AuditRecord> out;
  out.reserve(lines_.size());
  for (const auto& l : lines_) out.push_back(decode_audit_line(l));
  return out;
}

std::vector<std::string> SecureState::audit_lines() const {
  std::lock_guard lk(*mu_);
  return lines_;
}

}  // namespace fwattest
