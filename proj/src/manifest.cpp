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

#include "fwattest/manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <regex>

#include "json.hpp"

namespace fwattest {

namespace {

using ojson = nlohmann::ordered_json;

constexpr std::size_t kMaxMcuIdLength = 128;
constexpr std::string_view kKeys[] = {"version", "mcu_id", "timestamp",
                                      "firmware_hash", "flags"};

bool is_lower_hex(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
  });
}

bool is_identifier_char(char c) {
  return c >= 0x20 && c < 0x7f && c != '"' && c != '\\';
}

void normalize_flags(std::vector<std::string>& flags) {
  std::sort(flags.begin(), flags.end());
  flags.erase(std::unique(flags.begin(), flags.end()), flags.end());
}

ojson to_json(const Manifest& m) {
  ojson j = ojson::object();
  j["version"] = m.version;
  j["mcu_id"] = m.mcu_id;
  j["timestamp"] = m.timestamp;
  j["firmware_hash"] = m.firmware_hash.hex();
  j["flags"] = m.flags;
  return j;
}

}  // namespace

bool Manifest::has_flag(std::string_view flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

bool is_valid_timestamp(std::string_view ts) {
  static const std::regex kPattern(
      R"(^(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})(\.\d{1,9})?Z$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(ts.begin(), ts.end(), m, kPattern)) return false;
  auto num = [&](int i) { return std::stoi(m[i].str()); };
  std::chrono::year_month_day ymd{std::chrono::year{num(1)},
                                  std::chrono::month{unsigned(num(2))},
                                  std::chrono::day{unsigned(num(3))}};
  // Second 60 is a leap second.
  return ymd.ok() && num(4) < 24 && num(5) < 60 && num(6) <= 60;
}

std::string format_timestamp(std::chrono::sys_seconds t) {
  auto days = std::chrono::floor<std::chrono::days>(t);
  std::chrono::year_month_day ymd{days};
  std::chrono::hh_mm_ss hms{t - days};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ",
                int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day()),
                int(hms.hours().count()), int(hms.minutes().count()),
                int(hms.seconds().count()));
  return buf;
}

void validate(const Manifest& m) {
  if (m.version < 1) throw ManifestError("version", "must be >= 1");
  if (m.mcu_id.empty() || m.mcu_id.size() > kMaxMcuIdLength ||
      !std::all_of(m.mcu_id.begin(), m.mcu_id.end(), is_identifier_char)) {
    throw ManifestError("mcu_id", "must be 1-128 printable ASCII characters");
  }
  if (!is_valid_timestamp(m.timestamp)) {
    throw ManifestError("timestamp", "not an RFC-3339 UTC instant");
  }
  if (!std::is_sorted(m.flags.begin(), m.flags.end()) ||
      std::adjacent_find(m.flags.begin(), m.flags.end()) != m.flags.end()) {
    throw ManifestError("flags", "must be sorted without duplicates");
  }
  for (const auto& f : m.flags) {
    if (f.empty() || !std::all_of(f.begin(), f.end(), is_identifier_char)) {
      throw ManifestError("flags", "flag must be non-empty printable ASCII");
    }
  }
}

Manifest make_manifest(std::uint64_t version, std::string mcu_id,
                       std::string timestamp, const crypto::Digest& hash,
                       std::vector<std::string> flags) {
  normalize_flags(flags);
  Manifest m{version, std::move(mcu_id), std::move(timestamp), hash,
             std::move(flags)};
  validate(m);
  return m;
}

Bytes canonical_bytes(const Manifest& m) {
  validate(m);
  std::string s = to_json(m).dump();
  return Bytes(s.begin(), s.end());
}

Manifest parse_manifest(ByteView json) {
  ojson j;
  try {
    j = ojson::parse(as_chars(json));
  } catch (const ojson::exception& e) {
    throw ManifestError("json", e.what());
  }
  if (!j.is_object()) throw ManifestError("json", "not an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw ManifestError(key, "unknown key");
    }
  }
  for (std::string_view key : kKeys) {
    if (!j.contains(key)) throw ManifestError(std::string(key), "missing");
  }

  Manifest m;
  const auto& version = j["version"];
  if (!version.is_number_unsigned()) {
    throw ManifestError("version", "must be an unsigned integer");
  }
  m.version = version.get<std::uint64_t>();

  if (!j["mcu_id"].is_string()) throw ManifestError("mcu_id", "not a string");
  m.mcu_id = j["mcu_id"].get<std::string>();

  if (!j["timestamp"].is_string()) {
    throw ManifestError("timestamp", "not a string");
  }
  m.timestamp = j["timestamp"].get<std::string>();

  const auto& hash = j["firmware_hash"];
  if (!hash.is_string()) throw ManifestError("firmware_hash", "not a string");
  std::string hex = hash.get<std::string>();
  auto digest = crypto::Digest::from_hex(hex);
  if (!digest || !is_lower_hex(hex)) {
    throw ManifestError("firmware_hash", "must be 64 lowercase hex chars");
  }
  m.firmware_hash = *digest;

  const auto& flags = j["flags"];
  if (!flags.is_array()) throw ManifestError("flags", "not an array");
  for (const auto& f : flags) {
    if (!f.is_string()) throw ManifestError("flags", "flag is not a string");
    m.flags.push_back(f.get<std::string>());
  }

  validate(m);
  Bytes canonical = canonical_bytes(m);
  if (!std::equal(canonical.begin(), canonical.end(), json.begin(),
                  json.end())) {
    throw ManifestError("json", "not in canonical form");
  }
  return m;
}

}  // namespace fwattest
