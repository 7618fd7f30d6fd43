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

#ifndef FWATTEST_MANIFEST_HPP_
#define FWATTEST_MANIFEST_HPP_

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fwattest/bytes.hpp"
#include "fwattest/crypto.hpp"

namespace fwattest {

inline constexpr std::string_view kFlagRequiresLock = "requires_lock";

// Thrown when a manifest violates its schema. `field()` names the offending
// key ("version", "timestamp", ...) or "json" for structural problems.
class ManifestError : public Error {
 public:
  ManifestError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Signed firmware metadata. Build through make_manifest() or
// parse_manifest(); both enforce the invariants below.
//   version >= 1
//   mcu_id: 1..128 printable ASCII chars, no '"' or '\'
//   timestamp: RFC-3339 UTC with a literal 'Z'
//   flags: sorted, no duplicates, each non-empty
struct Manifest {
  std::uint64_t version = 0;
  std::string mcu_id;
  std::string timestamp;
  crypto::Digest firmware_hash;
  std::vector<std::string> flags;

  bool has_flag(std::string_view flag) const;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

Manifest make_manifest(std::uint64_t version, std::string mcu_id,
                       std::string timestamp, const crypto::Digest& hash,
                       std::vector<std::string> flags);

// Throws ManifestError.
void validate(const Manifest& m);

// {"version":..,"mcu_id":..,"timestamp":..,"firmware_hash":..,"flags":[..]}
// with no whitespace.
Bytes canonical_bytes(const Manifest& m);

// Strict: exactly the five keys, correct types, and the input must already be
// in canonical form (any other spelling of the same content is rejected).
Manifest parse_manifest(ByteView json);

bool is_valid_timestamp(std::string_view ts);
std::string format_timestamp(std::chrono::sys_seconds t);

}  // namespace fwattest

#endif  // FWATTEST_MANIFEST_HPP_
