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

#ifndef FWATTEST_TESTS_FIXTURES_HPP_
#define FWATTEST_TESTS_FIXTURES_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include "fwattest/crypto.hpp"
#include "fwattest/package.hpp"

namespace fwattest::testing {

inline constexpr const char* kMcu = "MALI-MCU-XYZ";
inline constexpr const char* kStamp = "2025-10-10T12:00:00Z";

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "fwattest");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

crypto::KeyPair fixture_key(
    std::uint64_t seed = 1,
    crypto::Scheme scheme = crypto::Scheme::kEcdsaP256);

Bytes pseudo_random(std::uint64_t seed, std::size_t n);

// Vendor-built package with the requires_lock flag.
FirmwarePackage signed_package(const crypto::KeyPair& key,
                               std::uint64_t version, Bytes firmware);
FirmwarePackage signed_package(const crypto::KeyPair& key,
                               std::uint64_t version,
                               std::size_t size = 4096,
                               std::uint64_t content_seed = 7);

}  // namespace fwattest::testing

#endif  // FWATTEST_TESTS_FIXTURES_HPP_
