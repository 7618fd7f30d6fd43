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

#include "fixtures.hpp"

#include <atomic>
#include <random>

#include <unistd.h>

namespace fwattest::testing {

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          (tag + "-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter++) + "-" + std::to_string(rd()));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

crypto::KeyPair fixture_key(std::uint64_t seed, crypto::Scheme scheme) {
  return crypto::keygen(scheme, seed, crypto::KeySource::kTestFixture);
}

Bytes pseudo_random(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  Bytes out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng());
  return out;
}

FirmwarePackage signed_package(const crypto::KeyPair& key,
                               std::uint64_t version, Bytes firmware) {
  return build_package(std::move(firmware), version, kMcu, kStamp,
                       {std::string(kFlagRequiresLock)}, key);
}

FirmwarePackage signed_package(const crypto::KeyPair& key,
                               std::uint64_t version, std::size_t size,
                               std::uint64_t content_seed) {
  return signed_package(key, version, pseudo_random(content_seed, size));
}

}  // namespace fwattest::testing
