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

#ifndef FWATTEST_PACKAGE_HPP_
#define FWATTEST_PACKAGE_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "fwattest/bytes.hpp"
#include "fwattest/crypto.hpp"
#include "fwattest/manifest.hpp"

namespace fwattest {

inline constexpr std::string_view kFirmwareFile = "firmware.bin";
inline constexpr std::string_view kManifestFile = "manifest.json";
inline constexpr std::string_view kSignatureFile = "firmware.sig";
inline constexpr std::string_view kContainerMagic = "FPK1";
inline constexpr std::size_t kMaxManifestSize = 64 * 1024;
inline constexpr std::size_t kDefaultRegionCapacity = 4 * 1024 * 1024;

// The three bundle parts exactly as they came off disk or the wire. This is
// what the untrusted side hands to the monitor; nothing in it is validated.
struct RawBundle {
  Bytes firmware;
  Bytes manifest;
  Bytes signature;

  friend bool operator==(const RawBundle&, const RawBundle&) = default;
};

struct FirmwarePackage {
  Bytes firmware;
  Manifest manifest;
  crypto::Signature signature;

  RawBundle raw() const;

  friend bool operator==(const FirmwarePackage&,
                         const FirmwarePackage&) = default;
};

class BundleError : public Error {
 public:
  enum class Kind { kMissingPart, kOversizedManifest, kOversizedFirmware,
                    kMalformed, kIo };

  BundleError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct BundleLimits {
  std::size_t max_firmware = kDefaultRegionCapacity;
  std::size_t max_manifest = kMaxManifestSize;
};

// Vendor side. The manifest hash is computed here, so the result always
// satisfies manifest.firmware_hash == hash(firmware).
FirmwarePackage build_package(Bytes firmware, std::uint64_t version,
                              std::string mcu_id, std::string timestamp,
                              std::vector<std::string> flags,
                              const crypto::KeyPair& key);

// Parses the manifest and checks part sizes. Does not verify anything
// cryptographic. The signature scheme is taken from the caller (it is not
// recorded in the 64-byte signature file).
FirmwarePackage parse_bundle(const RawBundle& raw, crypto::Scheme scheme,
                             const BundleLimits& limits = {});

// "FPK1" then firmware, manifest, signature, each preceded by an 8-byte
// little-endian length.
Bytes encode_container(const RawBundle& raw);
RawBundle decode_container(ByteView data, const BundleLimits& limits = {});

// A path ending in ".pkg" is written/read as a single container file;
// anything else is a directory with the three named files.
void write_bundle(const RawBundle& raw, const std::filesystem::path& path);
inline void write_bundle(const FirmwarePackage& pkg,
                         const std::filesystem::path& path) {
  write_bundle(pkg.raw(), path);
}
RawBundle read_raw_bundle(const std::filesystem::path& path,
                          const BundleLimits& limits = {});
FirmwarePackage read_bundle(const std::filesystem::path& path,
                            crypto::Scheme scheme,
                            const BundleLimits& limits = {});

}  // namespace fwattest

#endif  // FWATTEST_PACKAGE_HPP_
