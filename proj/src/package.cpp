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

#include "fwattest/package.hpp"

#include <fstream>

namespace fwattest {

namespace fs = std::filesystem;

namespace {

void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back((v >> (8 * i)) & 0xff);
}

std::uint64_t get_u64(ByteView in) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | in[i];
  return v;
}

void check_limits(const RawBundle& raw, const BundleLimits& limits) {
  if (raw.manifest.size() > limits.max_manifest) {
    throw BundleError(BundleError::Kind::kOversizedManifest,
                      "manifest exceeds " +
                          std::to_string(limits.max_manifest) + " bytes");
  }
  if (raw.firmware.size() > limits.max_firmware) {
    throw BundleError(BundleError::Kind::kOversizedFirmware,
                      "firmware exceeds region size of " +
                          std::to_string(limits.max_firmware) + " bytes");
  }
}

void write_raw(const fs::path& path, ByteView data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out) {
    throw BundleError(BundleError::Kind::kIo, "cannot write " + path.string());
  }
}

Bytes read_part(const fs::path& dir, std::string_view name,
                std::size_t limit, BundleError::Kind oversize_kind) {
  fs::path p = dir / name;
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) {
    throw BundleError(BundleError::Kind::kMissingPart,
                      "missing part: " + std::string(name));
  }
  auto size = fs::file_size(p, ec);
  if (!ec && size > limit) {
    throw BundleError(oversize_kind, std::string(name) + " exceeds " +
                                         std::to_string(limit) + " bytes");
  }
  try {
    return read_file(p);
  } catch (const Error& e) {
    throw BundleError(BundleError::Kind::kIo, e.what());
  }
}

bool is_container_path(const fs::path& path) {
  return path.extension() == ".pkg";
}

}  // namespace

RawBundle FirmwarePackage::raw() const {
  return RawBundle{firmware, canonical_bytes(manifest),
                   Bytes(signature.bytes().begin(), signature.bytes().end())};
}

FirmwarePackage build_package(Bytes firmware, std::uint64_t version,
                              std::string mcu_id, std::string timestamp,
                              std::vector<std::string> flags,
                              const crypto::KeyPair& key) {
  crypto::Digest digest = crypto::hash(firmware);
  Manifest manifest = make_manifest(version, std::move(mcu_id),
                                    std::move(timestamp), digest,
                                    std::move(flags));
  Bytes payload = crypto::signing_payload(digest, canonical_bytes(manifest));
  crypto::Signature sig = crypto::sign(key, payload);
  return FirmwarePackage{std::move(firmware), std::move(manifest), sig};
}

FirmwarePackage parse_bundle(const RawBundle& raw, crypto::Scheme scheme,
                             const BundleLimits& limits) {
  check_limits(raw, limits);
  auto sig = crypto::Signature::from_bytes(scheme, raw.signature);
  if (!sig) {
    throw BundleError(BundleError::Kind::kMalformed,
                      "signature must be exactly 64 bytes");
  }
  Manifest manifest;
  try {
    manifest = parse_manifest(raw.manifest);
  } catch (const ManifestError& e) {
    throw BundleError(BundleError::Kind::kMalformed,
                      std::string("manifest rejected: ") + e.what());
  }
  return FirmwarePackage{raw.firmware, std::move(manifest), *sig};
}

Bytes encode_container(const RawBundle& raw) {
  Bytes out(kContainerMagic.begin(), kContainerMagic.end());
  out.reserve(4 + 24 + raw.firmware.size() + raw.manifest.size() +
              raw.signature.size());
  for (const Bytes* part : {&raw.firmware, &raw.manifest, &raw.signature}) {
    put_u64(out, part->size());
    out.insert(out.end(), part->begin(), part->end());
  }
  return out;
}

RawBundle decode_container(ByteView data, const BundleLimits& limits) {
  if (data.size() < kContainerMagic.size() ||
      as_chars(data.first(kContainerMagic.size())) != kContainerMagic) {
    throw BundleError(BundleError::Kind::kMalformed, "bad container magic");
  }
  std::size_t pos = kContainerMagic.size();
  const std::size_t section_limits[] = {limits.max_firmware,
                                        limits.max_manifest,
                                        crypto::Signature::kSize};
  const BundleError::Kind oversize[] = {BundleError::Kind::kOversizedFirmware,
                                        BundleError::Kind::kOversizedManifest,
                                        BundleError::Kind::kMalformed};
  static constexpr std::string_view kNames[] = {kFirmwareFile, kManifestFile,
                                                kSignatureFile};
  Bytes parts[3];
  for (int i = 0; i < 3; ++i) {
    if (data.size() - pos < 8) {
      throw BundleError(BundleError::Kind::kMissingPart,
                        "missing part: " + std::string(kNames[i]));
    }
    std::uint64_t len = get_u64(data.subspan(pos, 8));
    pos += 8;
    if (len > section_limits[i]) {
      throw BundleError(oversize[i], std::string(kNames[i]) + " exceeds " +
                                         std::to_string(section_limits[i]) +
                                         " bytes");
    }
    if (len > data.size() - pos) {
      throw BundleError(BundleError::Kind::kMalformed,
                        "truncated section: " + std::string(kNames[i]));
    }
    parts[i].assign(data.begin() + pos, data.begin() + pos + len);
    pos += len;
  }
  if (pos != data.size()) {
    throw BundleError(BundleError::Kind::kMalformed,
                      "trailing bytes after container");
  }
  return RawBundle{std::move(parts[0]), std::move(parts[1]),
                   std::move(parts[2])};
}

void write_bundle(const RawBundle& raw, const fs::path& path) {
  if (is_container_path(path)) {
    write_raw(path, encode_container(raw));
    return;
  }
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) {
    throw BundleError(BundleError::Kind::kIo,
                      "cannot create " + path.string() + ": " + ec.message());
  }
  write_raw(path / kFirmwareFile, raw.firmware);
  write_raw(path / kManifestFile, raw.manifest);
  write_raw(path / kSignatureFile, raw.signature);
}

RawBundle read_raw_bundle(const fs::path& path, const BundleLimits& limits) {
  std::error_code ec;
  if (is_container_path(path) || fs::is_regular_file(path, ec)) {
    if (!fs::exists(path, ec)) {
      throw BundleError(BundleError::Kind::kMissingPart,
                        "no such bundle: " + path.string());
    }
    Bytes data;
    try {
      data = read_file(path);
    } catch (const Error& e) {
      throw BundleError(BundleError::Kind::kIo, e.what());
    }
    return decode_container(data, limits);
  }
  if (!fs::is_directory(path, ec)) {
    throw BundleError(BundleError::Kind::kMissingPart,
                      "no such bundle: " + path.string());
  }
  RawBundle raw;
  raw.firmware = read_part(path, kFirmwareFile, limits.max_firmware,
                           BundleError::Kind::kOversizedFirmware);
  raw.manifest = read_part(path, kManifestFile, limits.max_manifest,
                           BundleError::Kind::kOversizedManifest);
  raw.signature = read_part(path, kSignatureFile, crypto::Signature::kSize,
                            BundleError::Kind::kMalformed);
  return raw;
}

FirmwarePackage read_bundle(const fs::path& path, crypto::Scheme scheme,
                            const BundleLimits& limits) {
  return parse_bundle(read_raw_bundle(path, limits), scheme, limits);
}

}  // namespace fwattest
