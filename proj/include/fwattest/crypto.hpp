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

#ifndef FWATTEST_CRYPTO_HPP_
#define FWATTEST_CRYPTO_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "fwattest/bytes.hpp"

namespace fwattest::crypto {

/// SHA-256 digest. Always exactly 32 bytes; hex form is 64 lowercase chars.
class Digest {
 public:
  static constexpr std::size_t kSize = 32;

  Digest() = default;
  explicit Digest(const std::array<std::uint8_t, kSize>& bytes)
      : bytes_(bytes) {}

  static std::optional<Digest> from_hex(std::string_view hex);

  const std::array<std::uint8_t, kSize>& bytes() const { return bytes_; }
  ByteView view() const { return bytes_; }
  std::string hex() const { return to_hex(bytes_); }

  friend bool operator==(const Digest&, const Digest&) = default;

 private:
  std::array<std::uint8_t, kSize> bytes_{};
};

Digest hash(ByteView data);

// The tag value doubles as the 1-byte prefix of the public key file.
enum class Scheme : std::uint8_t {
  kEcdsaP256 = 0x01,
  kEd25519 = 0x02,
};

std::string_view scheme_name(Scheme scheme);
std::optional<Scheme> parse_scheme(std::string_view name);

/// Encoded public key: SEC1-compressed point (33 bytes) for P-256, raw 32
/// bytes for Ed25519. Never carries private material.
class PublicKey {
 public:
  // Throws Error if `encoded` is not a valid key for `scheme`.
  PublicKey(Scheme scheme, Bytes encoded);

  // Parses the tagged file form (tag byte followed by the encoded key).
  static PublicKey parse(ByteView tagged);

  Scheme scheme() const { return scheme_; }
  const Bytes& encoded() const { return encoded_; }
  Bytes serialize() const;

  friend bool operator==(const PublicKey&, const PublicKey&) = default;

 private:
  Scheme scheme_;
  Bytes encoded_;
};

// Where key material is allowed to come from. Seeds are only honoured for
// test fixtures; the production path always draws from the system CSPRNG.
enum class KeySource { kProduction, kTestFixture };

class KeyPair {
 public:
  static constexpr std::size_t kSecretSize = 32;

  KeyPair(const KeyPair&) = default;
  KeyPair(KeyPair&&) noexcept = default;
  KeyPair& operator=(const KeyPair&) = default;
  KeyPair& operator=(KeyPair&&) noexcept = default;
  ~KeyPair();

  // Rebuilds a key pair from its secret (P-256 scalar or Ed25519 seed).
  static KeyPair from_secret(Scheme scheme, ByteView secret);

  // Private key file form: tag byte followed by the 32 secret bytes.
  static KeyPair parse(ByteView tagged);
  Bytes serialize_private() const;

  Scheme scheme() const { return public_key_.scheme(); }
  const PublicKey& public_key() const { return public_key_; }
  ByteView secret() const { return secret_; }

 private:
  KeyPair(PublicKey pub, Bytes secret)
      : public_key_(std::move(pub)), secret_(std::move(secret)) {}

  PublicKey public_key_;
  Bytes secret_;
};

// Fresh key pair. A seed makes generation deterministic and is rejected
// unless `source` is kTestFixture.
KeyPair keygen(Scheme scheme, std::optional<std::uint64_t> seed = std::nullopt,
               KeySource source = KeySource::kProduction);

class Signature {
 public:
  static constexpr std::size_t kSize = 64;

  Signature(Scheme scheme, const std::array<std::uint8_t, kSize>& bytes)
      : scheme_(scheme), bytes_(bytes) {}

  // nullopt unless `raw` is exactly 64 bytes.
  static std::optional<Signature> from_bytes(Scheme scheme, ByteView raw);

  Scheme scheme() const { return scheme_; }
  const std::array<std::uint8_t, kSize>& bytes() const { return bytes_; }
  ByteView view() const { return bytes_; }

  friend bool operator==(const Signature&, const Signature&) = default;

 private:
  Scheme scheme_;
  std::array<std::uint8_t, kSize> bytes_;
};

// digest ‖ canonical manifest bytes: the only byte string ever signed.
Bytes signing_payload(const Digest& firmware_digest, ByteView manifest_bytes);

// Deterministic for both schemes: RFC 6979 nonces for P-256 (r‖s, fixed
// width), native Ed25519 otherwise.
Signature sign(const KeyPair& key, ByteView payload);

// Throws Error if `requested` differs from the key's scheme.
Signature sign(const KeyPair& key, ByteView payload, Scheme requested);

// Never throws. Malformed input of any kind verifies as false.
bool verify(const PublicKey& key, ByteView payload, ByteView signature);
bool verify(const PublicKey& key, ByteView payload, const Signature& sig);

}  // namespace fwattest::crypto

#endif  // FWATTEST_CRYPTO_HPP_
