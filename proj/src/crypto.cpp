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

#include "fwattest/crypto.hpp"

#include <openssl/bn.h>
#include <openssl/core_names.h>
#include <openssl/crypto.h>
#include <openssl/ec.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/obj_mac.h>
#include <openssl/params.h>
#include <openssl/rand.h>

#include <algorithm>
#include <cstring>
#include <memory>

namespace fwattest::crypto {

namespace {

template <auto Fn>
struct Deleter {
  template <typename T>
  void operator()(T* p) const {
    Fn(p);
  }
};

using BnPtr = std::unique_ptr<BIGNUM, Deleter<BN_clear_free>>;
using BnCtxPtr = std::unique_ptr<BN_CTX, Deleter<BN_CTX_free>>;
using PointPtr = std::unique_ptr<EC_POINT, Deleter<EC_POINT_free>>;
using GroupPtr = std::unique_ptr<EC_GROUP, Deleter<EC_GROUP_free>>;
using PkeyPtr = std::unique_ptr<EVP_PKEY, Deleter<EVP_PKEY_free>>;
using PkeyCtxPtr = std::unique_ptr<EVP_PKEY_CTX, Deleter<EVP_PKEY_CTX_free>>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, Deleter<EVP_MD_CTX_free>>;
using EcdsaSigPtr = std::unique_ptr<ECDSA_SIG, Deleter<ECDSA_SIG_free>>;

void openssl_free(unsigned char* p) { OPENSSL_free(p); }

constexpr std::size_t kP256ScalarSize = 32;
constexpr std::size_t kP256CompressedSize = 33;
constexpr std::size_t kEd25519KeySize = 32;

BnPtr new_bn() {
  BnPtr bn(BN_new());
  if (!bn) throw Error("BN_new failed");
  return bn;
}

BnPtr bn_from(ByteView bytes) {
  BnPtr bn(BN_bin2bn(bytes.data(), static_cast<int>(bytes.size()), nullptr));
  if (!bn) throw Error("BN_bin2bn failed");
  return bn;
}

std::array<std::uint8_t, kP256ScalarSize> bn_to_32(const BIGNUM* bn) {
  std::array<std::uint8_t, kP256ScalarSize> out{};
  if (BN_bn2binpad(bn, out.data(), static_cast<int>(out.size())) < 0) {
    throw Error("BN_bn2binpad failed");
  }
  return out;
}

// The P-256 group is immutable once built and shared across threads.
struct P256 {
  GroupPtr group;
  const BIGNUM* order;

  static const P256& get() {
    static const P256 instance = [] {
      P256 p;
      p.group.reset(EC_GROUP_new_by_curve_name(NID_X9_62_prime256v1));
      if (!p.group) throw Error("P-256 group unavailable");
      p.order = EC_GROUP_get0_order(p.group.get());
      return p;
    }();
    return instance;
  }
};

using Block = std::array<std::uint8_t, 32>;

Block hmac_sha256(ByteView key, std::initializer_list<ByteView> parts) {
  Bytes msg;
  for (ByteView p : parts) msg.insert(msg.end(), p.begin(), p.end());
  Block out{};
  unsigned int len = 0;
  if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), msg.data(),
            msg.size(), out.data(), &len) ||
      len != out.size()) {
    throw Error("HMAC-SHA256 failed");
  }
  return out;
}

// RFC 6979 section 3.2 with qlen = hlen = 256.
class NonceGenerator {
 public:
  NonceGenerator(ByteView secret, ByteView reduced_hash) {
    v_.fill(0x01);
    k_.fill(0x00);
    const std::uint8_t zero = 0x00, one = 0x01;
    k_ = hmac_sha256(k_, {v_, ByteView(&zero, 1), secret, reduced_hash});
    v_ = hmac_sha256(k_, {v_});
    k_ = hmac_sha256(k_, {v_, ByteView(&one, 1), secret, reduced_hash});
    v_ = hmac_sha256(k_, {v_});
  }

  // Next candidate in [1, n-1].
  BnPtr next(const BIGNUM* order) {
    for (;;) {
      if (!first_) {
        const std::uint8_t zero = 0x00;
        k_ = hmac_sha256(k_, {v_, ByteView(&zero, 1)});
        v_ = hmac_sha256(k_, {v_});
      }
      first_ = false;
      v_ = hmac_sha256(k_, {v_});
      BnPtr k = bn_from(v_);
      if (!BN_is_zero(k.get()) && BN_cmp(k.get(), order) < 0) return k;
    }
  }

 private:
  Block v_{};
  Block k_{};
  bool first_ = true;
};

Bytes p256_public_from_secret(ByteView secret) {
  const P256& curve = P256::get();
  BnCtxPtr ctx(BN_CTX_new());
  BnPtr d = bn_from(secret);
  if (BN_is_zero(d.get()) || BN_cmp(d.get(), curve.order) >= 0) {
    throw Error("P-256 secret scalar out of range");
  }
  PointPtr q(EC_POINT_new(curve.group.get()));
  if (!q || !EC_POINT_mul(curve.group.get(), q.get(), d.get(), nullptr,
                          nullptr, ctx.get())) {
    throw Error("EC_POINT_mul failed");
  }
  Bytes out(kP256CompressedSize);
  if (EC_POINT_point2oct(curve.group.get(), q.get(),
                         POINT_CONVERSION_COMPRESSED, out.data(), out.size(),
                         ctx.get()) != out.size()) {
    throw Error("EC_POINT_point2oct failed");
  }
  return out;
}

PkeyPtr ed25519_private(ByteView secret) {
  PkeyPtr pkey(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr,
                                            secret.data(), secret.size()));
  if (!pkey) throw Error("invalid Ed25519 secret");
  return pkey;
}

Bytes ed25519_public_from_secret(ByteView secret) {
  PkeyPtr pkey = ed25519_private(secret);
  Bytes out(kEd25519KeySize);
  std::size_t len = out.size();
  if (!EVP_PKEY_get_raw_public_key(pkey.get(), out.data(), &len) ||
      len != out.size()) {
    throw Error("EVP_PKEY_get_raw_public_key failed");
  }
  return out;
}

bool p256_secret_in_range(ByteView secret) {
  BnPtr d = bn_from(secret);
  return !BN_is_zero(d.get()) && BN_cmp(d.get(), P256::get().order) < 0;
}

Bytes fixture_secret(Scheme scheme, std::uint64_t seed) {
  static constexpr std::string_view kDomain = "fwattest-fixture-key";
  for (std::uint32_t counter = 0;; ++counter) {
    Bytes input(kDomain.begin(), kDomain.end());
    input.push_back(static_cast<std::uint8_t>(scheme));
    for (int i = 0; i < 8; ++i) input.push_back((seed >> (8 * i)) & 0xff);
    for (int i = 0; i < 4; ++i) input.push_back((counter >> (8 * i)) & 0xff);
    Digest d = hash(input);
    Bytes secret(d.bytes().begin(), d.bytes().end());
    if (scheme == Scheme::kEd25519 || p256_secret_in_range(secret)) {
      return secret;
    }
  }
}

Bytes random_secret(Scheme scheme) {
  Bytes secret(KeyPair::kSecretSize);
  do {
    if (RAND_priv_bytes(secret.data(), static_cast<int>(secret.size())) != 1) {
      throw Error("RAND_priv_bytes failed");
    }
  } while (scheme == Scheme::kEcdsaP256 && !p256_secret_in_range(secret));
  return secret;
}

std::array<std::uint8_t, Signature::kSize> p256_sign(ByteView secret,
                                                     ByteView payload) {
  const P256& curve = P256::get();
  BnCtxPtr ctx(BN_CTX_new());
  if (!ctx) throw Error("BN_CTX_new failed");

  Digest e = hash(payload);
  BnPtr z = bn_from(e.view());
  // bits2octets: reduce once modulo n (hash and order are both 256 bits).
  if (BN_cmp(z.get(), curve.order) >= 0) {
    BN_sub(z.get(), z.get(), curve.order);
  }
  auto reduced = bn_to_32(z.get());

  BnPtr d = bn_from(secret);
  BN_set_flags(d.get(), BN_FLG_CONSTTIME);
  NonceGenerator nonces(secret, reduced);

  PointPtr point(EC_POINT_new(curve.group.get()));
  BnPtr x = new_bn(), r = new_bn(), s = new_bn(), kinv = new_bn(),
        t = new_bn();
  for (;;) {
    BnPtr k = nonces.next(curve.order);
    BN_set_flags(k.get(), BN_FLG_CONSTTIME);
    if (!EC_POINT_mul(curve.group.get(), point.get(), k.get(), nullptr,
                      nullptr, ctx.get()) ||
        !EC_POINT_get_affine_coordinates(curve.group.get(), point.get(),
                                         x.get(), nullptr, ctx.get()) ||
        !BN_nnmod(r.get(), x.get(), curve.order, ctx.get())) {
      throw Error("ECDSA point computation failed");
    }
    if (BN_is_zero(r.get())) continue;
    if (!BN_mod_inverse(kinv.get(), k.get(), curve.order, ctx.get()) ||
        !BN_mod_mul(t.get(), r.get(), d.get(), curve.order, ctx.get()) ||
        !BN_mod_add(t.get(), t.get(), z.get(), curve.order, ctx.get()) ||
        !BN_mod_mul(s.get(), kinv.get(), t.get(), curve.order, ctx.get())) {
      throw Error("ECDSA scalar arithmetic failed");
    }
    if (BN_is_zero(s.get())) continue;
    break;
  }
  std::array<std::uint8_t, Signature::kSize> out{};
  auto rb = bn_to_32(r.get());
  auto sb = bn_to_32(s.get());
  std::memcpy(out.data(), rb.data(), rb.size());
  std::memcpy(out.data() + 32, sb.data(), sb.size());
  return out;
}

std::array<std::uint8_t, Signature::kSize> ed25519_sign(ByteView secret,
                                                        ByteView payload) {
  PkeyPtr pkey = ed25519_private(secret);
  MdCtxPtr md(EVP_MD_CTX_new());
  std::array<std::uint8_t, Signature::kSize> out{};
  std::size_t len = out.size();
  if (!md ||
      EVP_DigestSignInit(md.get(), nullptr, nullptr, nullptr, pkey.get()) !=
          1 ||
      EVP_DigestSign(md.get(), out.data(), &len, payload.data(),
                     payload.size()) != 1 ||
      len != out.size()) {
    throw Error("Ed25519 signing failed");
  }
  return out;
}

PkeyPtr p256_public_pkey(const Bytes& encoded) {
  char group_name[] = "prime256v1";
  OSSL_PARAM params[] = {
      OSSL_PARAM_construct_utf8_string(OSSL_PKEY_PARAM_GROUP_NAME, group_name,
                                       0),
      OSSL_PARAM_construct_octet_string(
          OSSL_PKEY_PARAM_PUB_KEY, const_cast<std::uint8_t*>(encoded.data()),
          encoded.size()),
      OSSL_PARAM_construct_end(),
  };
  PkeyCtxPtr pctx(EVP_PKEY_CTX_new_from_name(nullptr, "EC", nullptr));
  EVP_PKEY* raw = nullptr;
  if (!pctx || EVP_PKEY_fromdata_init(pctx.get()) != 1 ||
      EVP_PKEY_fromdata(pctx.get(), &raw, EVP_PKEY_PUBLIC_KEY, params) != 1) {
    return nullptr;
  }
  return PkeyPtr(raw);
}

bool p256_verify(const Bytes& encoded, ByteView payload, ByteView sig) {
  PkeyPtr pkey = p256_public_pkey(encoded);
  if (!pkey) return false;
  EcdsaSigPtr ecdsa(ECDSA_SIG_new());
  BIGNUM* r = BN_bin2bn(sig.data(), 32, nullptr);
  BIGNUM* s = BN_bin2bn(sig.data() + 32, 32, nullptr);
  if (!ecdsa || !r || !s || !ECDSA_SIG_set0(ecdsa.get(), r, s)) {
    BN_free(r);
    BN_free(s);
    return false;
  }
  unsigned char* der = nullptr;
  int der_len = i2d_ECDSA_SIG(ecdsa.get(), &der);
  if (der_len <= 0) return false;
  std::unique_ptr<unsigned char, Deleter<openssl_free>> der_owner(der);
  MdCtxPtr md(EVP_MD_CTX_new());
  return md &&
         EVP_DigestVerifyInit(md.get(), nullptr, EVP_sha256(), nullptr,
                              pkey.get()) == 1 &&
         EVP_DigestVerify(md.get(), der, static_cast<std::size_t>(der_len),
                          payload.data(), payload.size()) == 1;
}

bool ed25519_verify(const Bytes& encoded, ByteView payload, ByteView sig) {
  PkeyPtr pkey(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr,
                                           encoded.data(), encoded.size()));
  if (!pkey) return false;
  MdCtxPtr md(EVP_MD_CTX_new());
  return md &&
         EVP_DigestVerifyInit(md.get(), nullptr, nullptr, nullptr,
                              pkey.get()) == 1 &&
         EVP_DigestVerify(md.get(), sig.data(), sig.size(), payload.data(),
                          payload.size()) == 1;
}

bool valid_p256_point(const Bytes& encoded) {
  if (encoded.size() != kP256CompressedSize ||
      (encoded[0] != 0x02 && encoded[0] != 0x03)) {
    return false;
  }
  const P256& curve = P256::get();
  PointPtr point(EC_POINT_new(curve.group.get()));
  return point && EC_POINT_oct2point(curve.group.get(), point.get(),
                                     encoded.data(), encoded.size(),
                                     nullptr) == 1;
}

}  // namespace

std::optional<Digest> Digest::from_hex(std::string_view hex) {
  if (hex.size() != 2 * kSize) return std::nullopt;
  auto bytes = fwattest::from_hex(hex);
  if (!bytes) return std::nullopt;
  std::array<std::uint8_t, kSize> arr{};
  std::copy(bytes->begin(), bytes->end(), arr.begin());
  return Digest(arr);
}

Digest hash(ByteView data) {
  std::array<std::uint8_t, Digest::kSize> out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(),
                 nullptr) != 1 ||
      len != out.size()) {
    throw Error("SHA-256 failed");
  }
  return Digest(out);
}

std::string_view scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::kEcdsaP256:
      return "ecdsa-p256";
    case Scheme::kEd25519:
      return "ed25519";
  }
  return "unknown";
}

std::optional<Scheme> parse_scheme(std::string_view name) {
  if (name == "ecdsa-p256" || name == "ecdsa" || name == "p256") {
    return Scheme::kEcdsaP256;
  }
  if (name == "ed25519") return Scheme::kEd25519;
  return std::nullopt;
}

PublicKey::PublicKey(Scheme scheme, Bytes encoded)
    : scheme_(scheme), encoded_(std::move(encoded)) {
  switch (scheme_) {
    case Scheme::kEcdsaP256:
      if (!valid_p256_point(encoded_)) {
        throw Error("invalid P-256 public key (expected 33-byte SEC1 "
                    "compressed point)");
      }
      return;
    case Scheme::kEd25519:
      if (encoded_.size() != kEd25519KeySize) {
        throw Error("invalid Ed25519 public key (expected 32 bytes)");
      }
      return;
  }
  throw Error("unknown signature scheme");
}

PublicKey PublicKey::parse(ByteView tagged) {
  if (tagged.empty()) throw Error("empty public key");
  std::uint8_t tag = tagged[0];
  if (tag != static_cast<std::uint8_t>(Scheme::kEcdsaP256) &&
      tag != static_cast<std::uint8_t>(Scheme::kEd25519)) {
    throw Error("unknown public key scheme tag");
  }
  return PublicKey(static_cast<Scheme>(tag),
                   Bytes(tagged.begin() + 1, tagged.end()));
}

Bytes PublicKey::serialize() const {
  Bytes out;
  out.reserve(1 + encoded_.size());
  out.push_back(static_cast<std::uint8_t>(scheme_));
  out.insert(out.end(), encoded_.begin(), encoded_.end());
  return out;
}

KeyPair::~KeyPair() {
  if (!secret_.empty()) OPENSSL_cleanse(secret_.data(), secret_.size());
}

KeyPair KeyPair::from_secret(Scheme scheme, ByteView secret) {
  if (secret.size() != kSecretSize) throw Error("secret must be 32 bytes");
  Bytes pub = scheme == Scheme::kEcdsaP256
                  ? p256_public_from_secret(secret)
                  : ed25519_public_from_secret(secret);
  return KeyPair(PublicKey(scheme, std::move(pub)),
                 Bytes(secret.begin(), secret.end()));
}

KeyPair KeyPair::parse(ByteView tagged) {
  if (tagged.size() != 1 + kSecretSize) {
    throw Error("private key file must be 33 bytes");
  }
  std::uint8_t tag = tagged[0];
  if (tag != static_cast<std::uint8_t>(Scheme::kEcdsaP256) &&
      tag != static_cast<std::uint8_t>(Scheme::kEd25519)) {
    throw Error("unknown private key scheme tag");
  }
  return from_secret(static_cast<Scheme>(tag), tagged.subspan(1));
}

Bytes KeyPair::serialize_private() const {
  Bytes out(1 + secret_.size());
  out[0] = static_cast<std::uint8_t>(scheme());
  std::copy(secret_.begin(), secret_.end(), out.begin() + 1);
  return out;
}

KeyPair keygen(Scheme scheme, std::optional<std::uint64_t> seed,
               KeySource source) {
  if (seed && source != KeySource::kTestFixture) {
    throw Error("seeded key generation is restricted to test fixtures");
  }
  Bytes secret = seed ? fixture_secret(scheme, *seed) : random_secret(scheme);
  KeyPair kp = KeyPair::from_secret(scheme, secret);
  OPENSSL_cleanse(secret.data(), secret.size());
  return kp;
}

std::optional<Signature> Signature::from_bytes(Scheme scheme, ByteView raw) {
  if (raw.size() != kSize) return std::nullopt;
  std::array<std::uint8_t, kSize> arr{};
  std::copy(raw.begin(), raw.end(), arr.begin());
  return Signature(scheme, arr);
}

Bytes signing_payload(const Digest& firmware_digest, ByteView manifest_bytes) {
  Bytes out;
  out.reserve(Digest::kSize + manifest_bytes.size());
  out.insert(out.end(), firmware_digest.bytes().begin(),
             firmware_digest.bytes().end());
  out.insert(out.end(), manifest_bytes.begin(), manifest_bytes.end());
  return out;
}

Signature sign(const KeyPair& key, ByteView payload) {
  switch (key.scheme()) {
    case Scheme::kEcdsaP256:
      return Signature(key.scheme(), p256_sign(key.secret(), payload));
    case Scheme::kEd25519:
      return Signature(key.scheme(), ed25519_sign(key.secret(), payload));
  }
  throw Error("unknown signature scheme");
}

Signature sign(const KeyPair& key, ByteView payload, Scheme requested) {
  if (requested != key.scheme()) {
    throw Error(std::string("scheme mismatch: key is ") +
                std::string(scheme_name(key.scheme())) + ", requested " +
                std::string(scheme_name(requested)));
  }
  return sign(key, payload);
}

bool verify(const PublicKey& key, ByteView payload, ByteView signature) {
  if (signature.size() != Signature::kSize) return false;
  try {
    switch (key.scheme()) {
      case Scheme::kEcdsaP256:
        return p256_verify(key.encoded(), payload, signature);
      case Scheme::kEd25519:
        return ed25519_verify(key.encoded(), payload, signature);
    }
  } catch (const std::exception&) {
    return false;
  }
  return false;
}

bool verify(const PublicKey& key, ByteView payload, const Signature& sig) {
  if (sig.scheme() != key.scheme()) return false;
  return verify(key, payload, sig.view());
}

}  // namespace fwattest::crypto
