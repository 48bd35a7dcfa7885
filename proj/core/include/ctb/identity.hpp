#pragma once

// Certificate authority, participant enrollment and Ed25519 signing.
//
// A single root CA issues certificates binding (address, role, public key,
// validity window). The address is the first 20 bytes of SHA-256 over the
// public key. Certificates carry no revocation; expiry is the only way a
// certificate stops verifying.

#include <cstdint>
#include <mutex>
#include <optional>
#include <string_view>

#include "ctb/bytes.hpp"

namespace ctb {

struct PublicKeyTag {};
struct SignatureTag {};

using PublicKey = FixedBytes<32, PublicKeyTag>;
using Signature = FixedBytes<64, SignatureTag>;

enum class Role : std::uint8_t {
  Isp = 1,
  Lea = 2,
  Prosecutor = 3,
};

std::string_view to_string(Role role);
Role parse_role(std::string_view name);

/// Secret signing key. Move-only; wiped on destruction.
class SigningKey {
public:
  static SigningKey generate();
  static SigningKey from_seed(const Seed &seed);

  SigningKey(SigningKey &&other) noexcept;
  SigningKey &operator=(SigningKey &&other) noexcept;
  SigningKey(const SigningKey &) = delete;
  SigningKey &operator=(const SigningKey &) = delete;
  ~SigningKey();

  const PublicKey &public_key() const { return public_key_; }
  const Seed &seed() const { return seed_; }

  Signature sign(ByteView message) const;

  /// Canonical key file bytes: one field holding the 32-byte seed.
  Bytes serialize() const;
  static SigningKey deserialize(ByteView data);

private:
  SigningKey() = default;
  void wipe();

  Seed seed_;
  std::array<std::uint8_t, 64> secret_{};
  PublicKey public_key_;
};

Signature sign(const SigningKey &key, ByteView message);

/// Raw Ed25519 check. Malformed signature bytes yield false.
bool verify_signature(const PublicKey &key, ByteView message,
                      ByteView signature);

Address address_of(const PublicKey &key);

struct Certificate {
  Address subject_address;
  Role subject_role = Role::Isp;
  PublicKey subject_public_key;
  Timestamp issued_at = 0;
  Timestamp expires_at = 0;
  Signature issuer_signature;

  /// Canonical bytes of every field except the issuer signature.
  Bytes to_be_signed() const;
  Bytes serialize() const;
  static Certificate deserialize(ByteView data);

  bool operator==(const Certificate &) const = default;
};

/// Root public key of the CA; everything a verifier needs.
struct TrustAnchor {
  PublicKey root;

  /// Issuer signature, address binding, and validity window at `now`.
  bool verify_certificate(const Certificate &cert, Timestamp now) const;
};

/// True iff `signature` was made over `message` by the key certified in
/// `cert`, and `cert` itself verifies against the anchor at `now`.
bool verify(const TrustAnchor &anchor, const Certificate &cert,
            ByteView message, ByteView signature, Timestamp now);

struct Participant {
  Address address;
  Role role = Role::Isp;
  PublicKey public_key;
  Certificate cert;

  static Participant from_certificate(const Certificate &cert);
};

struct Enrollment {
  Participant participant;
  SigningKey key;
};

class CertificateAuthority {
public:
  static constexpr Timestamp kDefaultValidity = 10LL * 365 * 24 * 3600;

  /// Deterministic under a fixed seed; random otherwise.
  static CertificateAuthority init(std::optional<Seed> seed = std::nullopt);

  CertificateAuthority(CertificateAuthority &&other) noexcept
      : root_(std::move(other.root_)) {}

  const PublicKey &root_public_key() const { return root_.public_key(); }
  TrustAnchor anchor() const { return {root_.public_key()}; }
  const SigningKey &root_key() const { return root_; }

  /// Fresh keypair plus CA-signed certificate. A subject seed makes the
  /// keypair reproducible (tests, fixtures).
  Enrollment enroll(Role role, Timestamp now,
                    std::optional<Seed> subject_seed = std::nullopt,
                    Timestamp validity = kDefaultValidity) const;

  Certificate issue(Role role, const PublicKey &subject, Timestamp issued_at,
                    Timestamp expires_at) const;

private:
  explicit CertificateAuthority(SigningKey root) : root_(std::move(root)) {}

  SigningKey root_;
  mutable std::mutex mutex_;
};

} // namespace ctb
