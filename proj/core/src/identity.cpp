#include "ctb/identity.hpp"

#include <algorithm>
#include <cctype>

#include <sodium.h>

#include "ctb/error.hpp"
#include "ctb/hash.hpp"

namespace ctb {

std::string_view to_string(Role role) {
  switch (role) {
  case Role::Isp:
    return "ISP";
  case Role::Lea:
    return "LEA";
  case Role::Prosecutor:
    return "PROSECUTOR";
  }
  return "UNKNOWN";
}

Role parse_role(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  if (upper == "ISP")
    return Role::Isp;
  if (upper == "LEA")
    return Role::Lea;
  if (upper == "PROSECUTOR")
    return Role::Prosecutor;
  throw Error(ErrorCode::InvalidArgument,
              "unknown role '" + std::string(name) + "'");
}

namespace {

Role role_from_byte(std::uint8_t v) {
  if (v < 1 || v > 3)
    throw_malformed("role byte out of range");
  return static_cast<Role>(v);
}

} // namespace

SigningKey SigningKey::generate() {
  ensure_crypto();
  Seed seed;
  randombytes_buf(seed.data(), Seed::size);
  auto key = from_seed(seed);
  sodium_memzero(seed.data(), Seed::size);
  return key;
}

SigningKey SigningKey::from_seed(const Seed &seed) {
  ensure_crypto();
  SigningKey key;
  key.seed_ = seed;
  crypto_sign_seed_keypair(key.public_key_.data(), key.secret_.data(),
                           seed.data());
  return key;
}

SigningKey::SigningKey(SigningKey &&other) noexcept
    : seed_(other.seed_), secret_(other.secret_),
      public_key_(other.public_key_) {
  other.wipe();
}

SigningKey &SigningKey::operator=(SigningKey &&other) noexcept {
  if (this != &other) {
    seed_ = other.seed_;
    secret_ = other.secret_;
    public_key_ = other.public_key_;
    other.wipe();
  }
  return *this;
}

SigningKey::~SigningKey() { wipe(); }

void SigningKey::wipe() {
  sodium_memzero(seed_.data(), Seed::size);
  sodium_memzero(secret_.data(), secret_.size());
}

Signature SigningKey::sign(ByteView message) const {
  Signature sig;
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(),
                       secret_.data());
  return sig;
}

Bytes SigningKey::serialize() const {
  return ByteWriter().fixed(seed_).bytes();
}

SigningKey SigningKey::deserialize(ByteView data) {
  ByteReader r(data);
  auto seed = r.fixed<Seed>();
  r.expect_end();
  return from_seed(seed);
}

Signature sign(const SigningKey &key, ByteView message) {
  return key.sign(message);
}

bool verify_signature(const PublicKey &key, ByteView message,
                      ByteView signature) {
  ensure_crypto();
  if (signature.size() != Signature::size)
    return false;
  return crypto_sign_verify_detached(signature.data(), message.data(),
                                     message.size(), key.data()) == 0;
}

Address address_of(const PublicKey &key) {
  auto digest = hash(key.view(), HashAlgorithm::Sha256);
  return Address::from(ByteView(digest.bytes).first(Address::size));
}

Bytes Certificate::to_be_signed() const {
  return ByteWriter()
      .fixed(subject_address)
      .u8(static_cast<std::uint8_t>(subject_role))
      .fixed(subject_public_key)
      .i64(issued_at)
      .i64(expires_at)
      .bytes();
}

Bytes Certificate::serialize() const {
  ByteWriter w;
  w.fixed(subject_address)
      .u8(static_cast<std::uint8_t>(subject_role))
      .fixed(subject_public_key)
      .i64(issued_at)
      .i64(expires_at)
      .fixed(issuer_signature);
  return std::move(w).take();
}

Certificate Certificate::deserialize(ByteView data) {
  ByteReader r(data);
  Certificate c;
  c.subject_address = r.fixed<Address>();
  c.subject_role = role_from_byte(r.u8());
  c.subject_public_key = r.fixed<PublicKey>();
  c.issued_at = r.i64();
  c.expires_at = r.i64();
  c.issuer_signature = r.fixed<Signature>();
  r.expect_end();
  return c;
}

bool TrustAnchor::verify_certificate(const Certificate &cert,
                                     Timestamp now) const {
  if (cert.issued_at >= cert.expires_at)
    return false;
  if (now < cert.issued_at || now >= cert.expires_at)
    return false;
  if (address_of(cert.subject_public_key) != cert.subject_address)
    return false;
  return verify_signature(root, cert.to_be_signed(),
                          cert.issuer_signature.view());
}

bool verify(const TrustAnchor &anchor, const Certificate &cert,
            ByteView message, ByteView signature, Timestamp now) {
  if (!anchor.verify_certificate(cert, now))
    return false;
  return verify_signature(cert.subject_public_key, message, signature);
}

Participant Participant::from_certificate(const Certificate &cert) {
  return {cert.subject_address, cert.subject_role, cert.subject_public_key,
          cert};
}

CertificateAuthority CertificateAuthority::init(std::optional<Seed> seed) {
  return CertificateAuthority(seed ? SigningKey::from_seed(*seed)
                                   : SigningKey::generate());
}

Certificate CertificateAuthority::issue(Role role, const PublicKey &subject,
                                        Timestamp issued_at,
                                        Timestamp expires_at) const {
  if (issued_at >= expires_at)
    throw Error(ErrorCode::InvalidArgument,
                "certificate must expire after it is issued");
  Certificate cert;
  cert.subject_address = address_of(subject);
  cert.subject_role = role;
  cert.subject_public_key = subject;
  cert.issued_at = issued_at;
  cert.expires_at = expires_at;
  std::lock_guard lock(mutex_);
  cert.issuer_signature = root_.sign(cert.to_be_signed());
  return cert;
}

Enrollment CertificateAuthority::enroll(Role role, Timestamp now,
                                        std::optional<Seed> subject_seed,
                                        Timestamp validity) const {
  auto key = subject_seed ? SigningKey::from_seed(*subject_seed)
                          : SigningKey::generate();
  auto cert = issue(role, key.public_key(), now, now + validity);
  return {Participant::from_certificate(cert), std::move(key)};
}

} // namespace ctb
