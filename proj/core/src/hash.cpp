#include "ctb/hash.hpp"

#include <mutex>
#include <stdexcept>
#include <variant>

#include <sodium.h>

#include "ctb/error.hpp"

namespace ctb {

void ensure_crypto() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0)
      throw std::runtime_error("libsodium initialisation failed");
  });
}

std::string_view to_string(HashAlgorithm alg) {
  switch (alg) {
  case HashAlgorithm::Sha256:
    return "sha256";
  case HashAlgorithm::Blake2b256:
    return "blake2b-256";
  }
  return "unknown";
}

HashAlgorithm parse_hash_algorithm(std::string_view name) {
  if (name == "sha256" || name == "sha-256")
    return HashAlgorithm::Sha256;
  if (name == "blake2b-256" || name == "blake2b")
    return HashAlgorithm::Blake2b256;
  throw Error(ErrorCode::InvalidArgument,
              "unknown hash algorithm '" + std::string(name) + "'");
}

struct Hasher::State {
  HashAlgorithm alg;
  std::variant<crypto_hash_sha256_state, crypto_generichash_state> ctx;
};

Hasher::Hasher(HashAlgorithm alg) : state_(std::make_unique<State>()) {
  ensure_crypto();
  state_->alg = alg;
  switch (alg) {
  case HashAlgorithm::Sha256: {
    auto &s = state_->ctx.emplace<crypto_hash_sha256_state>();
    crypto_hash_sha256_init(&s);
    break;
  }
  case HashAlgorithm::Blake2b256: {
    auto &s = state_->ctx.emplace<crypto_generichash_state>();
    crypto_generichash_init(&s, nullptr, 0, Digest::size);
    break;
  }
  default:
    throw Error(ErrorCode::InvalidArgument, "unsupported hash algorithm");
  }
}

Hasher::~Hasher() = default;
Hasher::Hasher(Hasher &&) noexcept = default;
Hasher &Hasher::operator=(Hasher &&) noexcept = default;

Hasher &Hasher::update(ByteView data) {
  if (auto *s = std::get_if<crypto_hash_sha256_state>(&state_->ctx))
    crypto_hash_sha256_update(s, data.data(), data.size());
  else
    crypto_generichash_update(&std::get<crypto_generichash_state>(state_->ctx),
                              data.data(), data.size());
  return *this;
}

Digest Hasher::finish() {
  Digest out;
  if (auto *s = std::get_if<crypto_hash_sha256_state>(&state_->ctx))
    crypto_hash_sha256_final(s, out.data());
  else
    crypto_generichash_final(&std::get<crypto_generichash_state>(state_->ctx),
                             out.data(), Digest::size);
  return out;
}

Digest hash(ByteView data, HashAlgorithm alg) {
  return Hasher(alg).update(data).finish();
}

} // namespace ctb
