#pragma once

#include <memory>
#include <string_view>

#include "ctb/bytes.hpp"

namespace ctb {

/// 256-bit hash functions selectable by name. SHA-256 is the default
/// wherever an identifier, tx id or block hash is computed.
enum class HashAlgorithm : std::uint8_t {
  Sha256 = 1,
  Blake2b256 = 2,
};

std::string_view to_string(HashAlgorithm alg);
HashAlgorithm parse_hash_algorithm(std::string_view name);

Digest hash(ByteView data, HashAlgorithm alg = HashAlgorithm::Sha256);

/// Incremental hashing over several parts.
class Hasher {
public:
  explicit Hasher(HashAlgorithm alg = HashAlgorithm::Sha256);
  ~Hasher();
  Hasher(Hasher &&) noexcept;
  Hasher &operator=(Hasher &&) noexcept;

  Hasher &update(ByteView data);
  Digest finish();

private:
  struct State;
  std::unique_ptr<State> state_;
};

/// Idempotent libsodium initialisation.
void ensure_crypto();

} // namespace ctb
