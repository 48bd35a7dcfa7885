#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ctb/transaction.hpp"

namespace ctb {

/// Merkle root over leaf digests. Odd levels duplicate their last node;
/// a single leaf is its own root; no leaves give the zero digest.
Digest merkle_root(std::span<const Digest> leaves,
                   HashAlgorithm alg = HashAlgorithm::Sha256);

struct MerkleStep {
  Digest sibling;
  /// Sibling is hashed on the left of the running node.
  bool sibling_left = false;

  bool operator==(const MerkleStep &) const = default;
};

struct MerkleProof {
  std::size_t index = 0;
  std::vector<MerkleStep> path;
};

MerkleProof merkle_proof(std::span<const Digest> leaves, std::size_t index,
                         HashAlgorithm alg = HashAlgorithm::Sha256);

bool verify_merkle_proof(const Digest &leaf, const MerkleProof &proof,
                         const Digest &root,
                         HashAlgorithm alg = HashAlgorithm::Sha256);

struct Block {
  std::uint64_t height = 0;
  Digest prev_hash;
  Timestamp timestamp = 0;
  std::vector<Transaction> txs;
  Digest tx_merkle_root;
  Digest block_hash;
  Address proposer;
  Signature proposer_signature;

  std::vector<Digest> tx_ids() const;
  Digest compute_merkle_root(HashAlgorithm alg) const;
  /// Hash(height || prev_hash || timestamp || tx_merkle_root || proposer).
  Digest compute_hash(HashAlgorithm alg) const;

  Bytes serialize() const;
  static Block deserialize(ByteView data);

  bool operator==(const Block &) const = default;
};

/// Assemble, hash and sign a block. Genesis uses the zero prev_hash.
Block seal_block(std::uint64_t height, const Digest &prev_hash,
                 Timestamp timestamp, std::vector<Transaction> txs,
                 const Address &proposer, const SigningKey &proposer_key,
                 HashAlgorithm alg);

} // namespace ctb
