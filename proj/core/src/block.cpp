#include "ctb/block.hpp"

#include "ctb/error.hpp"

namespace ctb {

namespace {

Digest hash_pair(const Digest &left, const Digest &right, HashAlgorithm alg) {
  return Hasher(alg).update(left.view()).update(right.view()).finish();
}

std::vector<Digest> next_level(const std::vector<Digest> &level,
                               HashAlgorithm alg) {
  std::vector<Digest> out;
  out.reserve((level.size() + 1) / 2);
  for (std::size_t i = 0; i < level.size(); i += 2) {
    const Digest &right = i + 1 < level.size() ? level[i + 1] : level[i];
    out.push_back(hash_pair(level[i], right, alg));
  }
  return out;
}

} // namespace

Digest merkle_root(std::span<const Digest> leaves, HashAlgorithm alg) {
  if (leaves.empty())
    return Digest{};
  std::vector<Digest> level(leaves.begin(), leaves.end());
  while (level.size() > 1)
    level = next_level(level, alg);
  return level.front();
}

MerkleProof merkle_proof(std::span<const Digest> leaves, std::size_t index,
                         HashAlgorithm alg) {
  if (index >= leaves.size())
    throw Error(ErrorCode::InvalidArgument, "merkle leaf index out of range");
  MerkleProof proof;
  proof.index = index;
  std::vector<Digest> level(leaves.begin(), leaves.end());
  std::size_t pos = index;
  while (level.size() > 1) {
    bool is_right = pos % 2 == 1;
    std::size_t sibling = is_right ? pos - 1 : pos + 1;
    if (sibling >= level.size())
      sibling = pos; // duplicated last node
    proof.path.push_back({level[sibling], is_right});
    level = next_level(level, alg);
    pos /= 2;
  }
  return proof;
}

bool verify_merkle_proof(const Digest &leaf, const MerkleProof &proof,
                         const Digest &root, HashAlgorithm alg) {
  Digest node = leaf;
  for (const auto &step : proof.path)
    node = step.sibling_left ? hash_pair(step.sibling, node, alg)
                             : hash_pair(node, step.sibling, alg);
  return node == root;
}

std::vector<Digest> Block::tx_ids() const {
  std::vector<Digest> ids;
  ids.reserve(txs.size());
  for (const auto &tx : txs)
    ids.push_back(tx.tx_id);
  return ids;
}

Digest Block::compute_merkle_root(HashAlgorithm alg) const {
  auto ids = tx_ids();
  return merkle_root(ids, alg);
}

Digest Block::compute_hash(HashAlgorithm alg) const {
  auto header = ByteWriter()
                    .u64(height)
                    .fixed(prev_hash)
                    .i64(timestamp)
                    .fixed(tx_merkle_root)
                    .fixed(proposer)
                    .bytes();
  return hash(header, alg);
}

Bytes Block::serialize() const {
  ByteWriter w;
  w.u64(height).fixed(prev_hash).i64(timestamp).u64(txs.size());
  for (const auto &tx : txs)
    w.field(tx.serialize());
  w.fixed(tx_merkle_root)
      .fixed(block_hash)
      .fixed(proposer)
      .fixed(proposer_signature);
  return std::move(w).take();
}

Block Block::deserialize(ByteView data) {
  ByteReader r(data);
  Block b;
  b.height = r.u64();
  b.prev_hash = r.fixed<Digest>();
  b.timestamp = r.i64();
  auto count = r.u64();
  if (count > data.size())
    throw_malformed("transaction count exceeds record size");
  b.txs.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i)
    b.txs.push_back(Transaction::deserialize(r.field()));
  b.tx_merkle_root = r.fixed<Digest>();
  b.block_hash = r.fixed<Digest>();
  b.proposer = r.fixed<Address>();
  b.proposer_signature = r.fixed<Signature>();
  r.expect_end();
  return b;
}

Block seal_block(std::uint64_t height, const Digest &prev_hash,
                 Timestamp timestamp, std::vector<Transaction> txs,
                 const Address &proposer, const SigningKey &proposer_key,
                 HashAlgorithm alg) {
  Block b;
  b.height = height;
  b.prev_hash = prev_hash;
  b.timestamp = timestamp;
  b.txs = std::move(txs);
  b.tx_merkle_root = b.compute_merkle_root(alg);
  b.proposer = proposer;
  b.block_hash = b.compute_hash(alg);
  b.proposer_signature = proposer_key.sign(b.block_hash.view());
  return b;
}

} // namespace ctb
