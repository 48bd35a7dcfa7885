#pragma once

// The trusted transaction log: durable block storage, full block
// validation, chain verification and deterministic replay.
//
// On-disk layout of a FileBlockStore directory:
//   blocks.dat  sequence of records, each a 4-byte big-endian length
//               followed by the canonical block bytes
//   blocks.idx  one 8-byte big-endian offset into blocks.dat per height
// Both files are only ever appended to.

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "ctb/block.hpp"
#include "ctb/error.hpp"
#include "ctb/world_state.hpp"

namespace ctb {

struct StoreScan {
  std::vector<Bytes> records;
  /// Height at which the raw storage stops making sense (truncated record,
  /// index disagreement). Records before it are returned.
  std::optional<std::uint64_t> broken_at;
  std::string detail;
};

class BlockStore {
public:
  virtual ~BlockStore() = default;

  virtual std::uint64_t size() const = 0;
  virtual Bytes read(std::uint64_t height) const = 0;
  virtual void append(ByteView record) = 0;
  /// Sequential scan of the raw storage, independent of cached state.
  virtual StoreScan scan() const = 0;
};

class MemoryBlockStore final : public BlockStore {
public:
  std::uint64_t size() const override { return records_.size(); }
  Bytes read(std::uint64_t height) const override;
  void append(ByteView record) override;
  StoreScan scan() const override { return {records_, std::nullopt, {}}; }

  /// Fault-injection hook: XOR one byte of a stored record.
  void mutate(std::uint64_t height, std::size_t offset, std::uint8_t mask);

private:
  std::vector<Bytes> records_;
};

class FileBlockStore final : public BlockStore {
public:
  static constexpr const char *kDataFile = "blocks.dat";
  static constexpr const char *kIndexFile = "blocks.idx";

  explicit FileBlockStore(std::filesystem::path dir);

  std::uint64_t size() const override { return offsets_.size(); }
  Bytes read(std::uint64_t height) const override;
  void append(ByteView record) override;
  StoreScan scan() const override;

  const std::filesystem::path &dir() const { return dir_; }
  std::filesystem::path data_path() const { return dir_ / kDataFile; }
  std::filesystem::path index_path() const { return dir_ / kIndexFile; }

private:
  std::filesystem::path dir_;
  std::vector<std::uint64_t> offsets_;
  std::uint64_t data_size_ = 0;
};

struct TxLocation {
  std::uint64_t height = 0;
  std::size_t index = 0;
};

/// Validate `block` on top of `state` and return the advanced state.
/// `prev` is the block at height-1 (null for genesis); `known_tx` reports
/// tx ids already on chain. Throws BlockRejected.
WorldState apply_block(const WorldState &state, const Block &block,
                       const Block *prev,
                       const std::function<bool(const Digest &)> &known_tx);

/// Structural checks only (linkage, Merkle root, hashes, signatures),
/// against chain parameters and roster taken from `state`.
void check_block_structure(const WorldState &state, const Block &block,
                           const Block *prev);

Block make_genesis(const GenesisProposal &genesis,
                   const SigningKey &orderer_key, Timestamp timestamp);

/// Fold of apply_block over a chain; throws ReplayError at the first bad
/// height.
WorldState replay(std::span<const Block> blocks);

struct BlockCheck {
  std::uint64_t height = 0;
  bool ok = true;
  std::optional<RejectReason> reason;
  std::string detail;
};

struct VerificationReport {
  std::vector<BlockCheck> blocks;
  bool valid = true;
  std::optional<std::uint64_t> first_invalid_height;
  std::optional<Digest> tip_hash;
};

VerificationReport verify_chain(const BlockStore &store);

class Ledger {
public:
  /// Opens the store and replays every stored block; throws ReplayError
  /// if the stored chain does not validate.
  explicit Ledger(std::unique_ptr<BlockStore> store);
  static std::unique_ptr<Ledger> in_memory();
  static std::unique_ptr<Ledger> open(const std::filesystem::path &dir);

  Ledger(const Ledger &) = delete;
  Ledger &operator=(const Ledger &) = delete;

  /// Validates and persists; throws BlockRejected and leaves the chain
  /// unchanged on failure.
  void append_block(const Block &block);
  /// Dry-run of append_block.
  void validate(const Block &block) const;

  std::uint64_t height() const;
  std::optional<Block> block(std::uint64_t height) const;
  std::optional<Block> latest() const;
  std::vector<Block> blocks(std::uint64_t from, std::uint64_t to) const;
  std::optional<Digest> tip_hash() const;

  std::shared_ptr<const WorldState> snapshot() const;
  std::optional<TxLocation> find_tx(const Digest &tx_id) const;
  std::optional<Transaction> transaction(const Digest &tx_id) const;

  BlockStore &store() { return *store_; }
  const BlockStore &store() const { return *store_; }

private:
  mutable std::shared_mutex mutex_;
  std::unique_ptr<BlockStore> store_;
  std::vector<Block> blocks_;
  std::map<Digest, TxLocation> tx_index_;
  std::shared_ptr<const WorldState> state_;
};

} // namespace ctb
