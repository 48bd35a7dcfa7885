#include "ctb/ledger.hpp"

#include <fstream>
#include <mutex>
#include <set>

#include "ctb/chaincode.hpp"

namespace ctb {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Block stores
// ---------------------------------------------------------------------------

Bytes MemoryBlockStore::read(std::uint64_t height) const {
  if (height >= records_.size())
    throw Error(ErrorCode::NotFound, "no block at height " + std::to_string(height));
  return records_[height];
}

void MemoryBlockStore::append(ByteView record) {
  records_.emplace_back(record.begin(), record.end());
}

void MemoryBlockStore::mutate(std::uint64_t height, std::size_t offset,
                              std::uint8_t mask) {
  auto &rec = records_.at(height);
  rec.at(offset) ^= mask;
}

namespace {

Bytes read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    return {};
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

} // namespace

FileBlockStore::FileBlockStore(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
  if (!fs::exists(data_path()))
    std::ofstream(data_path(), std::ios::binary);
  if (!fs::exists(index_path()))
    std::ofstream(index_path(), std::ios::binary);
  data_size_ = fs::file_size(data_path());
  auto index = read_file(index_path());
  if (index.size() % 8 != 0)
    throw Error(ErrorCode::IoError, "block index has a partial entry");
  for (std::size_t i = 0; i < index.size(); i += 8)
    offsets_.push_back(get_u64_be(index.data() + i));
}

Bytes FileBlockStore::read(std::uint64_t height) const {
  if (height >= offsets_.size())
    throw Error(ErrorCode::NotFound, "no block at height " + std::to_string(height));
  std::ifstream in(data_path(), std::ios::binary);
  in.seekg(static_cast<std::streamoff>(offsets_[height]));
  std::uint8_t len_buf[4];
  if (!in.read(reinterpret_cast<char *>(len_buf), 4))
    throw Error(ErrorCode::IoError, "truncated block length");
  Bytes rec(get_u32_be(len_buf));
  if (!in.read(reinterpret_cast<char *>(rec.data()),
               static_cast<std::streamsize>(rec.size())))
    throw Error(ErrorCode::IoError, "truncated block record");
  return rec;
}

void FileBlockStore::append(ByteView record) {
  Bytes framed;
  put_u32_be(framed, static_cast<std::uint32_t>(record.size()));
  framed.insert(framed.end(), record.begin(), record.end());
  {
    std::ofstream out(data_path(), std::ios::binary | std::ios::app);
    out.write(reinterpret_cast<const char *>(framed.data()),
              static_cast<std::streamsize>(framed.size()));
    if (!out.flush())
      throw Error(ErrorCode::IoError, "failed to append block record");
  }
  Bytes entry;
  put_u64_be(entry, data_size_);
  {
    std::ofstream out(index_path(), std::ios::binary | std::ios::app);
    out.write(reinterpret_cast<const char *>(entry.data()), 8);
    if (!out.flush())
      throw Error(ErrorCode::IoError, "failed to append block index");
  }
  offsets_.push_back(data_size_);
  data_size_ += framed.size();
}

StoreScan FileBlockStore::scan() const {
  StoreScan out;
  auto data = read_file(data_path());
  auto index = read_file(index_path());
  std::size_t pos = 0;
  while (pos < data.size()) {
    auto height = out.records.size();
    if (data.size() - pos < 4) {
      out.broken_at = height;
      out.detail = "truncated record length";
      return out;
    }
    std::uint32_t len = get_u32_be(data.data() + pos);
    if (data.size() - pos - 4 < len) {
      out.broken_at = height;
      out.detail = "record length runs past end of file";
      return out;
    }
    if (index.size() < (height + 1) * 8 ||
        get_u64_be(index.data() + height * 8) != pos) {
      out.broken_at = height;
      out.detail = "index entry disagrees with record offset";
      return out;
    }
    out.records.emplace_back(data.begin() + static_cast<std::ptrdiff_t>(pos + 4),
                             data.begin() + static_cast<std::ptrdiff_t>(pos + 4 + len));
    pos += 4 + len;
  }
  if (index.size() != out.records.size() * 8) {
    out.broken_at = out.records.size();
    out.detail = "index has entries beyond the data file";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void reject(RejectReason reason, const Block &b,
                         const std::string &detail) {
  throw BlockRejected(reason, b.height, detail);
}

struct Membership {
  ChainParams params;
  std::map<Address, Certificate> roster;
};

Membership genesis_membership(const Block &block) {
  if (block.txs.size() != 1 || block.txs[0].kind != TxKind::Genesis)
    reject(RejectReason::Genesis, block,
           "genesis block must hold exactly one GENESIS transaction");
  GenesisProposal g;
  try {
    g = std::get<GenesisProposal>(block.txs[0].decoded());
  } catch (const std::exception &e) {
    reject(RejectReason::Decode, block, e.what());
  }
  Membership m{{g.ca_root, g.hash, g.orderer, g.policy}, {}};
  for (const auto &cert : g.roster) {
    if (!m.params.anchor().verify_certificate(cert, block.timestamp))
      reject(RejectReason::Genesis, block,
             "roster certificate " + cert.subject_address.hex() +
                 " does not verify against the CA root");
    if (!m.roster.emplace(cert.subject_address, cert).second)
      reject(RejectReason::Genesis, block, "duplicate roster entry");
  }
  return m;
}

void check_structure(const ChainParams &params,
                     const std::map<Address, Certificate> &roster,
                     const Block &block, const Block *prev,
                     bool check_linkage) {
  const auto alg = params.hash;
  if (check_linkage) {
    std::uint64_t expected = prev ? prev->height + 1 : 0;
    if (block.height != expected)
      reject(RejectReason::Height, block,
             "expected height " + std::to_string(expected));
    Digest expected_prev = prev ? prev->block_hash : Digest{};
    if (block.prev_hash != expected_prev)
      reject(RejectReason::Linkage, block, "prev_hash does not match");
    if (prev && block.timestamp < prev->timestamp)
      reject(RejectReason::Timestamp, block, "timestamp moves backwards");
  }
  if (block.txs.empty())
    reject(RejectReason::Semantics, block, "empty block");

  std::vector<Digest> ids;
  ids.reserve(block.txs.size());
  for (const auto &tx : block.txs)
    ids.push_back(tx.compute_id(alg));
  if (merkle_root(ids, alg) != block.tx_merkle_root)
    reject(RejectReason::Merkle, block, "tx_merkle_root mismatch");
  std::set<Digest> seen;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] != block.txs[i].tx_id)
      reject(RejectReason::TxId, block,
             "tx " + std::to_string(i) + " id does not match its contents");
    if (!seen.insert(ids[i]).second)
      reject(RejectReason::Duplicate, block,
             "tx " + ids[i].hex() + " repeated in block");
  }

  if (block.compute_hash(alg) != block.block_hash)
    reject(RejectReason::BlockHash, block, "block_hash mismatch");
  if (block.proposer != params.orderer)
    reject(RejectReason::Proposer, block, "proposer is not the orderer");
  auto anchor = params.anchor();
  auto proposer = roster.find(block.proposer);
  if (proposer == roster.end() ||
      !verify(anchor, proposer->second, block.block_hash.view(),
              block.proposer_signature.view(), block.timestamp))
    reject(RejectReason::Signature, block, "proposer signature invalid");

  for (std::size_t i = 0; i < block.txs.size(); ++i) {
    const auto &tx = block.txs[i];
    try {
      if (kind_of(tx.decoded()) != tx.kind)
        reject(RejectReason::Decode, block,
               "tx " + std::to_string(i) + " kind does not match proposal");
    } catch (const BlockRejected &) {
      throw;
    } catch (const std::exception &e) {
      reject(RejectReason::Decode, block,
             "tx " + std::to_string(i) + ": " + e.what());
    }
    auto cert = roster.find(tx.submitter);
    if (cert == roster.end() ||
        !verify(anchor, cert->second, tx.proposal,
                tx.submitter_signature.view(), block.timestamp))
      reject(RejectReason::Signature, block,
             "tx " + std::to_string(i) + " submitter signature invalid");
  }
}

Membership membership_for(const WorldState &state, const Block &block) {
  if (state.params)
    return {*state.params, state.roster};
  if (block.height != 0)
    reject(RejectReason::Genesis, block, "chain has no genesis block");
  return genesis_membership(block);
}

} // namespace

void check_block_structure(const WorldState &state, const Block &block,
                           const Block *prev) {
  auto m = membership_for(state, block);
  check_structure(m.params, m.roster, block, prev, true);
}

WorldState apply_block(const WorldState &state, const Block &block,
                       const Block *prev,
                       const std::function<bool(const Digest &)> &known_tx) {
  if (block.height != state.height)
    reject(RejectReason::Height, block,
           "expected height " + std::to_string(state.height));
  if (state.height > 0 && !prev)
    reject(RejectReason::Linkage, block, "previous block unavailable");
  check_block_structure(state, block, prev);

  WorldState next = state;
  for (const auto &tx : block.txs) {
    if (known_tx && known_tx(tx.tx_id))
      reject(RejectReason::Duplicate, block,
             "tx " + tx.tx_id.hex() + " already on chain");
    if (block.height > 0 && tx.kind == TxKind::Genesis)
      reject(RejectReason::Semantics, block, "GENESIS after height 0");
    try {
      chaincode::execute(next, tx, block.timestamp);
    } catch (const Error &e) {
      reject(RejectReason::Semantics, block,
             std::string(to_string(e.code())) + ": " + e.what());
    }
  }
  next.height = state.height + 1;
  return next;
}

Block make_genesis(const GenesisProposal &genesis,
                   const SigningKey &orderer_key, Timestamp timestamp) {
  auto tx = make_transaction(genesis, genesis.orderer, orderer_key,
                             genesis.hash);
  return seal_block(0, Digest{}, timestamp, {std::move(tx)}, genesis.orderer,
                    orderer_key, genesis.hash);
}

WorldState replay(std::span<const Block> blocks) {
  WorldState state;
  std::set<Digest> seen;
  const Block *prev = nullptr;
  for (const auto &block : blocks) {
    try {
      state = apply_block(state, block, prev,
                          [&](const Digest &id) { return seen.contains(id); });
    } catch (const BlockRejected &e) {
      throw ReplayError(state.height, e.what());
    }
    for (const auto &tx : block.txs)
      seen.insert(tx.tx_id);
    prev = &block;
  }
  return state;
}

VerificationReport verify_chain(const BlockStore &store) {
  VerificationReport report;
  auto scan = store.scan();

  WorldState state;
  std::set<Digest> seen;
  std::optional<Block> prev;
  bool healthy = true;
  bool linkable = true;

  auto fail = [&](BlockCheck &check, RejectReason reason, std::string detail) {
    check.ok = false;
    check.reason = reason;
    check.detail = std::move(detail);
    if (!report.first_invalid_height)
      report.first_invalid_height = check.height;
    report.valid = false;
  };

  for (std::uint64_t h = 0; h < scan.records.size(); ++h) {
    BlockCheck check;
    check.height = h;
    std::optional<Block> block;
    try {
      block = Block::deserialize(scan.records[h]);
    } catch (const std::exception &e) {
      fail(check, RejectReason::Decode, e.what());
      report.blocks.push_back(check);
      healthy = false;
      linkable = false;
      prev.reset();
      continue;
    }
    if (block->height != h) {
      fail(check, RejectReason::Height,
           "record at position " + std::to_string(h) + " claims height " +
               std::to_string(block->height));
    } else if (healthy) {
      try {
        state = apply_block(state, *block, prev ? &*prev : nullptr,
                            [&](const Digest &id) { return seen.contains(id); });
        for (const auto &tx : block->txs)
          seen.insert(tx.tx_id);
      } catch (const BlockRejected &e) {
        fail(check, e.reason(), e.detail());
      }
    } else if (state.params) {
      // After a failure the state is no longer trustworthy; keep checking
      // hashes, linkage and signatures so the report covers every block.
      try {
        check_structure(*state.params, state.roster, *block,
                        prev ? &*prev : nullptr, linkable);
      } catch (const BlockRejected &e) {
        fail(check, e.reason(), e.detail());
      }
    } else {
      fail(check, RejectReason::Genesis, "no valid genesis to verify against");
    }
    if (!check.ok)
      healthy = false;
    report.blocks.push_back(check);
    prev = std::move(block);
    linkable = true;
  }

  if (scan.broken_at) {
    BlockCheck check;
    check.height = *scan.broken_at;
    fail(check, RejectReason::Index, scan.detail);
    report.blocks.push_back(check);
  }
  if (report.valid && prev)
    report.tip_hash = prev->block_hash;
  return report;
}

// ---------------------------------------------------------------------------
// Ledger
// ---------------------------------------------------------------------------

Ledger::Ledger(std::unique_ptr<BlockStore> store)
    : store_(std::move(store)), state_(std::make_shared<WorldState>()) {
  WorldState state;
  for (std::uint64_t h = 0; h < store_->size(); ++h) {
    Block block;
    try {
      block = Block::deserialize(store_->read(h));
      state = apply_block(state, block, h ? &blocks_.back() : nullptr,
                          [&](const Digest &id) { return tx_index_.contains(id); });
    } catch (const std::exception &e) {
      throw ReplayError(h, e.what());
    }
    for (std::size_t i = 0; i < block.txs.size(); ++i)
      tx_index_[block.txs[i].tx_id] = {h, i};
    blocks_.push_back(std::move(block));
  }
  state_ = std::make_shared<const WorldState>(std::move(state));
}

std::unique_ptr<Ledger> Ledger::in_memory() {
  return std::make_unique<Ledger>(std::make_unique<MemoryBlockStore>());
}

std::unique_ptr<Ledger> Ledger::open(const fs::path &dir) {
  return std::make_unique<Ledger>(std::make_unique<FileBlockStore>(dir));
}

void Ledger::validate(const Block &block) const {
  std::shared_lock lock(mutex_);
  apply_block(*state_, block, blocks_.empty() ? nullptr : &blocks_.back(),
              [&](const Digest &id) { return tx_index_.contains(id); });
}

void Ledger::append_block(const Block &block) {
  std::unique_lock lock(mutex_);
  auto next = apply_block(*state_, block,
                          blocks_.empty() ? nullptr : &blocks_.back(),
                          [&](const Digest &id) { return tx_index_.contains(id); });
  store_->append(block.serialize());
  for (std::size_t i = 0; i < block.txs.size(); ++i)
    tx_index_[block.txs[i].tx_id] = {block.height, i};
  blocks_.push_back(block);
  state_ = std::make_shared<const WorldState>(std::move(next));
}

std::uint64_t Ledger::height() const {
  std::shared_lock lock(mutex_);
  return blocks_.size();
}

std::optional<Block> Ledger::block(std::uint64_t height) const {
  std::shared_lock lock(mutex_);
  if (height >= blocks_.size())
    return std::nullopt;
  return blocks_[height];
}

std::optional<Block> Ledger::latest() const {
  std::shared_lock lock(mutex_);
  if (blocks_.empty())
    return std::nullopt;
  return blocks_.back();
}

std::vector<Block> Ledger::blocks(std::uint64_t from, std::uint64_t to) const {
  std::shared_lock lock(mutex_);
  std::vector<Block> out;
  for (auto h = from; h < to && h < blocks_.size(); ++h)
    out.push_back(blocks_[h]);
  return out;
}

std::optional<Digest> Ledger::tip_hash() const {
  std::shared_lock lock(mutex_);
  if (blocks_.empty())
    return std::nullopt;
  return blocks_.back().block_hash;
}

std::shared_ptr<const WorldState> Ledger::snapshot() const {
  std::shared_lock lock(mutex_);
  return state_;
}

std::optional<TxLocation> Ledger::find_tx(const Digest &tx_id) const {
  std::shared_lock lock(mutex_);
  auto it = tx_index_.find(tx_id);
  if (it == tx_index_.end())
    return std::nullopt;
  return it->second;
}

std::optional<Transaction> Ledger::transaction(const Digest &tx_id) const {
  std::shared_lock lock(mutex_);
  auto it = tx_index_.find(tx_id);
  if (it == tx_index_.end())
    return std::nullopt;
  return blocks_[it->second.height].txs[it->second.index];
}

} // namespace ctb
