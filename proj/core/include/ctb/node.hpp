#pragma once

// Single-process node: a durable ledger it orders itself, plus the
// evidence databases of the ISPs it hosts.
//
// Layout under the data directory:
//   ledger/blocks.dat, ledger/blocks.idx   the block store
//   evdb/<isp address hex>/                one evidence store per ISP

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "ctb/evidence_store.hpp"
#include "ctb/ledger.hpp"

namespace ctb {

struct CommitResult {
  Digest tx_id;
  std::uint64_t height = 0;
  std::size_t index = 0;
  /// The transaction was already on chain; nothing new was appended.
  bool duplicate = false;
  /// Set when the transaction was refused (submit_batch only).
  std::optional<ErrorCode> error;
  std::string detail;
};

class LocalNode {
public:
  LocalNode(std::filesystem::path data_dir, SigningKey orderer_key,
            Clock clock = system_now, EvidenceStoreConfig evdb = {});

  /// Writes block 0. The genesis orderer must be this node's key.
  void initialize(GenesisProposal genesis);
  bool initialized() const;

  /// Validates and commits one transaction in its own block. Resubmitting
  /// a committed transaction returns its location with duplicate = true.
  /// Throws the chaincode Error when the transaction is refused.
  CommitResult submit(const Transaction &tx);

  /// FIFO batching, at most `max_batch` transactions per block. Refused
  /// transactions are reported, not thrown.
  std::vector<CommitResult> submit_batch(std::span<const Transaction> txs,
                                         std::size_t max_batch);

  Ledger &ledger() { return *ledger_; }
  const Ledger &ledger() const { return *ledger_; }
  EvidenceStore &evidence_store(const Address &isp);

  const std::filesystem::path &data_dir() const { return dir_; }
  std::filesystem::path ledger_dir() const { return dir_ / "ledger"; }
  Address orderer_address() const {
    return address_of(orderer_key_.public_key());
  }
  Timestamp now() const { return clock_(); }
  void set_clock(Clock clock);

private:
  std::filesystem::path dir_;
  SigningKey orderer_key_;
  Clock clock_;
  EvidenceStoreConfig evdb_config_;
  std::unique_ptr<Ledger> ledger_;
  std::mutex commit_mutex_;
  std::mutex evdb_mutex_;
  std::map<Address, std::unique_ptr<EvidenceStore>> stores_;
};

} // namespace ctb
