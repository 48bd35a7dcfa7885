#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "ctb/ledger.hpp"

namespace ctb::net {

struct Rejection {
  Digest tx_id;
  ErrorCode code = ErrorCode::InvalidArgument;
  std::string detail;
};

/// FIFO batching of proposals into signed blocks on top of a ledger.
class Orderer {
public:
  Orderer(Address address, const SigningKey &key)
      : address_(address), key_(&key) {}

  /// Queues `tx` unless it is already pending, on chain, or rejected.
  /// Returns false for such duplicates.
  bool enqueue(const Transaction &tx, const Ledger &ledger);

  std::size_t pending() const { return queue_.size(); }

  /// Pull proposals in arrival order until `max_batch` of them validate
  /// against the ledger state; invalid ones are dropped with a recorded
  /// rejection. Returns nullopt when nothing valid was pending, so no empty
  /// block is ever produced.
  std::optional<Block> cut(const Ledger &ledger, Timestamp timestamp,
                           std::size_t max_batch);

  const std::map<Digest, Rejection> &rejections() const { return rejections_; }
  const Address &address() const { return address_; }
  const SigningKey &key() const { return *key_; }

private:
  Address address_;
  const SigningKey *key_;
  std::deque<Transaction> queue_;
  std::set<Digest> queued_ids_;
  std::map<Digest, Rejection> rejections_;
};

} // namespace ctb::net
