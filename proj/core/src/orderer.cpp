#include "ctb/orderer.hpp"

#include "ctb/chaincode.hpp"

namespace ctb::net {

bool Orderer::enqueue(const Transaction &tx, const Ledger &ledger) {
  if (queued_ids_.contains(tx.tx_id) || rejections_.contains(tx.tx_id) ||
      ledger.find_tx(tx.tx_id))
    return false;
  queue_.push_back(tx);
  queued_ids_.insert(tx.tx_id);
  return true;
}

std::optional<Block> Orderer::cut(const Ledger &ledger, Timestamp timestamp,
                                  std::size_t max_batch) {
  auto base = ledger.snapshot();
  if (!base->params)
    return std::nullopt;
  WorldState speculative = *base;
  auto tip = ledger.latest();
  if (tip && timestamp < tip->timestamp)
    timestamp = tip->timestamp;

  auto anchor = base->params->anchor();
  std::vector<Transaction> batch;
  while (!queue_.empty() && batch.size() < max_batch) {
    Transaction tx = std::move(queue_.front());
    queue_.pop_front();
    queued_ids_.erase(tx.tx_id);

    auto reject = [&](ErrorCode code, std::string detail) {
      rejections_[tx.tx_id] = {tx.tx_id, code, std::move(detail)};
    };
    if (ledger.find_tx(tx.tx_id))
      continue;
    if (tx.compute_id(base->hash_algorithm()) != tx.tx_id) {
      reject(ErrorCode::IntegrityError, "tx id does not match contents");
      continue;
    }
    const auto *cert = speculative.find_participant(tx.submitter);
    if (!cert || !verify(anchor, *cert, tx.proposal,
                         tx.submitter_signature.view(), timestamp)) {
      reject(ErrorCode::PermissionDenied, "submitter signature invalid");
      continue;
    }
    try {
      if (tx.kind == TxKind::Genesis)
        throw Error(ErrorCode::InvalidArgument, "GENESIS after height 0");
      chaincode::execute(speculative, tx, timestamp);
    } catch (const Error &e) {
      reject(e.code(), e.what());
      continue;
    }
    batch.push_back(std::move(tx));
  }
  if (batch.empty())
    return std::nullopt;
  return seal_block(ledger.height(), tip ? tip->block_hash : Digest{},
                    timestamp, std::move(batch), address_, *key_,
                    base->hash_algorithm());
}

} // namespace ctb::net
