#include "ctb/node.hpp"

#include "ctb/orderer.hpp"

namespace ctb {

LocalNode::LocalNode(std::filesystem::path data_dir, SigningKey orderer_key,
                     Clock clock, EvidenceStoreConfig evdb)
    : dir_(std::move(data_dir)), orderer_key_(std::move(orderer_key)),
      clock_(std::move(clock)), evdb_config_(evdb) {
  std::filesystem::create_directories(ledger_dir());
  ledger_ = Ledger::open(ledger_dir());
  if (auto state = ledger_->snapshot(); state->params)
    evdb_config_.hash = state->params->hash;
}

bool LocalNode::initialized() const { return ledger_->height() > 0; }

void LocalNode::initialize(GenesisProposal genesis) {
  std::lock_guard lock(commit_mutex_);
  if (initialized())
    throw Error(ErrorCode::AlreadyExists, "ledger already has a genesis block");
  if (genesis.orderer != orderer_address())
    throw Error(ErrorCode::InvalidArgument,
                "genesis orderer does not match the node key");
  auto ts = clock_();
  if (genesis.issued_at == 0)
    genesis.issued_at = ts;
  ledger_->append_block(make_genesis(genesis, orderer_key_, ts));
  evdb_config_.hash = genesis.hash;
}

void LocalNode::set_clock(Clock clock) {
  std::lock_guard lock(commit_mutex_);
  clock_ = std::move(clock);
}

CommitResult LocalNode::submit(const Transaction &tx) {
  auto results = submit_batch(std::span(&tx, 1), 1);
  auto &r = results.front();
  if (r.error)
    throw Error(*r.error, r.detail);
  return r;
}

std::vector<CommitResult>
LocalNode::submit_batch(std::span<const Transaction> txs,
                        std::size_t max_batch) {
  std::lock_guard lock(commit_mutex_);
  if (!initialized())
    throw Error(ErrorCode::InvalidArgument, "ledger has no genesis block");
  std::vector<CommitResult> results(txs.size());
  std::map<Digest, bool> previously_known;
  net::Orderer orderer(orderer_address(), orderer_key_);
  for (std::size_t i = 0; i < txs.size(); ++i) {
    results[i].tx_id = txs[i].tx_id;
    previously_known.emplace(txs[i].tx_id,
                             ledger_->find_tx(txs[i].tx_id).has_value());
    orderer.enqueue(txs[i], *ledger_);
  }
  while (orderer.pending() > 0) {
    auto block = orderer.cut(*ledger_, clock_(), max_batch);
    if (block)
      ledger_->append_block(*block);
  }
  for (auto &r : results) {
    if (auto loc = ledger_->find_tx(r.tx_id)) {
      r.height = loc->height;
      r.index = loc->index;
      r.duplicate = previously_known[r.tx_id];
    } else if (auto rej = orderer.rejections().find(r.tx_id);
               rej != orderer.rejections().end()) {
      r.error = rej->second.code;
      r.detail = rej->second.detail;
    } else {
      r.error = ErrorCode::InvalidArgument;
      r.detail = "transaction was not committed";
    }
  }
  return results;
}

EvidenceStore &LocalNode::evidence_store(const Address &isp) {
  std::lock_guard lock(evdb_mutex_);
  auto &slot = stores_[isp];
  if (!slot)
    slot = std::make_unique<EvidenceStore>(dir_ / "evdb" / isp.hex(),
                                           evdb_config_,
                                           [this] { return clock_(); });
  return *slot;
}

} // namespace ctb
