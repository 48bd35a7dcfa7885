#include "ctb/network.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ctb/chaincode.hpp"

namespace ctb::net {

namespace {

constexpr std::uint64_t kMaxSyncBlocks = 64;

Seed derive_seed(std::string_view domain, std::uint64_t seed,
                 std::string_view name = {}) {
  ByteWriter w;
  w.str(domain).u64(seed).str(name);
  return Seed::from(hash(w.bytes()).view());
}

[[noreturn]] void spec_error(const std::string &what) {
  throw Error(ErrorCode::SpecError, what);
}

} // namespace

void NodeConfig::validate() const {
  if (node_id.empty())
    spec_error("node_id must not be empty");
  if (!(drop_rate >= 0.0 && drop_rate <= 1.0))
    spec_error("drop_rate of " + node_id + " outside [0,1]");
  if (latency.min_ms > latency.max_ms)
    spec_error("latency min > max for " + node_id);
}

std::string_view to_string(MessageKind kind) {
  switch (kind) {
  case MessageKind::Proposal:
    return "PROPOSAL";
  case MessageKind::BlockAnnounce:
    return "BLOCK_ANNOUNCE";
  case MessageKind::BlockRequest:
    return "BLOCK_REQUEST";
  case MessageKind::BlockResponse:
    return "BLOCK_RESPONSE";
  }
  return "?";
}

Bytes Message::signing_bytes() const {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(kind)).field(payload).fixed(sender);
  return std::move(w).take();
}

std::string_view to_string(FaultKind kind) {
  switch (kind) {
  case FaultKind::Drop:
    return "DROP";
  case FaultKind::Delay:
    return "DELAY";
  case FaultKind::Partition:
    return "PARTITION";
  case FaultKind::Heal:
    return "HEAL";
  case FaultKind::TamperBlock:
    return "TAMPER_BLOCK";
  case FaultKind::Equivocate:
    return "EQUIVOCATE";
  }
  return "?";
}

FaultKind parse_fault_kind(std::string_view name) {
  for (auto k : {FaultKind::Drop, FaultKind::Delay, FaultKind::Partition,
                 FaultKind::Heal, FaultKind::TamperBlock,
                 FaultKind::Equivocate})
    if (to_string(k) == name)
      return k;
  spec_error("unknown fault kind: " + std::string(name));
}

std::string_view to_string(AlertKind kind) {
  switch (kind) {
  case AlertKind::Equivocation:
    return "EQUIVOCATION";
  case AlertKind::InvalidBlock:
    return "INVALID_BLOCK";
  case AlertKind::ForgedBlock:
    return "FORGED_BLOCK";
  case AlertKind::BadMessage:
    return "BAD_MESSAGE";
  }
  return "?";
}

std::string_view to_string(IntentKind kind) {
  switch (kind) {
  case IntentKind::Create:
    return "CREATE";
  case IntentKind::Transfer:
    return "TRANSFER";
  case IntentKind::Erase:
    return "ERASE";
  case IntentKind::Access:
    return "ACCESS";
  case IntentKind::RegisterDevice:
    return "REGISTER_DEVICE";
  }
  return "?";
}

IntentKind parse_intent_kind(std::string_view name) {
  for (auto k : {IntentKind::Create, IntentKind::Transfer, IntentKind::Erase,
                 IntentKind::Access, IntentKind::RegisterDevice})
    if (to_string(k) == name)
      return k;
  spec_error("unknown intent kind: " + std::string(name));
}

Digest label_id(const std::string &label) {
  return hash(as_bytes("ctb-label:" + label));
}

struct Network::Node {
  NodeConfig config;
  Participant participant;
  SigningKey key;
  std::unique_ptr<Ledger> ledger;
  MemoryBlockStore *store = nullptr;
  int group = 0;
  double drop_rate = 0.0;
  std::uint32_t extra_delay_ms = 0;
  bool tampered = false;
  std::map<std::uint64_t, Block> future;
  std::map<Digest, Transaction> outbox;
  std::set<std::uint64_t> flagged;
  std::optional<std::uint64_t> last_request_ms;

  Node(NodeConfig cfg, Enrollment e)
      : config(std::move(cfg)), participant(std::move(e.participant)),
        key(std::move(e.key)) {
    auto mem = std::make_unique<MemoryBlockStore>();
    store = mem.get();
    ledger = std::make_unique<Ledger>(std::move(mem));
    group = config.partition_group;
    drop_rate = config.drop_rate;
  }
};

Network::Network(NetworkOptions options, std::vector<NodeConfig> nodes)
    : options_(std::move(options)), rng_(options_.seed) {
  if (nodes.empty())
    spec_error("network needs at least one node");
  if (options_.max_batch == 0)
    spec_error("max_batch must be positive");
  if (options_.batch_window_ms == 0 || options_.sync_interval_ms == 0 ||
      options_.retry_interval_ms == 0)
    spec_error("intervals must be positive");

  auto ca = CertificateAuthority::init(derive_seed("ctb-net-ca", options_.seed));
  anchor_ = ca.anchor();
  std::vector<Certificate> roster;
  for (auto &cfg : nodes) {
    cfg.validate();
    if (nodes_.contains(cfg.node_id))
      spec_error("duplicate node id " + cfg.node_id);
    if (cfg.is_orderer) {
      if (!orderer_id_.empty())
        spec_error("more than one orderer");
      orderer_id_ = cfg.node_id;
    }
    auto e = ca.enroll(cfg.role, options_.epoch,
                       derive_seed("ctb-net-node", options_.seed, cfg.node_id));
    roster.push_back(e.participant.cert);
    by_address_[e.participant.address] = cfg.node_id;
    auto id = cfg.node_id;
    nodes_.emplace(id, std::make_unique<Node>(std::move(cfg), std::move(e)));
  }
  if (orderer_id_.empty())
    spec_error("no orderer configured");

  auto &ord = node(orderer_id_);
  GenesisProposal g{anchor_.root, options_.hash, ord.participant.address,
                    options_.policy, roster, options_.epoch};
  auto genesis = make_genesis(g, ord.key, options_.epoch);
  for (auto &[_, n] : nodes_)
    n->ledger->append_block(genesis);
  orderer_ = std::make_unique<Orderer>(ord.participant.address, ord.key);

  std::uniform_int_distribution<std::uint32_t> jitter(
      1, options_.sync_interval_ms);
  for (auto &[id, n] : nodes_)
    if (id != orderer_id_)
      post(jitter(rng_), [this, id = id] { sync_tick(id); });
}

Network::~Network() = default;

Network::Node &Network::node(const std::string &id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end())
    throw Error(ErrorCode::UnknownParticipant, "unknown node " + id);
  return *it->second;
}

const Network::Node &Network::node(const std::string &id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end())
    throw Error(ErrorCode::UnknownParticipant, "unknown node " + id);
  return *it->second;
}

std::vector<std::string> Network::node_ids() const {
  std::vector<std::string> out;
  for (const auto &[id, _] : nodes_)
    out.push_back(id);
  return out;
}

const Participant &Network::participant(const std::string &id) const {
  return node(id).participant;
}

const SigningKey &Network::signing_key(const std::string &id) const {
  return node(id).key;
}

const Ledger &Network::ledger(const std::string &id) const {
  return *node(id).ledger;
}

Timestamp Network::now() const {
  return options_.epoch + static_cast<Timestamp>(now_ms_ / 1000);
}

const std::map<Digest, Rejection> &Network::rejections() const {
  return orderer_->rejections();
}

void Network::post(std::uint64_t at, std::function<void()> action) {
  events_.push(Event{std::max(at, now_ms_), seq_++, std::move(action)});
}

void Network::send(Node &from, const std::string &to, MessageKind kind,
                   Bytes payload) {
  Message msg{kind, std::move(payload), from.participant.address, {}};
  msg.signature = from.key.sign(msg.signing_bytes());
  ++stats_.sent;
  auto &dst = node(to);
  if (dst.group != from.group) {
    ++stats_.partitioned;
    return;
  }
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::uint32_t> latency(dst.config.latency.min_ms,
                                                       dst.config.latency.max_ms);
  double roll = coin(rng_);
  std::uint32_t delay = latency(rng_) + dst.extra_delay_ms;
  if (roll < dst.drop_rate) {
    ++stats_.dropped;
    return;
  }
  ++in_flight_;
  post(now_ms_ + delay, [this, to, msg = std::move(msg)] {
    --in_flight_;
    deliver(to, msg);
  });
}

void Network::alert(const Node &n, AlertKind kind, std::uint64_t height,
                    std::string detail) {
  alerts_.push_back({now_ms_, n.config.node_id, kind, height, std::move(detail)});
}

void Network::deliver(const std::string &to, const Message &msg) {
  auto &self = node(to);
  auto sender = by_address_.find(msg.sender);
  auto state = self.ledger->snapshot();
  const auto *cert = state->find_participant(msg.sender);
  if (sender == by_address_.end() || !cert ||
      !verify(anchor_, *cert, msg.signing_bytes(), msg.signature.view(),
              now())) {
    alert(self, AlertKind::BadMessage, 0, "message signature invalid");
    return;
  }
  ++stats_.delivered;
  try {
    switch (msg.kind) {
    case MessageKind::Proposal:
      if (to == orderer_id_)
        on_proposal(self, msg);
      break;
    case MessageKind::BlockRequest:
      if (to == orderer_id_)
        on_block_request(self, msg);
      break;
    case MessageKind::BlockAnnounce:
      on_block(self, Block::deserialize(msg.payload));
      break;
    case MessageKind::BlockResponse: {
      ByteReader r(msg.payload);
      auto count = r.u64();
      std::vector<Block> blocks;
      for (std::uint64_t i = 0; i < count; ++i)
        blocks.push_back(Block::deserialize(r.field()));
      r.expect_end();
      for (const auto &b : blocks)
        on_block(self, b);
      break;
    }
    }
  } catch (const Error &e) {
    alert(self, AlertKind::BadMessage, 0, e.what());
  }
}

void Network::on_proposal(Node &self, const Message &msg) {
  auto tx = Transaction::deserialize(msg.payload);
  if (orderer_->enqueue(tx, *self.ledger))
    schedule_cut(now_ms_ + options_.batch_window_ms);
}

void Network::schedule_cut(std::uint64_t at) {
  if (cut_scheduled_)
    return;
  cut_scheduled_ = true;
  post(at, [this] { cut(); });
}

void Network::cut() {
  cut_scheduled_ = false;
  auto &ord = node(orderer_id_);
  auto block = orderer_->cut(*ord.ledger, now(), options_.max_batch);
  if (block && try_append(ord, *block)) {
    auto payload = block->serialize();
    for (const auto &[id, _] : nodes_)
      if (id != orderer_id_)
        send(ord, id, MessageKind::BlockAnnounce, payload);
  }
  if (orderer_->pending() > 0)
    schedule_cut(now_ms_ + options_.batch_window_ms);
}

void Network::on_block_request(Node &self, const Message &msg) {
  ByteReader r(msg.payload);
  auto from = r.u64();
  r.expect_end();
  auto height = self.ledger->height();
  if (from >= height)
    return;
  auto to = std::min(height, from + kMaxSyncBlocks);
  ByteWriter w;
  w.u64(to - from);
  for (const auto &b : self.ledger->blocks(from, to))
    w.field(b.serialize());
  auto requester = by_address_.at(msg.sender);
  send(self, requester, MessageKind::BlockResponse, std::move(w).take());
}

namespace {

bool orderer_signed(const WorldState &state, const Block &block) {
  if (!state.params || block.proposer != state.params->orderer)
    return false;
  const auto *cert = state.find_participant(block.proposer);
  return cert && block.compute_hash(state.hash_algorithm()) == block.block_hash &&
         verify(state.params->anchor(), *cert, block.block_hash.view(),
                block.proposer_signature.view(), block.timestamp);
}

} // namespace

bool Network::try_append(Node &self, const Block &block) {
  try {
    self.ledger->append_block(block);
  } catch (const BlockRejected &e) {
    alert(self, AlertKind::InvalidBlock, block.height, e.what());
    return false;
  }
  for (const auto &tx : block.txs) {
    if (!self.outbox.erase(tx.tx_id))
      continue;
    auto it = outcome_by_tx_.find(tx.tx_id);
    if (it != outcome_by_tx_.end() &&
        outcomes_[it->second].node == self.config.node_id) {
      outcomes_[it->second].committed = true;
      outcomes_[it->second].status = "committed";
    }
  }
  return true;
}

void Network::on_block(Node &self, const Block &block) {
  auto state = self.ledger->snapshot();
  if (!orderer_signed(*state, block)) {
    alert(self, AlertKind::ForgedBlock, block.height,
          "block not signed by the orderer");
    return;
  }
  auto tip = self.ledger->height();
  auto flag = [&](const Block &kept) {
    if (kept.block_hash != block.block_hash &&
        self.flagged.insert(block.height).second)
      alert(self, AlertKind::Equivocation, block.height,
            "conflicting orderer-signed blocks " + kept.block_hash.hex() +
                " and " + block.block_hash.hex());
  };
  if (block.height < tip) {
    flag(*self.ledger->block(block.height));
    return;
  }
  if (block.height > tip) {
    auto [it, inserted] = self.future.emplace(block.height, block);
    if (!inserted)
      flag(it->second);
    if (!self.last_request_ms ||
        now_ms_ >= *self.last_request_ms + options_.sync_interval_ms / 2)
      sync(self.config.node_id);
    return;
  }
  if (!try_append(self, block))
    return;
  while (!self.future.empty()) {
    auto it = self.future.begin();
    if (it->first > self.ledger->height())
      break;
    Block next = std::move(it->second);
    self.future.erase(it);
    if (next.height < self.ledger->height()) {
      if (self.ledger->block(next.height)->block_hash != next.block_hash &&
          self.flagged.insert(next.height).second)
        alert(self, AlertKind::Equivocation, next.height,
              "conflicting orderer-signed block buffered");
      continue;
    }
    if (!try_append(self, next))
      break;
  }
}

void Network::sync(const std::string &id) {
  if (id == orderer_id_)
    return;
  auto &self = node(id);
  self.last_request_ms = now_ms_;
  ByteWriter w;
  w.u64(self.ledger->height());
  send(self, orderer_id_, MessageKind::BlockRequest, std::move(w).take());
}

void Network::sync_tick(const std::string &id) {
  sync(id);
  post(now_ms_ + options_.sync_interval_ms, [this, id] { sync_tick(id); });
}

SubmitAck Network::submit_proposal(const std::string &client,
                                   const Transaction &tx) {
  auto &self = node(client);
  auto state = self.ledger->snapshot();
  SubmitAck ack;
  ack.tx_id = tx.tx_id;
  auto reject = [&](ErrorCode code, std::string detail) {
    ack.status = SubmitStatus::Rejected;
    ack.error = code;
    ack.detail = std::move(detail);
    return ack;
  };
  if (tx.kind == TxKind::Genesis)
    return reject(ErrorCode::InvalidArgument, "GENESIS cannot be submitted");
  if (tx.compute_id(state->hash_algorithm()) != tx.tx_id)
    return reject(ErrorCode::IntegrityError, "tx id does not match contents");
  const auto *cert = state->find_participant(tx.submitter);
  if (!cert)
    return reject(ErrorCode::PermissionDenied, "submitter not enrolled");
  if (!verify(anchor_, *cert, tx.proposal, tx.submitter_signature.view(),
              now()))
    return reject(ErrorCode::PermissionDenied, "submitter signature invalid");
  try {
    (void)tx.decoded();
  } catch (const Error &e) {
    return reject(ErrorCode::Malformed, e.what());
  }
  if (self.ledger->find_tx(tx.tx_id) || self.outbox.contains(tx.tx_id)) {
    ack.status = SubmitStatus::Duplicate;
    return ack;
  }
  self.outbox.emplace(tx.tx_id, tx);
  if (client == orderer_id_) {
    if (orderer_->enqueue(tx, *self.ledger))
      schedule_cut(now_ms_ + options_.batch_window_ms);
  } else {
    send(self, orderer_id_, MessageKind::Proposal, tx.serialize());
  }
  auto id = tx.tx_id;
  post(now_ms_ + options_.retry_interval_ms,
       [this, client, id] { retry_outbox(client, id, 1); });
  return ack;
}

void Network::retry_outbox(const std::string &client, Digest tx_id,
                           std::uint32_t attempt) {
  auto &self = node(client);
  auto it = self.outbox.find(tx_id);
  if (it == self.outbox.end())
    return;
  auto finish = [&](std::string status) {
    auto o = outcome_by_tx_.find(tx_id);
    if (o != outcome_by_tx_.end())
      outcomes_[o->second].status = std::move(status);
    self.outbox.erase(it);
  };
  if (auto r = orderer_->rejections().find(tx_id);
      r != orderer_->rejections().end()) {
    finish("rejected: " + std::string(to_string(r->second.code)));
    return;
  }
  if (attempt >= options_.max_attempts) {
    finish("abandoned");
    return;
  }
  if (client == orderer_id_) {
    if (orderer_->enqueue(it->second, *self.ledger))
      schedule_cut(now_ms_ + options_.batch_window_ms);
  } else {
    send(self, orderer_id_, MessageKind::Proposal, it->second.serialize());
  }
  post(now_ms_ + options_.retry_interval_ms,
       [this, client, tx_id, attempt] { retry_outbox(client, tx_id, attempt + 1); });
}

void Network::schedule(const ScheduledIntent &item) {
  (void)node(item.node);
  if (item.intent.kind == IntentKind::Transfer)
    (void)node(item.intent.to);
  outcomes_.push_back({item.node, item.intent, std::nullopt, false, "scheduled"});
  ++pending_intents_;
  auto idx = outcomes_.size() - 1;
  post(item.at_ms, [this, idx] { attempt_intent(idx, 0); });
}

void Network::attempt_intent(std::size_t idx, std::uint32_t attempt) {
  auto &out = outcomes_[idx];
  auto &self = node(out.node);
  auto state = self.ledger->snapshot();
  const auto &in = out.intent;
  const auto ts = now();
  std::optional<Transaction> tx;
  std::optional<ErrorCode> err;
  try {
    switch (in.kind) {
    case IntentKind::Create:
      tx = chaincode::create_evidence(*state, self.participant, self.key,
                                      label_id(in.label), in.dsc, ts,
                                      in.device_type, ts);
      break;
    case IntentKind::Transfer:
      tx = chaincode::transfer_ownership(
          *state, self.participant, self.key, label_id(in.label),
          node(in.to).participant.address, ts, in.dsc);
      break;
    case IntentKind::Erase:
      tx = chaincode::erase_evidence(*state, self.participant, self.key,
                                     label_id(in.label), ts);
      break;
    case IntentKind::Access:
      tx = chaincode::get_evidence(*state, self.participant, self.key,
                                   label_id(in.label), ts)
               .access_tx;
      break;
    case IntentKind::RegisterDevice:
      tx = chaincode::register_device_state(
          *state, self.participant, self.key, in.label,
          hash(as_bytes("firmware:" + in.label + ":" + in.dsc)),
          hash(as_bytes("config:" + in.label + ":" + in.device_type)), ts);
      break;
    }
  } catch (const Error &e) {
    err = e.code();
  }
  if (!tx) {
    bool retryable = *err == ErrorCode::NotFound ||
                     *err == ErrorCode::PermissionDenied;
    if (retryable && attempt + 1 < options_.max_attempts) {
      post(now_ms_ + options_.retry_interval_ms,
           [this, idx, attempt] { attempt_intent(idx, attempt + 1); });
      return;
    }
    out.status = "failed: " + std::string(to_string(*err));
    --pending_intents_;
    return;
  }
  auto ack = submit_proposal(out.node, *tx);
  out.tx_id = tx->tx_id;
  outcome_by_tx_.emplace(tx->tx_id, idx);
  switch (ack.status) {
  case SubmitStatus::Accepted:
    out.status = "submitted";
    break;
  case SubmitStatus::Duplicate:
    out.status = "duplicate";
    break;
  case SubmitStatus::Rejected:
    out.status = "rejected: " + ack.detail;
    break;
  }
  --pending_intents_;
}

void Network::schedule_fault(const ScheduledFault &item) {
  post(item.at_ms, [this, fault = item.fault] { inject_fault(fault); });
}

void Network::inject_fault(const Fault &fault) {
  fault_log_.push_back({now_ms_, fault});
  switch (fault.kind) {
  case FaultKind::Drop:
    if (!(fault.rate >= 0.0 && fault.rate <= 1.0))
      spec_error("drop rate outside [0,1]");
    node(fault.node).drop_rate = fault.rate;
    break;
  case FaultKind::Delay:
    node(fault.node).extra_delay_ms = fault.delay_ms;
    break;
  case FaultKind::Partition:
    for (auto &[id, n] : nodes_) {
      auto g = fault.groups.find(id);
      n->group = g == fault.groups.end() ? 0 : g->second;
    }
    break;
  case FaultKind::Heal:
    for (auto &[_, n] : nodes_)
      n->group = 0;
    break;
  case FaultKind::TamperBlock: {
    auto &n = node(fault.node);
    if (fault.height >= n.store->size())
      spec_error("TAMPER_BLOCK height beyond the chain of " + fault.node);
    auto len = n.store->read(fault.height).size();
    n.store->mutate(fault.height, fault.offset % len, 0x01);
    n.tampered = true;
    break;
  }
  case FaultKind::Equivocate:
    equivocate(fault);
    break;
  }
}

void Network::equivocate(const Fault &fault) {
  auto &ord = node(orderer_id_);
  auto tip = ord.ledger->latest();
  if (!tip || tip->height == 0)
    return;
  auto prev = ord.ledger->block(tip->height - 1);
  auto alg = ord.ledger->snapshot()->hash_algorithm();
  auto twin = seal_block(tip->height, prev->block_hash, tip->timestamp + 1,
                         tip->txs, ord.participant.address, ord.key, alg);
  auto payload = twin.serialize();
  std::vector<std::string> targets = fault.targets;
  if (targets.empty())
    for (const auto &[id, _] : nodes_)
      if (id != orderer_id_)
        targets.push_back(id);
  for (const auto &t : targets)
    send(ord, t, MessageKind::BlockAnnounce, payload);
}

void Network::run_until(std::uint64_t t_ms) {
  while (!events_.empty() && events_.top().at <= t_ms) {
    auto ev = events_.top();
    events_.pop();
    now_ms_ = ev.at;
    ev.action();
  }
  now_ms_ = std::max(now_ms_, t_ms);
}

void Network::run_for(std::uint64_t ms) { run_until(now_ms_ + ms); }

bool Network::run_until_quiescent(std::uint64_t max_ms) {
  const auto deadline = now_ms_ + max_ms;
  while (!quiescent()) {
    if (events_.empty() || events_.top().at > deadline) {
      now_ms_ = deadline;
      return quiescent();
    }
    auto ev = events_.top();
    events_.pop();
    now_ms_ = ev.at;
    ev.action();
  }
  return true;
}

bool Network::reachable(const Node &n) const {
  const auto &ord = node(orderer_id_);
  return n.group == ord.group && n.drop_rate < 1.0 && ord.drop_rate < 1.0;
}

bool Network::quiescent() const {
  if (in_flight_ != 0 || pending_intents_ != 0 || cut_scheduled_ ||
      orderer_->pending() != 0)
    return false;
  const auto height = node(orderer_id_).ledger->height();
  for (const auto &[id, n] : nodes_) {
    if (n->tampered || !reachable(*n))
      continue;
    if (n->ledger->height() != height)
      return false;
    for (const auto &[tx_id, _] : n->outbox)
      if (!orderer_->rejections().contains(tx_id))
        return false;
  }
  return true;
}

bool Network::honest(const std::string &id) const { return !node(id).tampered; }

std::vector<std::string> Network::honest_nodes() const {
  std::vector<std::string> out;
  for (const auto &[id, n] : nodes_)
    if (!n->tampered)
      out.push_back(id);
  return out;
}

bool Network::chains_identical() const {
  const Node *ref = nullptr;
  for (const auto &[_, n] : nodes_) {
    if (n->tampered)
      continue;
    if (!ref) {
      ref = n.get();
      continue;
    }
    if (n->store->size() != ref->store->size())
      return false;
    for (std::uint64_t h = 0; h < n->store->size(); ++h)
      if (n->store->read(h) != ref->store->read(h))
        return false;
  }
  return true;
}

bool Network::common_prefix() const {
  std::vector<const Node *> honest;
  for (const auto &[_, n] : nodes_)
    if (!n->tampered)
      honest.push_back(n.get());
  for (std::size_t i = 0; i < honest.size(); ++i)
    for (std::size_t j = i + 1; j < honest.size(); ++j) {
      auto common = std::min(honest[i]->store->size(), honest[j]->store->size());
      for (std::uint64_t h = 0; h < common; ++h)
        if (honest[i]->store->read(h) != honest[j]->store->read(h))
          return false;
    }
  return true;
}

bool Network::persistence() const {
  const auto &ord = *node(orderer_id_).ledger;
  const auto height = ord.height();
  // depth >= 1: at least one block on top.
  if (height < 2)
    return true;
  for (const auto &block : ord.blocks(1, height - 1))
    for (std::size_t i = 0; i < block.txs.size(); ++i)
      for (const auto &[_, n] : nodes_) {
        if (n->tampered || n->ledger->height() <= block.height)
          continue;
        auto loc = n->ledger->find_tx(block.txs[i].tx_id);
        if (!loc || loc->height != block.height || loc->index != i)
          return false;
      }
  return true;
}

// ---- scenarios ----------------------------------------------------------

std::vector<ScheduledIntent>
generate_custody_workload(const std::vector<NodeConfig> &nodes,
                          std::size_t transactions, std::uint64_t seed,
                          std::uint64_t spread_ms) {
  std::vector<std::string> isps, leas, prosecutors;
  for (const auto &n : nodes) {
    if (n.is_orderer)
      continue;
    switch (n.role) {
    case Role::Isp:
      isps.push_back(n.node_id);
      break;
    case Role::Lea:
      leas.push_back(n.node_id);
      break;
    case Role::Prosecutor:
      prosecutors.push_back(n.node_id);
      break;
    }
  }
  if (isps.empty())
    spec_error("custody workload needs at least one ISP node");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint64_t> start(0, spread_ms);
  auto pick = [&](const std::vector<std::string> &v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  std::vector<ScheduledIntent> out;
  for (std::size_t chain = 0; out.size() < transactions; ++chain) {
    auto label = "ev-" + std::to_string(seed) + "-" + std::to_string(chain);
    auto t = start(rng);
    auto isp = pick(isps);
    out.push_back({t, isp,
                   {IntentKind::Create, label, {}, "incident " + label, "camera"}});
    if (out.size() >= transactions || leas.empty())
      continue;
    auto lea = pick(leas);
    out.push_back({t + 50, isp, {IntentKind::Transfer, label, lea, {}, {}}});
    if (out.size() >= transactions || prosecutors.empty())
      continue;
    out.push_back({t + 100, lea,
                   {IntentKind::Transfer, label, pick(prosecutors),
                    "case file " + label, {}}});
  }
  return out;
}

namespace {

using nlohmann::json;

template <class T> T get_or(const json &j, const char *key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

Fault parse_fault(const json &j) {
  Fault f;
  f.kind = parse_fault_kind(j.at("kind").get<std::string>());
  f.node = get_or<std::string>(j, "node", {});
  f.rate = get_or<double>(j, "rate", 1.0);
  f.delay_ms = get_or<std::uint32_t>(j, "delay_ms", 0);
  if (auto g = j.find("groups"); g != j.end())
    f.groups = g->get<std::map<std::string, int>>();
  f.height = get_or<std::uint64_t>(j, "height", 0);
  f.offset = get_or<std::size_t>(j, "offset", 0);
  f.targets = get_or<std::vector<std::string>>(j, "targets", {});
  return f;
}

} // namespace

NetworkScenario parse_network_scenario(std::string_view text) {
  NetworkScenario sc;
  try {
    auto j = json::parse(text);
    if (!j.contains("seed"))
      spec_error("network scenario needs a seed");
    auto &o = sc.options;
    o.seed = j.at("seed").get<std::uint64_t>();
    if (auto opt = j.find("options"); opt != j.end()) {
      o.batch_window_ms = get_or(*opt, "batch_window_ms", o.batch_window_ms);
      o.max_batch = get_or(*opt, "max_batch", o.max_batch);
      o.sync_interval_ms = get_or(*opt, "sync_interval_ms", o.sync_interval_ms);
      o.retry_interval_ms =
          get_or(*opt, "retry_interval_ms", o.retry_interval_ms);
      o.max_attempts = get_or(*opt, "max_attempts", o.max_attempts);
      o.epoch = get_or(*opt, "epoch", o.epoch);
      if (opt->contains("hash"))
        o.hash = parse_hash_algorithm(opt->at("hash").get<std::string>());
      if (auto p = opt->find("policy"); p != opt->end()) {
        o.policy.allow_prosecutor_transfer = get_or(
            *p, "allow_prosecutor_transfer", o.policy.allow_prosecutor_transfer);
        o.policy.allow_isp_to_isp =
            get_or(*p, "allow_isp_to_isp", o.policy.allow_isp_to_isp);
        auto mode = get_or<std::string>(*p, "metadata_access", "open");
        if (mode == "open")
          o.policy.metadata_access = MetadataAccess::Open;
        else if (mode == "owner_only")
          o.policy.metadata_access = MetadataAccess::OwnerOnly;
        else
          spec_error("unknown metadata_access " + mode);
      }
    }
    for (const auto &n : j.at("nodes")) {
      NodeConfig c;
      c.node_id = n.at("id").get<std::string>();
      c.role = parse_role(get_or<std::string>(n, "role", "ISP"));
      c.is_orderer = get_or(n, "orderer", false);
      if (auto l = n.find("latency"); l != n.end()) {
        c.latency.min_ms = l->at(0).get<std::uint32_t>();
        c.latency.max_ms = l->at(1).get<std::uint32_t>();
      }
      c.drop_rate = get_or(n, "drop_rate", 0.0);
      c.partition_group = get_or(n, "partition_group", 0);
      c.validate();
      sc.nodes.push_back(std::move(c));
    }
    for (const auto &i : get_or<json>(j, "intents", json::array())) {
      ScheduledIntent s;
      s.at_ms = i.at("at_ms").get<std::uint64_t>();
      s.node = i.at("node").get<std::string>();
      s.intent.kind = parse_intent_kind(i.at("kind").get<std::string>());
      s.intent.label = i.at("label").get<std::string>();
      s.intent.to = get_or<std::string>(i, "to", {});
      s.intent.dsc = get_or<std::string>(i, "dsc", {});
      s.intent.device_type = get_or<std::string>(i, "device_type", {});
      sc.intents.push_back(std::move(s));
    }
    if (auto w = j.find("workload"); w != j.end()) {
      auto extra = generate_custody_workload(
          sc.nodes, w->at("transactions").get<std::size_t>(), o.seed,
          get_or<std::uint64_t>(*w, "spread_ms", 10'000));
      sc.intents.insert(sc.intents.end(), extra.begin(), extra.end());
    }
    for (const auto &f : get_or<json>(j, "faults", json::array()))
      sc.faults.push_back({f.at("at_ms").get<std::uint64_t>(), parse_fault(f)});
    sc.run_ms = get_or(j, "run_ms", sc.run_ms);
    sc.settle_ms = get_or(j, "settle_ms", sc.settle_ms);
  } catch (const json::exception &e) {
    spec_error(std::string("malformed network scenario: ") + e.what());
  }
  return sc;
}

NetworkScenario load_network_scenario(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_network_scenario(ss.str());
}

NetworkReport run_network_scenario(const NetworkScenario &scenario) {
  Network net(scenario.options, scenario.nodes);
  for (const auto &i : scenario.intents)
    net.schedule(i);
  for (const auto &f : scenario.faults)
    net.schedule_fault(f);
  net.run_until(scenario.run_ms);
  NetworkReport r;
  r.seed = scenario.options.seed;
  r.quiescent = net.run_until_quiescent(scenario.settle_ms);
  r.chains_identical = net.chains_identical();
  r.common_prefix = net.common_prefix();
  r.persistence = net.persistence();
  for (const auto &id : net.node_ids())
    r.heights[id] = net.ledger(id).height();
  for (const auto &b : net.ledger(net.orderer_id()).blocks(
           1, net.ledger(net.orderer_id()).height()))
    r.committed_txs += b.txs.size();
  r.rejected_txs = net.rejections().size();
  r.alerts = net.alerts();
  r.sim_ms = net.now_ms();
  r.stats = net.stats();
  return r;
}

} // namespace ctb::net
