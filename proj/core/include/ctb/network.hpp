#pragma once

// Simulated permissioned network: ISP peers, LEA and prosecutor nodes and a
// single ordering node, exchanging signed messages over an in-process
// transport with seeded latency, drops and partitions.
//
// Every node keeps a full replica of the ledger and validates every block
// it appends. The orderer batches proposals FIFO; peers learn blocks from
// announcements and from periodic sync requests. Time is simulated in
// milliseconds; block timestamps are epoch + now_ms / 1000.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ctb/ledger.hpp"
#include "ctb/orderer.hpp"

namespace ctb::net {

struct LatencyModel {
  std::uint32_t min_ms = 5;
  std::uint32_t max_ms = 25;
};

struct NodeConfig {
  std::string node_id;
  Role role = Role::Isp;
  bool is_orderer = false;
  LatencyModel latency;
  /// Probability that a message addressed to this node is lost.
  double drop_rate = 0.0;
  int partition_group = 0;

  /// Throws SpecError on an out-of-range field.
  void validate() const;
};

enum class MessageKind : std::uint8_t {
  Proposal = 1,
  BlockAnnounce = 2,
  BlockRequest = 3,
  BlockResponse = 4,
};

std::string_view to_string(MessageKind kind);

struct Message {
  MessageKind kind = MessageKind::Proposal;
  Bytes payload;
  Address sender;
  Signature signature;

  Bytes signing_bytes() const;
};

enum class FaultKind { Drop, Delay, Partition, Heal, TamperBlock, Equivocate };

std::string_view to_string(FaultKind kind);
FaultKind parse_fault_kind(std::string_view name);

struct Fault {
  FaultKind kind = FaultKind::Drop;
  /// Affected node (DROP, DELAY, TAMPER_BLOCK).
  std::string node;
  double rate = 1.0;
  std::uint32_t delay_ms = 0;
  /// PARTITION: node -> group; unlisted nodes stay in group 0.
  std::map<std::string, int> groups;
  /// TAMPER_BLOCK: height and byte offset in the stored record.
  std::uint64_t height = 0;
  std::size_t offset = 0;
  /// EQUIVOCATE: receivers of the conflicting block (empty = all peers).
  std::vector<std::string> targets;
};

enum class AlertKind { Equivocation, InvalidBlock, ForgedBlock, BadMessage };

std::string_view to_string(AlertKind kind);

struct Alert {
  std::uint64_t at_ms = 0;
  std::string node;
  AlertKind kind = AlertKind::InvalidBlock;
  std::uint64_t height = 0;
  std::string detail;
};

struct FaultLogEntry {
  std::uint64_t at_ms = 0;
  Fault fault;
};

struct NetworkOptions {
  std::uint64_t seed = 1;
  std::uint32_t batch_window_ms = 100;
  std::size_t max_batch = 10;
  std::uint32_t sync_interval_ms = 250;
  std::uint32_t retry_interval_ms = 500;
  std::uint32_t max_attempts = 120;
  Timestamp epoch = 1'700'000'000;
  ChaincodePolicy policy;
  HashAlgorithm hash = HashAlgorithm::Sha256;
};

enum class SubmitStatus { Accepted, Duplicate, Rejected };

struct SubmitAck {
  SubmitStatus status = SubmitStatus::Accepted;
  Digest tx_id;
  std::optional<ErrorCode> error;
  std::string detail;
};

/// Client-side intent executed by a node once its local view allows it.
enum class IntentKind { Create, Transfer, Erase, Access, RegisterDevice };

std::string_view to_string(IntentKind kind);
IntentKind parse_intent_kind(std::string_view name);

struct Intent {
  IntentKind kind = IntentKind::Create;
  /// Evidence label (Create/Transfer/Erase/Access) or device id.
  std::string label;
  /// Transfer recipient node id.
  std::string to;
  std::string dsc;
  std::string device_type;
};

struct ScheduledIntent {
  std::uint64_t at_ms = 0;
  std::string node;
  Intent intent;
};

struct ScheduledFault {
  std::uint64_t at_ms = 0;
  Fault fault;
};

/// Deterministic evidence id for a scripted label.
Digest label_id(const std::string &label);

struct IntentOutcome {
  std::string node;
  Intent intent;
  std::optional<Digest> tx_id;
  bool committed = false;
  std::string status;
};

class Network {
public:
  Network(NetworkOptions options, std::vector<NodeConfig> nodes);
  ~Network();

  Network(const Network &) = delete;
  Network &operator=(const Network &) = delete;

  std::vector<std::string> node_ids() const;
  const std::string &orderer_id() const { return orderer_id_; }
  const Participant &participant(const std::string &node) const;
  const SigningKey &signing_key(const std::string &node) const;
  const Ledger &ledger(const std::string &node) const;
  const TrustAnchor &anchor() const { return anchor_; }

  std::uint64_t now_ms() const { return now_ms_; }
  Timestamp now() const;

  /// First hop: signature and id are checked at the submitting node, then
  /// the proposal travels to the orderer and is retried until the client
  /// sees it on its own chain.
  SubmitAck submit_proposal(const std::string &client, const Transaction &tx);

  void schedule(const ScheduledIntent &item);
  void schedule_fault(const ScheduledFault &item);
  void inject_fault(const Fault &fault);
  /// Ask the orderer for every block above the node's tip.
  void sync(const std::string &node);

  void run_for(std::uint64_t ms);
  void run_until(std::uint64_t t_ms);
  /// Runs until quiescent() or until `max_ms` of simulated time elapsed.
  bool run_until_quiescent(std::uint64_t max_ms);
  /// No messages in flight, no pending proposals or intents, and every
  /// honest reachable node at the orderer's height.
  bool quiescent() const;

  bool honest(const std::string &node) const;
  std::vector<std::string> honest_nodes() const;
  /// Block records of all honest nodes are bit-identical.
  bool chains_identical() const;
  /// Each pair of honest chains agrees on their common length.
  bool common_prefix() const;
  /// Every transaction on the orderer's chain sits at the same height and
  /// position on every honest node.
  bool persistence() const;

  const std::vector<Alert> &alerts() const { return alerts_; }
  const std::vector<FaultLogEntry> &fault_log() const { return fault_log_; }
  const std::map<Digest, Rejection> &rejections() const;
  const std::vector<IntentOutcome> &outcomes() const { return outcomes_; }

  struct Stats {
    std::uint64_t sent = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
    std::uint64_t partitioned = 0;
  };
  const Stats &stats() const { return stats_; }

private:
  struct Node;
  struct Event {
    std::uint64_t at = 0;
    std::uint64_t seq = 0;
    std::function<void()> action;
    bool operator>(const Event &o) const {
      return at != o.at ? at > o.at : seq > o.seq;
    }
  };

  Node &node(const std::string &id);
  const Node &node(const std::string &id) const;
  void post(std::uint64_t at, std::function<void()> action);
  void send(Node &from, const std::string &to, MessageKind kind, Bytes payload);
  void deliver(const std::string &to, const Message &msg);
  void on_proposal(Node &self, const Message &msg);
  void on_block(Node &self, const Block &block);
  bool try_append(Node &self, const Block &block);
  void on_block_request(Node &self, const Message &msg);
  void schedule_cut(std::uint64_t at);
  void cut();
  void sync_tick(const std::string &node);
  void attempt_intent(std::size_t outcome_index, std::uint32_t attempt);
  void retry_outbox(const std::string &node, Digest tx_id,
                    std::uint32_t attempt);
  void alert(const Node &node, AlertKind kind, std::uint64_t height,
             std::string detail);
  void equivocate(const Fault &fault);
  bool reachable(const Node &n) const;

  NetworkOptions options_;
  std::mt19937_64 rng_;
  TrustAnchor anchor_;
  std::map<std::string, std::unique_ptr<Node>> nodes_;
  std::map<Address, std::string> by_address_;
  std::string orderer_id_;
  std::unique_ptr<Orderer> orderer_;
  bool cut_scheduled_ = false;

  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t seq_ = 0;
  std::uint64_t now_ms_ = 0;
  std::uint64_t in_flight_ = 0;
  std::uint64_t pending_intents_ = 0;

  std::vector<Alert> alerts_;
  std::vector<FaultLogEntry> fault_log_;
  std::vector<IntentOutcome> outcomes_;
  std::map<Digest, std::size_t> outcome_by_tx_;
  Stats stats_;
};

/// Scenario file: nodes, options, scripted intents and timed faults.
struct NetworkScenario {
  NetworkOptions options;
  std::vector<NodeConfig> nodes;
  std::vector<ScheduledIntent> intents;
  std::vector<ScheduledFault> faults;
  /// Faults stop and partitions heal by this time; then the run settles.
  std::uint64_t run_ms = 30'000;
  std::uint64_t settle_ms = 120'000;
};

NetworkScenario parse_network_scenario(std::string_view text);
NetworkScenario load_network_scenario(const std::filesystem::path &path);

/// ISP creates evidence, hands it to an LEA, the LEA hands it on to a
/// prosecutor; repeated until `transactions` intents are scheduled.
std::vector<ScheduledIntent>
generate_custody_workload(const std::vector<NodeConfig> &nodes,
                          std::size_t transactions, std::uint64_t seed,
                          std::uint64_t spread_ms);

struct NetworkReport {
  std::uint64_t seed = 0;
  bool quiescent = false;
  bool chains_identical = false;
  bool common_prefix = false;
  bool persistence = false;
  std::map<std::string, std::uint64_t> heights;
  std::uint64_t committed_txs = 0;
  std::uint64_t rejected_txs = 0;
  std::vector<Alert> alerts;
  std::uint64_t sim_ms = 0;
  Network::Stats stats;
};

NetworkReport run_network_scenario(const NetworkScenario &scenario);

} // namespace ctb::net
