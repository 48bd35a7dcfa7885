#include <gtest/gtest.h>

#include "ctb/network.hpp"
#include "fixture.hpp"

namespace ctb::net {
namespace {

using testkit::kEpoch;
using testkit::label_digest;
using testkit::TestChain;

NodeConfig node(std::string id, Role role, bool orderer = false) {
  NodeConfig c;
  c.node_id = std::move(id);
  c.role = role;
  c.is_orderer = orderer;
  return c;
}

std::vector<NodeConfig> five_nodes() {
  return {node("orderer", Role::Isp, true), node("isp-a", Role::Isp),
          node("isp-b", Role::Isp), node("lea", Role::Lea),
          node("prosecutor", Role::Prosecutor)};
}

Transaction create_tx(const Network &net, const std::string &isp,
                      const std::string &label) {
  const auto &p = net.participant(isp);
  return make_transaction(CreateProposal{label_id(label), p.address,
                                         "evidence " + label, net.now(),
                                         p.address, "camera", net.now(),
                                         net.now()},
                          p.address, net.signing_key(isp));
}

std::size_t occurrences(const Ledger &l, const Digest &tx_id) {
  std::size_t n = 0;
  for (const auto &b : l.blocks(0, l.height()))
    for (const auto &tx : b.txs)
      n += tx.tx_id == tx_id;
  return n;
}

TEST(Orderer, FifoBatchesOfTwo) {
  TestChain chain;
  Orderer ord(chain.addr("orderer"), chain.key("orderer"));
  std::vector<Digest> ids;
  for (int i = 0; i < 5; ++i) {
    auto tx = chain.sign("isp1", CreateProposal{label_digest("o" + std::to_string(i)),
                                                chain.addr("isp1"), "d", kEpoch,
                                                chain.addr("isp1"), "camera",
                                                kEpoch, kEpoch + i});
    ids.push_back(tx.tx_id);
    EXPECT_TRUE(ord.enqueue(tx, chain.ledger()));
    EXPECT_FALSE(ord.enqueue(tx, chain.ledger()));
  }
  std::vector<std::size_t> sizes;
  std::vector<Digest> order;
  Timestamp t = kEpoch + 10;
  while (auto b = ord.cut(chain.ledger(), t++, 2)) {
    sizes.push_back(b->txs.size());
    for (const auto &tx : b->txs)
      order.push_back(tx.tx_id);
    chain.ledger().append_block(*b);
  }
  EXPECT_EQ(sizes, (std::vector<std::size_t>{2, 2, 1}));
  EXPECT_EQ(order, ids);
  EXPECT_EQ(ord.pending(), 0u);
  // Nothing pending: no empty block.
  EXPECT_FALSE(ord.cut(chain.ledger(), t, 2));
}

TEST(Orderer, InvalidProposalDroppedFromBatch) {
  TestChain chain;
  Orderer ord(chain.addr("orderer"), chain.key("orderer"));
  auto bad = chain.sign("lea1", CreateProposal{label_digest("bad"),
                                               chain.addr("lea1"), "d", kEpoch,
                                               chain.addr("lea1"), "camera",
                                               kEpoch, kEpoch});
  auto good = chain.sign("isp1", CreateProposal{label_digest("good"),
                                                chain.addr("isp1"), "d", kEpoch,
                                                chain.addr("isp1"), "camera",
                                                kEpoch, kEpoch});
  ord.enqueue(bad, chain.ledger());
  ord.enqueue(good, chain.ledger());
  auto b = ord.cut(chain.ledger(), kEpoch + 1, 10);
  ASSERT_TRUE(b);
  ASSERT_EQ(b->txs.size(), 1u);
  EXPECT_EQ(b->txs[0].tx_id, good.tx_id);
  ASSERT_TRUE(ord.rejections().contains(bad.tx_id));
  EXPECT_EQ(ord.rejections().at(bad.tx_id).code, ErrorCode::PermissionDenied);
  // Two txs that conflict inside one window: only the first survives.
  chain.ledger().append_block(*b);
  auto t1 = chain.sign("isp1", TransferProposal{label_digest("good"),
                                                chain.addr("lea1"), "", kEpoch});
  auto t2 = chain.sign("isp1", TransferProposal{label_digest("good"),
                                                chain.addr("lea2"), "", kEpoch});
  ord.enqueue(t1, chain.ledger());
  ord.enqueue(t2, chain.ledger());
  auto b2 = ord.cut(chain.ledger(), kEpoch + 2, 10);
  ASSERT_TRUE(b2);
  ASSERT_EQ(b2->txs.size(), 1u);
  EXPECT_EQ(b2->txs[0].tx_id, t1.tx_id);
}

TEST(Network, ValidProposalCommitsEverywhere) {
  Network net({}, five_nodes());
  auto tx = create_tx(net, "isp-a", "live");
  auto ack = net.submit_proposal("isp-a", tx);
  EXPECT_EQ(ack.status, SubmitStatus::Accepted);
  net.run_for(NetworkOptions{}.batch_window_ms + 200);
  EXPECT_EQ(net.ledger(net.orderer_id()).height(), 2u);
  ASSERT_TRUE(net.run_until_quiescent(10'000));
  for (const auto &n : net.node_ids())
    EXPECT_TRUE(net.ledger(n).find_tx(tx.tx_id)) << n;
  EXPECT_TRUE(net.chains_identical());
  EXPECT_TRUE(net.alerts().empty());
}

TEST(Network, DuplicateSubmissionLandsOnce) {
  Network net({}, five_nodes());
  auto tx = create_tx(net, "isp-a", "dup");
  EXPECT_EQ(net.submit_proposal("isp-a", tx).status, SubmitStatus::Accepted);
  EXPECT_EQ(net.submit_proposal("isp-a", tx).status, SubmitStatus::Duplicate);
  // Same tx relayed through another node too.
  net.submit_proposal("lea", tx);
  ASSERT_TRUE(net.run_until_quiescent(10'000));
  EXPECT_EQ(net.submit_proposal("isp-a", tx).status, SubmitStatus::Duplicate);
  ASSERT_TRUE(net.run_until_quiescent(10'000));
  for (const auto &n : net.node_ids())
    EXPECT_EQ(occurrences(net.ledger(n), tx.tx_id), 1u) << n;
}

TEST(Network, BadSignatureRejectedAtFirstHop) {
  Network net({}, five_nodes());
  auto tx = create_tx(net, "isp-a", "forged");
  tx.submitter_signature.bytes[0] ^= 0x80;
  tx.tx_id = tx.compute_id(HashAlgorithm::Sha256);
  auto ack = net.submit_proposal("isp-a", tx);
  EXPECT_EQ(ack.status, SubmitStatus::Rejected);
  EXPECT_EQ(ack.error, ErrorCode::PermissionDenied);
  net.run_for(5'000);
  for (const auto &n : net.node_ids())
    EXPECT_FALSE(net.ledger(n).find_tx(tx.tx_id));
  // A stale tx id is refused as well.
  auto tx2 = create_tx(net, "isp-a", "relabelled");
  tx2.tx_id = label_digest("other");
  EXPECT_EQ(net.submit_proposal("isp-a", tx2).error, ErrorCode::IntegrityError);
}

TEST(Network, FullDropStallsPeerThenSyncCatchesUp) {
  Network net({}, five_nodes());
  Fault drop;
  drop.kind = FaultKind::Drop;
  drop.node = "lea";
  drop.rate = 1.0;
  net.inject_fault(drop);
  for (int i = 0; i < 10; ++i) {
    net.submit_proposal("isp-a", create_tx(net, "isp-a", "d" + std::to_string(i)));
    net.run_for(1'000);
  }
  EXPECT_EQ(net.ledger(net.orderer_id()).height(), 11u);
  EXPECT_EQ(net.ledger("lea").height(), 1u);
  EXPECT_TRUE(net.common_prefix());
  drop.rate = 0.0;
  net.inject_fault(drop);
  ASSERT_TRUE(net.run_until_quiescent(30'000));
  EXPECT_EQ(net.ledger("lea").height(), 11u);
  EXPECT_TRUE(net.chains_identical());
}

TEST(Network, PartitionFreezesThenHealConverges) {
  Network net({}, five_nodes());
  Fault part;
  part.kind = FaultKind::Partition;
  part.groups = {{"lea", 1}, {"prosecutor", 1}};
  net.inject_fault(part);
  for (int i = 0; i < 5; ++i) {
    net.submit_proposal("isp-b", create_tx(net, "isp-b", "p" + std::to_string(i)));
    net.run_for(1'000);
  }
  EXPECT_EQ(net.ledger("lea").height(), 1u);
  EXPECT_EQ(net.ledger("prosecutor").height(), 1u);
  EXPECT_EQ(net.ledger("isp-a").height(), 6u);
  EXPECT_GT(net.stats().partitioned, 0u);
  Fault heal;
  heal.kind = FaultKind::Heal;
  net.inject_fault(heal);
  ASSERT_TRUE(net.run_until_quiescent(30'000));
  EXPECT_TRUE(net.chains_identical());
  EXPECT_TRUE(net.common_prefix());
  EXPECT_TRUE(net.persistence());
  EXPECT_EQ(net.fault_log().size(), 2u);
}

TEST(Network, TamperIsLocalToOnePeer) {
  Network net({}, five_nodes());
  for (int i = 0; i < 3; ++i)
    net.submit_proposal("isp-a", create_tx(net, "isp-a", "t" + std::to_string(i)));
  ASSERT_TRUE(net.run_until_quiescent(10'000));
  Fault tamper;
  tamper.kind = FaultKind::TamperBlock;
  tamper.node = "isp-b";
  tamper.height = 1;
  tamper.offset = 200;
  net.inject_fault(tamper);
  EXPECT_FALSE(verify_chain(net.ledger("isp-b").store()).valid);
  EXPECT_FALSE(net.honest("isp-b"));
  for (const auto &n : net.honest_nodes()) {
    EXPECT_NE(n, "isp-b");
    EXPECT_TRUE(verify_chain(net.ledger(n).store()).valid) << n;
  }
  EXPECT_TRUE(net.chains_identical());
}

TEST(Network, EquivocationFlaggedFirstBlockKept) {
  Network net({}, five_nodes());
  net.submit_proposal("isp-a", create_tx(net, "isp-a", "eq"));
  ASSERT_TRUE(net.run_until_quiescent(10'000));
  auto kept = net.ledger("lea").latest()->block_hash;
  Fault eq;
  eq.kind = FaultKind::Equivocate;
  net.inject_fault(eq);
  net.run_for(2'000);
  bool flagged = false;
  for (const auto &a : net.alerts())
    flagged = flagged || a.kind == AlertKind::Equivocation;
  EXPECT_TRUE(flagged);
  for (const auto &n : net.node_ids())
    EXPECT_EQ(net.ledger(n).latest()->block_hash, kept) << n;
  EXPECT_TRUE(net.chains_identical());
}

TEST(Network, SeededRunsAreReproducible) {
  auto run = [](std::uint64_t seed) {
    NetworkScenario sc;
    sc.options.seed = seed;
    sc.nodes = five_nodes();
    sc.nodes[3].drop_rate = 0.2;
    sc.intents = generate_custody_workload(sc.nodes, 40, seed, 3'000);
    sc.run_ms = 5'000;
    sc.settle_ms = 60'000;
    return run_network_scenario(sc);
  };
  auto a = run(3), b = run(3);
  EXPECT_TRUE(a.quiescent);
  EXPECT_TRUE(a.chains_identical);
  EXPECT_TRUE(a.common_prefix);
  EXPECT_TRUE(a.persistence);
  EXPECT_EQ(a.heights, b.heights);
  EXPECT_EQ(a.committed_txs, b.committed_txs);
  EXPECT_EQ(a.stats.dropped, b.stats.dropped);
  EXPECT_GT(a.stats.dropped, 0u);
}

TEST(Network, WorkloadFollowsCustodyChain) {
  auto w = generate_custody_workload(five_nodes(), 30, 9, 1'000);
  ASSERT_EQ(w.size(), 30u);
  std::map<std::string, std::vector<IntentKind>> by_label;
  for (const auto &i : w)
    by_label[i.intent.label].push_back(i.intent.kind);
  for (const auto &[label, kinds] : by_label)
    EXPECT_EQ(kinds.front(), IntentKind::Create) << label;
}

TEST(Network, ScenarioFileParses) {
  auto sc = load_network_scenario(CTB_SOURCE_DIR "/scenarios/five_nodes.json");
  EXPECT_EQ(sc.nodes.size(), 5u);
  EXPECT_EQ(sc.intents.size(), 200u);
  EXPECT_EQ(sc.faults.size(), 4u);
  EXPECT_THROW(parse_network_scenario(R"({"nodes": []})"), Error);
  EXPECT_THROW(parse_network_scenario("not json"), Error);
}

TEST(Network, FiveNodeScenarioFileHoldsProperties) {
  auto sc = load_network_scenario(CTB_SOURCE_DIR "/scenarios/five_nodes.json");
  auto r = run_network_scenario(sc);
  EXPECT_TRUE(r.quiescent);
  EXPECT_TRUE(r.chains_identical);
  EXPECT_TRUE(r.common_prefix);
  EXPECT_TRUE(r.persistence);
  EXPECT_TRUE(r.alerts.empty());
}

} // namespace
} // namespace ctb::net
