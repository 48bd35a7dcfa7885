#include <filesystem>
#include <random>

#include <benchmark/benchmark.h>

#include "ctb/block.hpp"
#include "ctb/chaincode.hpp"
#include "ctb/evidence_store.hpp"
#include "ctb/ledger.hpp"
#include "ctb/network.hpp"

namespace {

using namespace ctb;
namespace fs = std::filesystem;

constexpr Timestamp kT0 = 1'700'000'000;

Seed seed(const std::string &label) {
  return Seed::from(hash(as_bytes("bench/" + label)).view());
}

Bytes random_bytes(std::size_t n, std::uint64_t s = 1) {
  std::mt19937_64 rng(s);
  Bytes b(n);
  for (auto &x : b)
    x = static_cast<std::uint8_t>(rng());
  return b;
}

fs::path scratch(const std::string &tag) {
  std::random_device rd;
  auto p = fs::temp_directory_path() /
           ("ctb-bench-" + tag + "-" + std::to_string(rd()));
  fs::create_directories(p);
  return p;
}

/// CA, orderer and one ISP on a genesis-only ledger.
struct World {
  CertificateAuthority ca = CertificateAuthority::init(seed("ca"));
  Enrollment orderer = ca.enroll(Role::Isp, kT0, seed("orderer"));
  Enrollment isp = ca.enroll(Role::Isp, kT0, seed("isp"));
  Enrollment lea = ca.enroll(Role::Lea, kT0, seed("lea"));

  Block genesis() const {
    GenesisProposal g;
    g.ca_root = ca.root_public_key();
    g.orderer = orderer.participant.address;
    g.issued_at = kT0;
    g.roster = {orderer.participant.cert, isp.participant.cert,
                lea.participant.cert};
    return make_genesis(g, orderer.key, kT0);
  }

  std::uint64_t n = 0;

  /// Appends `blocks` blocks of `per_block` CREATEs each.
  void fill(Ledger &l, std::size_t blocks, std::size_t per_block) {
    while (blocks-- > 0) {
      auto st = l.snapshot();
      Timestamp t = kT0 + static_cast<Timestamp>(l.height());
      std::vector<Transaction> txs;
      for (std::size_t i = 0; i < per_block; ++i, ++n)
        txs.push_back(chaincode::create_evidence(
            *st, isp.participant, isp.key,
            hash(as_bytes("ev" + std::to_string(n))), "bench", t, "camera",
            t));
      l.append_block(seal_block(l.height(), *l.tip_hash(), t, std::move(txs),
                                orderer.participant.address, orderer.key,
                                HashAlgorithm::Sha256));
    }
  }
};

void BM_Hash(benchmark::State &state, HashAlgorithm alg) {
  auto data = random_bytes(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(hash(data, alg));
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK_CAPTURE(BM_Hash, sha256, HashAlgorithm::Sha256)
    ->Arg(64)->Arg(4096)->Arg(1 << 20);
BENCHMARK_CAPTURE(BM_Hash, blake2b, HashAlgorithm::Blake2b256)
    ->Arg(64)->Arg(4096)->Arg(1 << 20);

void BM_SignVerify(benchmark::State &state) {
  World w;
  auto msg = random_bytes(256);
  for (auto _ : state) {
    auto sig = w.isp.key.sign(msg);
    benchmark::DoNotOptimize(
        verify_signature(w.isp.participant.public_key, msg, sig.view()));
  }
}
BENCHMARK(BM_SignVerify);

void BM_MerkleRoot(benchmark::State &state) {
  std::vector<Digest> leaves;
  for (std::int64_t i = 0; i < state.range(0); ++i)
    leaves.push_back(hash(as_bytes(std::to_string(i))));
  for (auto _ : state)
    benchmark::DoNotOptimize(merkle_root(leaves, HashAlgorithm::Sha256));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MerkleRoot)->RangeMultiplier(4)->Range(1, 4096);

void BM_EvGen(benchmark::State &state) {
  World w;
  auto dir = scratch("evgen");
  {
    EvidenceStore store(dir, {}, [] { return kT0; });
    auto payload = random_bytes(static_cast<std::size_t>(state.range(0)));
    IncidentDescriptor inc{AttackKind::Ddos, "cam-01", "198.51.100.7", kT0,
                           "syn flood", "ip-camera"};
    for (auto _ : state)
      benchmark::DoNotOptimize(
          store.ev_gen(w.isp.participant, w.isp.key, payload, inc));
    state.SetBytesProcessed(state.iterations() * state.range(0));
  }
  fs::remove_all(dir);
}
BENCHMARK(BM_EvGen)->Arg(1024)->Arg(64 * 1024)->Unit(benchmark::kMicrosecond);

void BM_AppendBlock(benchmark::State &state) {
  World w;
  auto per_block = static_cast<std::size_t>(state.range(0));
  auto ledger = Ledger::in_memory();
  ledger->append_block(w.genesis());
  for (auto _ : state)
    w.fill(*ledger, 1, per_block);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AppendBlock)->Arg(1)->Arg(16)->Arg(128)
    ->Unit(benchmark::kMicrosecond);

void BM_VerifyChain(benchmark::State &state) {
  World w;
  auto dir = scratch("verify");
  {
    auto ledger = Ledger::open(dir);
    ledger->append_block(w.genesis());
    w.fill(*ledger, static_cast<std::size_t>(state.range(0)), 4);
    for (auto _ : state)
      benchmark::DoNotOptimize(verify_chain(ledger->store()));
    state.SetItemsProcessed(state.iterations() * state.range(0));
  }
  fs::remove_all(dir);
}
BENCHMARK(BM_VerifyChain)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Replay(benchmark::State &state) {
  World w;
  auto ledger = Ledger::in_memory();
  ledger->append_block(w.genesis());
  w.fill(*ledger, static_cast<std::size_t>(state.range(0)), 4);
  auto blocks = ledger->blocks(0, ledger->height());
  for (auto _ : state)
    benchmark::DoNotOptimize(replay(blocks));
}
BENCHMARK(BM_Replay)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_NetworkScenario(benchmark::State &state) {
  std::vector<net::NodeConfig> nodes(5);
  const char *names[] = {"orderer", "isp-a", "isp-b", "lea", "prosecutor"};
  const Role roles[] = {Role::Isp, Role::Isp, Role::Isp, Role::Lea,
                        Role::Prosecutor};
  for (int i = 0; i < 5; ++i) {
    nodes[i].node_id = names[i];
    nodes[i].role = roles[i];
  }
  nodes[0].is_orderer = true;
  net::NetworkScenario sc;
  sc.nodes = nodes;
  sc.intents = net::generate_custody_workload(
      nodes, static_cast<std::size_t>(state.range(0)), 7, 10'000);
  sc.run_ms = 12'000;
  sc.settle_ms = 60'000;
  for (auto _ : state)
    benchmark::DoNotOptimize(net::run_network_scenario(sc));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NetworkScenario)->Arg(50)->Arg(200)
    ->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
