#include "fixture.hpp"

#include <atomic>
#include <random>

#include <unistd.h>

namespace ctb::testkit {

namespace fs = std::filesystem;

Seed seed_for(const std::string &label) {
  auto d = hash(as_bytes("ctb-test-seed/" + label));
  return Seed::from(d.view());
}

Digest label_digest(const std::string &label) {
  return hash(as_bytes("ctb-test-evidence/" + label));
}

TempDir::TempDir(const std::string &tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          (tag + "-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter++) + "-" + std::to_string(rd()));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

const std::vector<std::string> &TestChain::member_names() {
  static const std::vector<std::string> names = {
      "orderer", "isp1", "isp2", "lea1", "lea2", "pros1", "pros2"};
  return names;
}

namespace {

Role role_for(const std::string &name) {
  if (name.rfind("lea", 0) == 0)
    return Role::Lea;
  if (name.rfind("pros", 0) == 0)
    return Role::Prosecutor;
  return Role::Isp;
}

} // namespace

TestChain::TestChain(ChaincodePolicy policy, HashAlgorithm alg,
                     std::unique_ptr<BlockStore> store)
    : policy_(policy), alg_(alg),
      ca_(CertificateAuthority::init(seed_for("ca"))), anchor_(ca_.anchor()),
      outsider_(ca_.enroll(Role::Lea, kEpoch, seed_for("outsider"))) {
  for (const auto &name : member_names())
    members_.emplace(name, ca_.enroll(role_for(name), kEpoch, seed_for(name)));
  ledger_ = store ? std::make_unique<Ledger>(std::move(store))
                  : Ledger::in_memory();

  auto &g = genesis_;
  g.ca_root = ca_.root_public_key();
  g.hash = alg_;
  g.orderer = addr("orderer");
  g.policy = policy_;
  g.issued_at = kEpoch;
  for (const auto &name : member_names())
    g.roster.push_back(who(name).cert);
  ledger_->append_block(make_genesis(g, key("orderer"), kEpoch));
}

SigningKey TestChain::key_copy(const std::string &name) {
  return SigningKey::from_seed(seed_for(name));
}

const Participant &TestChain::who(const std::string &name) const {
  return members_.at(name).participant;
}

const SigningKey &TestChain::key(const std::string &name) const {
  return members_.at(name).key;
}

Transaction TestChain::sign(const std::string &name,
                            const Proposal &proposal) const {
  return make_transaction(proposal, addr(name), key(name), alg_);
}

Timestamp TestChain::last_time() const {
  auto tip = ledger_->latest();
  return tip ? tip->timestamp : kEpoch;
}

Block TestChain::seal(std::vector<Transaction> txs, Timestamp t) const {
  auto tip = ledger_->latest();
  return seal_block(ledger_->height(), tip ? tip->block_hash : Digest{},
                    t == 0 ? last_time() + 1 : t, std::move(txs),
                    addr("orderer"), key("orderer"), alg_);
}

Block TestChain::commit(std::vector<Transaction> txs, Timestamp t) {
  auto block = seal(std::move(txs), t);
  ledger_->append_block(block);
  return block;
}

Block TestChain::commit(Transaction tx, Timestamp t) {
  std::vector<Transaction> txs;
  txs.push_back(std::move(tx));
  return commit(std::move(txs), t);
}

Digest TestChain::create(const std::string &isp, const std::string &label,
                         Timestamp t) {
  auto id = label_digest(label);
  auto now = t == 0 ? last_time() + 1 : t;
  commit(chaincode::create_evidence(*state(), who(isp), key(isp), id,
                                    "incident " + label, now - 10, "camera",
                                    now),
         now);
  return id;
}

void TestChain::transfer(const std::string &from, const Digest &id,
                         const std::string &to, Timestamp t) {
  auto now = t == 0 ? last_time() + 1 : t;
  commit(chaincode::transfer_ownership(*state(), who(from), key(from), id,
                                       addr(to), now),
         now);
}

void TestChain::erase(const std::string &isp, const Digest &id, Timestamp t) {
  auto now = t == 0 ? last_time() + 1 : t;
  commit(chaincode::erase_evidence(*state(), who(isp), key(isp), id, now), now);
}

} // namespace ctb::testkit
