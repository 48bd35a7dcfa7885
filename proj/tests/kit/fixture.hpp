#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ctb/chaincode.hpp"
#include "ctb/evidence_store.hpp"
#include "ctb/ledger.hpp"

namespace ctb::testkit {

inline constexpr Timestamp kEpoch = 1'700'000'000;

Seed seed_for(const std::string &label);

/// Scratch directory removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string &tag = "ctb");
  ~TempDir();
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const std::filesystem::path &path() const { return path_; }
  std::filesystem::path operator/(const std::string &name) const {
    return path_ / name;
  }

private:
  std::filesystem::path path_;
};

/// A small permissioned chain with a deterministic roster:
/// orderer, isp1, isp2, lea1, lea2, pros1, pros2. The orderer seals one
/// block per commit() at a caller-chosen timestamp.
class TestChain {
public:
  static const std::vector<std::string> &member_names();

  explicit TestChain(ChaincodePolicy policy = {},
                     HashAlgorithm alg = HashAlgorithm::Sha256,
                     std::unique_ptr<BlockStore> store = nullptr);

  const Participant &who(const std::string &name) const;
  const SigningKey &key(const std::string &name) const;
  Address addr(const std::string &name) const { return who(name).address; }

  /// A key/cert pair issued by the same CA but absent from the roster.
  const Enrollment &outsider() const { return outsider_; }

  const GenesisProposal &genesis() const { return genesis_; }
  /// Fresh copy of a member key, for owners that take keys by value.
  static SigningKey key_copy(const std::string &name);

  Ledger &ledger() { return *ledger_; }
  std::shared_ptr<const WorldState> state() const { return ledger_->snapshot(); }
  HashAlgorithm alg() const { return alg_; }
  const TrustAnchor &anchor() const { return anchor_; }

  Transaction sign(const std::string &name, const Proposal &proposal) const;
  Block seal(std::vector<Transaction> txs, Timestamp t) const;
  /// Seal and append; `t` = 0 uses the previous block time + 1.
  Block commit(std::vector<Transaction> txs, Timestamp t = 0);
  Block commit(Transaction tx, Timestamp t = 0);

  Timestamp last_time() const;

  /// CREATE for `id` by `isp`, committed at time t.
  Digest create(const std::string &isp, const std::string &label,
                Timestamp t = 0);
  void transfer(const std::string &from, const Digest &id,
                const std::string &to, Timestamp t = 0);
  void erase(const std::string &isp, const Digest &id, Timestamp t = 0);

private:
  ChaincodePolicy policy_;
  HashAlgorithm alg_;
  CertificateAuthority ca_;
  TrustAnchor anchor_;
  std::map<std::string, Enrollment> members_;
  Enrollment outsider_;
  GenesisProposal genesis_;
  std::unique_ptr<Ledger> ledger_;
};

Digest label_digest(const std::string &label);

} // namespace ctb::testkit
