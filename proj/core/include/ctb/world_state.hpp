#pragma once

// Materialized view of the chain: evidence records, device histories and
// the genesis roster. A WorldState is a pure fold of chaincode execution
// over the blocks in order, so its canonical bytes are reproducible.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ctb/bytes.hpp"
#include "ctb/hash.hpp"
#include "ctb/identity.hpp"
#include "ctb/policy.hpp"

namespace ctb {

/// One custody time record: who held the evidence and over which span.
/// `end` is empty while the interval is open.
struct CustodyInterval {
  Address owner;
  Timestamp start = 0;
  std::optional<Timestamp> end;

  bool operator==(const CustodyInterval &) const = default;
};

/// On-chain evidence metadata: id || creator || dsc || tm || own || own' ||
/// type || custody times.
struct EvidenceRecord {
  Digest id;
  Address creator;
  std::string dsc;
  Timestamp tm = 0;
  Address own;
  /// Zero address until the first transfer.
  Address own_prev;
  std::string device_type;
  std::vector<CustodyInterval> custody_times;

  Bytes serialize() const;
  static EvidenceRecord deserialize(ByteView data);

  bool operator==(const EvidenceRecord &) const = default;
};

struct DeviceRecord {
  std::string device_id;
  Digest firmware_hash;
  Digest config_hash;
  Timestamp registered_at = 0;
  Address registrar;

  bool operator==(const DeviceRecord &) const = default;
};

struct AccessEntry {
  Address accessor;
  Timestamp at = 0;
  Digest tx_id;

  bool operator==(const AccessEntry &) const = default;
};

/// Chain-wide parameters taken from the genesis block.
struct ChainParams {
  PublicKey ca_root;
  HashAlgorithm hash = HashAlgorithm::Sha256;
  Address orderer;
  ChaincodePolicy policy;

  TrustAnchor anchor() const { return {ca_root}; }

  bool operator==(const ChainParams &) const = default;
};

struct WorldState {
  /// Number of blocks folded into this state.
  std::uint64_t height = 0;
  std::optional<ChainParams> params;
  std::map<Address, Certificate> roster;
  std::map<Digest, EvidenceRecord> evidence;
  std::set<Digest> erased;
  std::map<std::string, std::vector<DeviceRecord>> devices;
  std::map<Digest, std::vector<AccessEntry>> access_log;

  const Certificate *find_participant(const Address &address) const;
  const EvidenceRecord *find_evidence(const Digest &id) const;
  bool is_erased(const Digest &id) const { return erased.contains(id); }

  HashAlgorithm hash_algorithm() const {
    return params ? params->hash : HashAlgorithm::Sha256;
  }

  Bytes serialize() const;
  Digest digest() const;

  bool operator==(const WorldState &) const = default;
};

/// Ordered custody intervals of `id`; throws NotFound.
std::vector<CustodyInterval> custody_trail(const WorldState &state,
                                           const Digest &id);

} // namespace ctb
