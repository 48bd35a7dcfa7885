#pragma once

// Transactions and the per-kind proposal payloads they carry.
//
// A proposal holds the input parameters of one chaincode call. The
// submitter signs the canonical proposal bytes (kind tag included); the
// tx id hashes every other transaction field, signature included.

#include <string>
#include <variant>
#include <vector>

#include "ctb/bytes.hpp"
#include "ctb/hash.hpp"
#include "ctb/identity.hpp"
#include "ctb/policy.hpp"

namespace ctb {

enum class TxKind : std::uint8_t {
  Genesis = 0,
  Create = 1,
  Transfer = 2,
  Erase = 3,
  DeviceRegister = 4,
  DeviceVerify = 5,
  Access = 6,
};

std::string_view to_string(TxKind kind);
TxKind parse_tx_kind(std::string_view name);

/// Block 0 payload: trust anchor, hash choice, ordering node, roster.
struct GenesisProposal {
  PublicKey ca_root;
  HashAlgorithm hash = HashAlgorithm::Sha256;
  Address orderer;
  ChaincodePolicy policy;
  std::vector<Certificate> roster;
  Timestamp issued_at = 0;

  bool operator==(const GenesisProposal &) const = default;
};

struct CreateProposal {
  Digest id;
  Address creator;
  std::string dsc;
  Timestamp tm = 0;
  Address owner;
  std::string device_type;
  /// Timestamp of the evidence log event this proposal was generated from.
  Timestamp logged_at = 0;
  Timestamp issued_at = 0;

  bool operator==(const CreateProposal &) const = default;
};

struct TransferProposal {
  Digest id;
  Address new_owner;
  /// Appended to dsc when non-empty; never replaces it.
  std::string dsc_amendment;
  Timestamp issued_at = 0;

  bool operator==(const TransferProposal &) const = default;
};

struct EraseProposal {
  Digest id;
  Timestamp issued_at = 0;

  bool operator==(const EraseProposal &) const = default;
};

struct AccessProposal {
  Digest id;
  Timestamp issued_at = 0;

  bool operator==(const AccessProposal &) const = default;
};

struct DeviceRegisterProposal {
  std::string device_id;
  Digest firmware_hash;
  Digest config_hash;
  Timestamp issued_at = 0;

  bool operator==(const DeviceRegisterProposal &) const = default;
};

struct DeviceVerifyProposal {
  std::string device_id;
  Digest firmware_hash;
  Digest config_hash;
  Timestamp issued_at = 0;

  bool operator==(const DeviceVerifyProposal &) const = default;
};

using Proposal =
    std::variant<GenesisProposal, CreateProposal, TransferProposal,
                 EraseProposal, DeviceRegisterProposal, DeviceVerifyProposal,
                 AccessProposal>;

TxKind kind_of(const Proposal &proposal);

/// Canonical proposal bytes, kind tag first.
Bytes encode_proposal(const Proposal &proposal);
Proposal decode_proposal(ByteView data);

struct Transaction {
  TxKind kind = TxKind::Create;
  Bytes proposal;
  Address submitter;
  Signature submitter_signature;
  Digest tx_id;

  Proposal decoded() const { return decode_proposal(proposal); }

  /// Canonical bytes of every field except tx_id.
  Bytes id_preimage() const;
  Digest compute_id(HashAlgorithm alg) const;

  Bytes serialize() const;
  static Transaction deserialize(ByteView data);

  bool operator==(const Transaction &) const = default;
};

/// Sign a proposal as `submitter` and stamp its tx id.
Transaction make_transaction(const Proposal &proposal, const Address &submitter,
                             const SigningKey &key,
                             HashAlgorithm alg = HashAlgorithm::Sha256);

} // namespace ctb
