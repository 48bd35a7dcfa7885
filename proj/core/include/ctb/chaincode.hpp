#pragma once

// Evidence and device-state business logic.
//
// Permission matrix:
//   CREATE           ISP only; creator = owner = submitter; id must be new.
//   ACCESS (get)     current owner only; erased ids answer Erased.
//   TRANSFER         current owner only; a prosecutor is the terminal owner
//                    unless policy allows onward transfer; the recipient
//                    must be enrolled and may be an ISP only when policy
//                    allows it.
//   ERASE            the creating ISP only, whoever owns the evidence.
//   DEVICE_REGISTER  ISP only.
//   DEVICE_VERIFY    any enrolled participant.
//
// check() is pure; execute() checks and then applies against a block time.

#include <optional>
#include <string>

#include "ctb/error.hpp"
#include "ctb/transaction.hpp"
#include "ctb/world_state.hpp"

namespace ctb::chaincode {

constexpr std::size_t kMaxDescriptionBytes = 4096;

enum class DeviceStatus { Current, Historical, Unknown };

std::string_view to_string(DeviceStatus status);

/// nullopt when `submitter` may run `proposal` against `state`.
std::optional<ErrorCode> check(const WorldState &state,
                               const Address &submitter,
                               const Proposal &proposal);

/// Check then apply one transaction at `block_time`; throws Error on denial.
void execute(WorldState &state, const Transaction &tx, Timestamp block_time);

/// Metadata read gate, honoring the policy's metadata-access mode. Erased
/// records stay readable.
const EvidenceRecord &query_metadata(const WorldState &state,
                                     const Address &caller, const Digest &id);

DeviceStatus verify_device_state(const WorldState &state,
                                 const std::string &device_id,
                                 const Digest &firmware_hash,
                                 const Digest &config_hash);

/// Where the raw payload lives: the creator ISP's evidence database.
struct EvidenceHandle {
  EvidenceRecord record;
  Address evdb_locator;
  /// Signed ACCESS transaction recording this retrieval.
  Transaction access_tx;
};

// Client-side builders. Each one runs check() against the caller's view of
// the state and throws the chaincode error before anything is signed.

Transaction create_evidence(const WorldState &state, const Participant &caller,
                            const SigningKey &key, const Digest &id,
                            std::string dsc, Timestamp tm,
                            std::string device_type, Timestamp now);

EvidenceHandle get_evidence(const WorldState &state, const Participant &caller,
                            const SigningKey &key, const Digest &id,
                            Timestamp now);

Transaction erase_evidence(const WorldState &state, const Participant &caller,
                           const SigningKey &key, const Digest &id,
                           Timestamp now);

Transaction transfer_ownership(const WorldState &state,
                               const Participant &caller, const SigningKey &key,
                               const Digest &id, const Address &new_owner,
                               Timestamp now, std::string dsc_amendment = {});

Transaction register_device_state(const WorldState &state,
                                  const Participant &caller,
                                  const SigningKey &key,
                                  const std::string &device_id,
                                  const Digest &firmware_hash,
                                  const Digest &config_hash, Timestamp now);

Transaction record_device_verification(const WorldState &state,
                                       const Participant &caller,
                                       const SigningKey &key,
                                       const std::string &device_id,
                                       const Digest &firmware_hash,
                                       const Digest &config_hash,
                                       Timestamp now);

/// Signed transaction for an already-built proposal, after check().
Transaction sign_checked(const WorldState &state, const Participant &caller,
                         const SigningKey &key, const Proposal &proposal);

} // namespace ctb::chaincode
