#include "ctb/chaincode.hpp"

namespace ctb::chaincode {

std::string_view to_string(DeviceStatus status) {
  switch (status) {
  case DeviceStatus::Current:
    return "CURRENT";
  case DeviceStatus::Historical:
    return "HISTORICAL";
  case DeviceStatus::Unknown:
    return "UNKNOWN";
  }
  return "UNKNOWN";
}

namespace {

using Result = std::optional<ErrorCode>;

Result check_genesis(const WorldState &state, const Address &submitter,
                     const GenesisProposal &p) {
  if (state.params)
    return ErrorCode::AlreadyExists;
  if (p.orderer != submitter)
    return ErrorCode::PermissionDenied;
  bool orderer_enrolled = false;
  for (const auto &cert : p.roster)
    orderer_enrolled |= cert.subject_address == p.orderer;
  if (!orderer_enrolled)
    return ErrorCode::UnknownParticipant;
  return std::nullopt;
}

Result check_create(const WorldState &state, const Certificate &caller,
                    const CreateProposal &p) {
  if (caller.subject_role != Role::Isp)
    return ErrorCode::PermissionDenied;
  if (p.creator != caller.subject_address || p.owner != p.creator)
    return ErrorCode::InvalidArgument;
  if (p.dsc.size() > kMaxDescriptionBytes)
    return ErrorCode::InvalidArgument;
  if (state.evidence.contains(p.id) || state.is_erased(p.id))
    return ErrorCode::AlreadyExists;
  return std::nullopt;
}

Result check_access(const WorldState &state, const Certificate &caller,
                    const Digest &id) {
  const auto *rec = state.find_evidence(id);
  if (!rec)
    return ErrorCode::NotFound;
  if (state.is_erased(id))
    return ErrorCode::Erased;
  if (rec->own != caller.subject_address)
    return ErrorCode::PermissionDenied;
  return std::nullopt;
}

Result check_erase(const WorldState &state, const Certificate &caller,
                   const EraseProposal &p) {
  const auto *rec = state.find_evidence(p.id);
  if (!rec)
    return ErrorCode::NotFound;
  if (caller.subject_role != Role::Isp ||
      rec->creator != caller.subject_address)
    return ErrorCode::PermissionDenied;
  if (state.is_erased(p.id))
    return ErrorCode::AlreadyErased;
  return std::nullopt;
}

Result check_transfer(const WorldState &state, const Certificate &caller,
                      const TransferProposal &p) {
  const auto &policy = state.params->policy;
  const auto *rec = state.find_evidence(p.id);
  if (!rec)
    return ErrorCode::NotFound;
  if (state.is_erased(p.id))
    return ErrorCode::Erased;
  if (rec->own != caller.subject_address)
    return ErrorCode::PermissionDenied;
  if (caller.subject_role == Role::Prosecutor &&
      !policy.allow_prosecutor_transfer)
    return ErrorCode::TerminalOwner;
  if (p.new_owner == caller.subject_address)
    return ErrorCode::InvalidTransfer;
  const auto *recipient = state.find_participant(p.new_owner);
  if (!recipient)
    return ErrorCode::UnknownParticipant;
  if (recipient->subject_role == Role::Isp && !policy.allow_isp_to_isp)
    return ErrorCode::NotAuthorized;
  if (p.dsc_amendment.size() > kMaxDescriptionBytes)
    return ErrorCode::InvalidArgument;
  return std::nullopt;
}

Result check_register(const Certificate &caller,
                      const DeviceRegisterProposal &p) {
  if (caller.subject_role != Role::Isp)
    return ErrorCode::PermissionDenied;
  if (p.device_id.empty())
    return ErrorCode::InvalidArgument;
  return std::nullopt;
}

Result check_verify(const WorldState &state, const DeviceVerifyProposal &p) {
  if (!state.devices.contains(p.device_id))
    return ErrorCode::NotFound;
  return std::nullopt;
}

void close_open_interval(EvidenceRecord &rec, Timestamp at) {
  if (!rec.custody_times.empty() && !rec.custody_times.back().end)
    rec.custody_times.back().end = at;
}

} // namespace

std::optional<ErrorCode> check(const WorldState &state,
                               const Address &submitter,
                               const Proposal &proposal) {
  if (const auto *g = std::get_if<GenesisProposal>(&proposal))
    return check_genesis(state, submitter, *g);
  if (!state.params)
    return ErrorCode::InvalidArgument; // nothing runs before genesis
  const auto *caller = state.find_participant(submitter);
  if (!caller)
    return ErrorCode::PermissionDenied;
  return std::visit(
      [&](const auto &p) -> Result {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, CreateProposal>)
          return check_create(state, *caller, p);
        else if constexpr (std::is_same_v<T, TransferProposal>)
          return check_transfer(state, *caller, p);
        else if constexpr (std::is_same_v<T, EraseProposal>)
          return check_erase(state, *caller, p);
        else if constexpr (std::is_same_v<T, AccessProposal>)
          return check_access(state, *caller, p.id);
        else if constexpr (std::is_same_v<T, DeviceRegisterProposal>)
          return check_register(*caller, p);
        else if constexpr (std::is_same_v<T, DeviceVerifyProposal>)
          return check_verify(state, p);
        else
          return ErrorCode::InvalidArgument;
      },
      proposal);
}

void execute(WorldState &state, const Transaction &tx, Timestamp block_time) {
  auto proposal = tx.decoded();
  if (kind_of(proposal) != tx.kind)
    throw Error(ErrorCode::Malformed, "transaction kind does not match proposal");
  if (auto err = check(state, tx.submitter, proposal))
    throw Error(*err, std::string(to_string(tx.kind)) + " by " +
                          tx.submitter.hex() + " denied");

  std::visit(
      [&](auto &p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GenesisProposal>) {
          state.params = ChainParams{p.ca_root, p.hash, p.orderer, p.policy};
          for (const auto &cert : p.roster)
            state.roster[cert.subject_address] = cert;
        } else if constexpr (std::is_same_v<T, CreateProposal>) {
          EvidenceRecord rec;
          rec.id = p.id;
          rec.creator = p.creator;
          rec.dsc = std::move(p.dsc);
          rec.tm = p.tm;
          rec.own = p.owner;
          rec.device_type = std::move(p.device_type);
          rec.custody_times.push_back({p.owner, block_time, std::nullopt});
          state.evidence.emplace(p.id, std::move(rec));
        } else if constexpr (std::is_same_v<T, TransferProposal>) {
          auto &rec = state.evidence.at(p.id);
          close_open_interval(rec, block_time);
          rec.own_prev = rec.own;
          rec.own = p.new_owner;
          rec.custody_times.push_back({p.new_owner, block_time, std::nullopt});
          if (!p.dsc_amendment.empty())
            rec.dsc += "\n[amendment " + tx.submitter.hex() + " @" +
                       std::to_string(block_time) + "] " + p.dsc_amendment;
        } else if constexpr (std::is_same_v<T, EraseProposal>) {
          close_open_interval(state.evidence.at(p.id), block_time);
          state.erased.insert(p.id);
        } else if constexpr (std::is_same_v<T, AccessProposal>) {
          state.access_log[p.id].push_back({tx.submitter, block_time, tx.tx_id});
        } else if constexpr (std::is_same_v<T, DeviceRegisterProposal>) {
          state.devices[p.device_id].push_back({p.device_id, p.firmware_hash,
                                                p.config_hash, block_time,
                                                tx.submitter});
        }
        // DeviceVerifyProposal: audit record only, no state change.
      },
      proposal);
}

const EvidenceRecord &query_metadata(const WorldState &state,
                                     const Address &caller, const Digest &id) {
  const auto *rec = state.find_evidence(id);
  if (!rec)
    throw Error(ErrorCode::NotFound, "unknown evidence " + id.hex());
  const auto *cert = state.find_participant(caller);
  if (!cert)
    throw Error(ErrorCode::PermissionDenied, "caller is not enrolled");
  bool related = rec->own == caller || rec->creator == caller;
  bool open = state.params &&
              state.params->policy.metadata_access == MetadataAccess::Open &&
              (cert->subject_role == Role::Lea ||
               cert->subject_role == Role::Prosecutor);
  if (!related && !open)
    throw Error(ErrorCode::PermissionDenied,
                "metadata access denied for " + caller.hex());
  return *rec;
}

DeviceStatus verify_device_state(const WorldState &state,
                                 const std::string &device_id,
                                 const Digest &firmware_hash,
                                 const Digest &config_hash) {
  auto it = state.devices.find(device_id);
  if (it == state.devices.end() || it->second.empty())
    throw Error(ErrorCode::NotFound, "no history for device " + device_id);
  const auto &history = it->second;
  auto matches = [&](const DeviceRecord &r) {
    return r.firmware_hash == firmware_hash && r.config_hash == config_hash;
  };
  if (matches(history.back()))
    return DeviceStatus::Current;
  for (const auto &r : history)
    if (matches(r))
      return DeviceStatus::Historical;
  return DeviceStatus::Unknown;
}

Transaction sign_checked(const WorldState &state, const Participant &caller,
                         const SigningKey &key, const Proposal &proposal) {
  if (key.public_key() != caller.public_key)
    throw Error(ErrorCode::PermissionDenied,
                "signing key does not match the caller's certificate");
  if (auto err = check(state, caller.address, proposal))
    throw Error(*err, std::string(to_string(kind_of(proposal))) + " denied");
  return make_transaction(proposal, caller.address, key,
                          state.hash_algorithm());
}

Transaction create_evidence(const WorldState &state, const Participant &caller,
                            const SigningKey &key, const Digest &id,
                            std::string dsc, Timestamp tm,
                            std::string device_type, Timestamp now) {
  CreateProposal p;
  p.id = id;
  p.creator = caller.address;
  p.dsc = std::move(dsc);
  p.tm = tm;
  p.owner = caller.address;
  p.device_type = std::move(device_type);
  p.logged_at = now;
  p.issued_at = now;
  return sign_checked(state, caller, key, p);
}

EvidenceHandle get_evidence(const WorldState &state, const Participant &caller,
                            const SigningKey &key, const Digest &id,
                            Timestamp now) {
  auto tx = sign_checked(state, caller, key, AccessProposal{id, now});
  const auto &rec = state.evidence.at(id);
  return {rec, rec.creator, std::move(tx)};
}

Transaction erase_evidence(const WorldState &state, const Participant &caller,
                           const SigningKey &key, const Digest &id,
                           Timestamp now) {
  return sign_checked(state, caller, key, EraseProposal{id, now});
}

Transaction transfer_ownership(const WorldState &state,
                               const Participant &caller, const SigningKey &key,
                               const Digest &id, const Address &new_owner,
                               Timestamp now, std::string dsc_amendment) {
  return sign_checked(state, caller, key,
                      TransferProposal{id, new_owner, std::move(dsc_amendment),
                                       now});
}

Transaction register_device_state(const WorldState &state,
                                  const Participant &caller,
                                  const SigningKey &key,
                                  const std::string &device_id,
                                  const Digest &firmware_hash,
                                  const Digest &config_hash, Timestamp now) {
  return sign_checked(
      state, caller, key,
      DeviceRegisterProposal{device_id, firmware_hash, config_hash, now});
}

Transaction record_device_verification(const WorldState &state,
                                       const Participant &caller,
                                       const SigningKey &key,
                                       const std::string &device_id,
                                       const Digest &firmware_hash,
                                       const Digest &config_hash,
                                       Timestamp now) {
  return sign_checked(
      state, caller, key,
      DeviceVerifyProposal{device_id, firmware_hash, config_hash, now});
}

} // namespace ctb::chaincode
