#include "ctb/transaction.hpp"

#include "ctb/error.hpp"

namespace ctb {

std::string_view to_string(TxKind kind) {
  switch (kind) {
  case TxKind::Genesis:
    return "GENESIS";
  case TxKind::Create:
    return "CREATE";
  case TxKind::Transfer:
    return "TRANSFER";
  case TxKind::Erase:
    return "ERASE";
  case TxKind::DeviceRegister:
    return "DEVICE_REGISTER";
  case TxKind::DeviceVerify:
    return "DEVICE_VERIFY";
  case TxKind::Access:
    return "ACCESS";
  }
  return "UNKNOWN";
}

TxKind parse_tx_kind(std::string_view name) {
  for (std::uint8_t v = 0; v <= 6; ++v) {
    auto kind = static_cast<TxKind>(v);
    if (to_string(kind) == name)
      return kind;
  }
  throw Error(ErrorCode::InvalidArgument,
              "unknown transaction kind '" + std::string(name) + "'");
}

TxKind kind_of(const Proposal &proposal) {
  return std::visit(
      [](const auto &p) -> TxKind {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GenesisProposal>)
          return TxKind::Genesis;
        else if constexpr (std::is_same_v<T, CreateProposal>)
          return TxKind::Create;
        else if constexpr (std::is_same_v<T, TransferProposal>)
          return TxKind::Transfer;
        else if constexpr (std::is_same_v<T, EraseProposal>)
          return TxKind::Erase;
        else if constexpr (std::is_same_v<T, DeviceRegisterProposal>)
          return TxKind::DeviceRegister;
        else if constexpr (std::is_same_v<T, DeviceVerifyProposal>)
          return TxKind::DeviceVerify;
        else
          return TxKind::Access;
      },
      proposal);
}

namespace {

void encode_body(ByteWriter &w, const GenesisProposal &p) {
  w.fixed(p.ca_root)
      .u8(static_cast<std::uint8_t>(p.hash))
      .fixed(p.orderer)
      .boolean(p.policy.allow_prosecutor_transfer)
      .boolean(p.policy.allow_isp_to_isp)
      .u8(static_cast<std::uint8_t>(p.policy.metadata_access))
      .u64(p.roster.size());
  for (const auto &cert : p.roster)
    w.field(cert.serialize());
  w.i64(p.issued_at);
}

void encode_body(ByteWriter &w, const CreateProposal &p) {
  w.fixed(p.id)
      .fixed(p.creator)
      .str(p.dsc)
      .i64(p.tm)
      .fixed(p.owner)
      .str(p.device_type)
      .i64(p.logged_at)
      .i64(p.issued_at);
}

void encode_body(ByteWriter &w, const TransferProposal &p) {
  w.fixed(p.id).fixed(p.new_owner).str(p.dsc_amendment).i64(p.issued_at);
}

void encode_body(ByteWriter &w, const EraseProposal &p) {
  w.fixed(p.id).i64(p.issued_at);
}

void encode_body(ByteWriter &w, const AccessProposal &p) {
  w.fixed(p.id).i64(p.issued_at);
}

template <class DeviceProposal>
void encode_device(ByteWriter &w, const DeviceProposal &p) {
  w.str(p.device_id)
      .fixed(p.firmware_hash)
      .fixed(p.config_hash)
      .i64(p.issued_at);
}

void encode_body(ByteWriter &w, const DeviceRegisterProposal &p) {
  encode_device(w, p);
}

void encode_body(ByteWriter &w, const DeviceVerifyProposal &p) {
  encode_device(w, p);
}

template <class DeviceProposal> DeviceProposal decode_device(ByteReader &r) {
  DeviceProposal p;
  p.device_id = r.str();
  p.firmware_hash = r.fixed<Digest>();
  p.config_hash = r.fixed<Digest>();
  p.issued_at = r.i64();
  return p;
}

} // namespace

Bytes encode_proposal(const Proposal &proposal) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(kind_of(proposal)));
  std::visit([&](const auto &p) { encode_body(w, p); }, proposal);
  return std::move(w).take();
}

Proposal decode_proposal(ByteView data) {
  ByteReader r(data);
  auto tag = r.u8();
  Proposal out;
  switch (static_cast<TxKind>(tag)) {
  case TxKind::Genesis: {
    GenesisProposal p;
    p.ca_root = r.fixed<PublicKey>();
    auto alg = r.u8();
    if (alg != 1 && alg != 2)
      throw_malformed("unknown hash algorithm tag");
    p.hash = static_cast<HashAlgorithm>(alg);
    p.orderer = r.fixed<Address>();
    p.policy.allow_prosecutor_transfer = r.boolean();
    p.policy.allow_isp_to_isp = r.boolean();
    auto access = r.u8();
    if (access > 1)
      throw_malformed("unknown metadata access tag");
    p.policy.metadata_access = static_cast<MetadataAccess>(access);
    auto count = r.u64();
    for (std::uint64_t i = 0; i < count; ++i)
      p.roster.push_back(Certificate::deserialize(r.field()));
    p.issued_at = r.i64();
    out = std::move(p);
    break;
  }
  case TxKind::Create: {
    CreateProposal p;
    p.id = r.fixed<Digest>();
    p.creator = r.fixed<Address>();
    p.dsc = r.str();
    p.tm = r.i64();
    p.owner = r.fixed<Address>();
    p.device_type = r.str();
    p.logged_at = r.i64();
    p.issued_at = r.i64();
    out = std::move(p);
    break;
  }
  case TxKind::Transfer: {
    TransferProposal p;
    p.id = r.fixed<Digest>();
    p.new_owner = r.fixed<Address>();
    p.dsc_amendment = r.str();
    p.issued_at = r.i64();
    out = std::move(p);
    break;
  }
  case TxKind::Erase: {
    EraseProposal p;
    p.id = r.fixed<Digest>();
    p.issued_at = r.i64();
    out = p;
    break;
  }
  case TxKind::Access: {
    AccessProposal p;
    p.id = r.fixed<Digest>();
    p.issued_at = r.i64();
    out = p;
    break;
  }
  case TxKind::DeviceRegister:
    out = decode_device<DeviceRegisterProposal>(r);
    break;
  case TxKind::DeviceVerify:
    out = decode_device<DeviceVerifyProposal>(r);
    break;
  default:
    throw_malformed("unknown proposal kind tag");
  }
  r.expect_end();
  return out;
}

Bytes Transaction::id_preimage() const {
  return ByteWriter()
      .u8(static_cast<std::uint8_t>(kind))
      .field(proposal)
      .fixed(submitter)
      .fixed(submitter_signature)
      .bytes();
}

Digest Transaction::compute_id(HashAlgorithm alg) const {
  return hash(id_preimage(), alg);
}

Bytes Transaction::serialize() const {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(kind))
      .field(proposal)
      .fixed(submitter)
      .fixed(submitter_signature)
      .fixed(tx_id);
  return std::move(w).take();
}

Transaction Transaction::deserialize(ByteView data) {
  ByteReader r(data);
  Transaction tx;
  auto kind = r.u8();
  if (kind > 6)
    throw_malformed("unknown transaction kind tag");
  tx.kind = static_cast<TxKind>(kind);
  auto proposal = r.field();
  tx.proposal.assign(proposal.begin(), proposal.end());
  tx.submitter = r.fixed<Address>();
  tx.submitter_signature = r.fixed<Signature>();
  tx.tx_id = r.fixed<Digest>();
  r.expect_end();
  return tx;
}

Transaction make_transaction(const Proposal &proposal, const Address &submitter,
                             const SigningKey &key, HashAlgorithm alg) {
  Transaction tx;
  tx.kind = kind_of(proposal);
  tx.proposal = encode_proposal(proposal);
  tx.submitter = submitter;
  tx.submitter_signature = key.sign(tx.proposal);
  tx.tx_id = tx.compute_id(alg);
  return tx;
}

} // namespace ctb
