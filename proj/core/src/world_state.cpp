#include "ctb/world_state.hpp"

#include "ctb/error.hpp"

namespace ctb {

namespace {

constexpr std::uint8_t kOpen = 0;
constexpr std::uint8_t kClosed = 1;

void write_interval(ByteWriter &w, const CustodyInterval &iv) {
  w.fixed(iv.owner).i64(iv.start);
  if (iv.end)
    w.u8(kClosed).i64(*iv.end);
  else
    w.u8(kOpen);
}

} // namespace

Bytes EvidenceRecord::serialize() const {
  ByteWriter w;
  w.fixed(id)
      .fixed(creator)
      .str(dsc)
      .i64(tm)
      .fixed(own)
      .fixed(own_prev)
      .str(device_type)
      .u64(custody_times.size());
  for (const auto &iv : custody_times)
    write_interval(w, iv);
  return std::move(w).take();
}

EvidenceRecord EvidenceRecord::deserialize(ByteView data) {
  ByteReader r(data);
  EvidenceRecord rec;
  rec.id = r.fixed<Digest>();
  rec.creator = r.fixed<Address>();
  rec.dsc = r.str();
  rec.tm = r.i64();
  rec.own = r.fixed<Address>();
  rec.own_prev = r.fixed<Address>();
  rec.device_type = r.str();
  auto count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    CustodyInterval iv;
    iv.owner = r.fixed<Address>();
    iv.start = r.i64();
    if (r.u8() == kClosed)
      iv.end = r.i64();
    rec.custody_times.push_back(iv);
  }
  r.expect_end();
  return rec;
}

const Certificate *WorldState::find_participant(const Address &address) const {
  auto it = roster.find(address);
  return it == roster.end() ? nullptr : &it->second;
}

const EvidenceRecord *WorldState::find_evidence(const Digest &id) const {
  auto it = evidence.find(id);
  return it == evidence.end() ? nullptr : &it->second;
}

Bytes WorldState::serialize() const {
  ByteWriter w;
  w.u64(height).boolean(params.has_value());
  if (params)
    w.fixed(params->ca_root)
        .u8(static_cast<std::uint8_t>(params->hash))
        .fixed(params->orderer)
        .boolean(params->policy.allow_prosecutor_transfer)
        .boolean(params->policy.allow_isp_to_isp)
        .u8(static_cast<std::uint8_t>(params->policy.metadata_access));
  w.u64(roster.size());
  for (const auto &[addr, cert] : roster)
    w.field(cert.serialize());
  w.u64(evidence.size());
  for (const auto &[id, rec] : evidence)
    w.field(rec.serialize());
  w.u64(erased.size());
  for (const auto &id : erased)
    w.fixed(id);
  w.u64(devices.size());
  for (const auto &[device_id, history] : devices) {
    w.str(device_id).u64(history.size());
    for (const auto &d : history)
      w.fixed(d.firmware_hash)
          .fixed(d.config_hash)
          .i64(d.registered_at)
          .fixed(d.registrar);
  }
  w.u64(access_log.size());
  for (const auto &[id, entries] : access_log) {
    w.fixed(id).u64(entries.size());
    for (const auto &e : entries)
      w.fixed(e.accessor).i64(e.at).fixed(e.tx_id);
  }
  return std::move(w).take();
}

Digest WorldState::digest() const { return hash(serialize(), hash_algorithm()); }

std::vector<CustodyInterval> custody_trail(const WorldState &state,
                                           const Digest &id) {
  const auto *rec = state.find_evidence(id);
  if (!rec)
    throw Error(ErrorCode::NotFound, "unknown evidence " + id.hex());
  return rec->custody_times;
}

} // namespace ctb
