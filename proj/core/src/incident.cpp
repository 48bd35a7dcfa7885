#include "ctb/incident.hpp"

#include "ctb/error.hpp"

namespace ctb {

std::string_view to_string(AttackKind kind) {
  switch (kind) {
  case AttackKind::Mitm:
    return "MITM";
  case AttackKind::Ddos:
    return "DDOS";
  case AttackKind::Spam:
    return "SPAM";
  case AttackKind::Propagation:
    return "PROPAGATION";
  case AttackKind::Rallying:
    return "RALLYING";
  }
  return "UNKNOWN";
}

AttackKind parse_attack_kind(std::string_view name) {
  for (std::uint8_t v = 1; v <= 5; ++v) {
    auto kind = static_cast<AttackKind>(v);
    if (to_string(kind) == name)
      return kind;
  }
  throw Error(ErrorCode::InvalidArgument,
              "unknown attack kind '" + std::string(name) + "'");
}

Bytes IncidentDescriptor::serialize() const {
  return ByteWriter()
      .u8(static_cast<std::uint8_t>(attack_kind))
      .str(source_device)
      .str(target)
      .i64(tm)
      .str(summary)
      .str(device_type)
      .bytes();
}

IncidentDescriptor IncidentDescriptor::deserialize(ByteView data) {
  ByteReader r(data);
  IncidentDescriptor d;
  auto kind = r.u8();
  if (kind < 1 || kind > 5)
    throw_malformed("attack kind out of range");
  d.attack_kind = static_cast<AttackKind>(kind);
  d.source_device = r.str();
  d.target = r.str();
  d.tm = r.i64();
  d.summary = r.str();
  d.device_type = r.str();
  r.expect_end();
  return d;
}

} // namespace ctb
