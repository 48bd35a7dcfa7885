#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "ctb/bytes.hpp"

namespace ctb {

/// Three botnet attacks plus the two pre-attack phases.
enum class AttackKind : std::uint8_t {
  Mitm = 1,
  Ddos = 2,
  Spam = 3,
  Propagation = 4,
  Rallying = 5,
};

std::string_view to_string(AttackKind kind);
AttackKind parse_attack_kind(std::string_view name);

struct IncidentDescriptor {
  AttackKind attack_kind = AttackKind::Propagation;
  std::string source_device;
  std::string target;
  Timestamp tm = 0;
  std::string summary;
  /// Type tag of the attacked IoT device (camera, smart-watch, ...).
  std::string device_type;

  Bytes serialize() const;
  static IncidentDescriptor deserialize(ByteView data);

  bool operator==(const IncidentDescriptor &) const = default;
};

} // namespace ctb
