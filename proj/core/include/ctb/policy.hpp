#pragma once

#include <cstdint>

namespace ctb {

enum class MetadataAccess : std::uint8_t {
  /// Any enrolled LEA or prosecutor, the creator ISP and the current owner
  /// may read on-chain metadata. Raw payloads stay owner-only.
  Open = 0,
  /// Only the current owner and the creator ISP may read metadata.
  OwnerOnly = 1,
};

/// Chain-wide chaincode switches, fixed at genesis.
struct ChaincodePolicy {
  bool allow_prosecutor_transfer = false;
  bool allow_isp_to_isp = false;
  MetadataAccess metadata_access = MetadataAccess::Open;

  bool operator==(const ChaincodePolicy &) const = default;
};

} // namespace ctb
