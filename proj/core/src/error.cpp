#include "ctb/error.hpp"

namespace ctb {

std::string_view to_string(ErrorCode code) {
  switch (code) {
  case ErrorCode::NotFound:
    return "NotFound";
  case ErrorCode::AlreadyExists:
    return "AlreadyExists";
  case ErrorCode::PermissionDenied:
    return "PermissionDenied";
  case ErrorCode::Erased:
    return "Erased";
  case ErrorCode::AlreadyErased:
    return "AlreadyErased";
  case ErrorCode::InvalidEvidence:
    return "InvalidEvidence";
  case ErrorCode::IntegrityError:
    return "IntegrityError";
  case ErrorCode::UnknownParticipant:
    return "UnknownParticipant";
  case ErrorCode::NotAuthorized:
    return "NotAuthorized";
  case ErrorCode::InvalidTransfer:
    return "InvalidTransfer";
  case ErrorCode::TerminalOwner:
    return "TerminalOwner";
  case ErrorCode::InvalidArgument:
    return "InvalidArgument";
  case ErrorCode::Malformed:
    return "Malformed";
  case ErrorCode::BlockRejected:
    return "BlockRejected";
  case ErrorCode::ReplayError:
    return "ReplayError";
  case ErrorCode::SpecError:
    return "SpecError";
  case ErrorCode::IoError:
    return "IoError";
  case ErrorCode::Unauthenticated:
    return "Unauthenticated";
  }
  return "Unknown";
}

std::string_view to_string(RejectReason reason) {
  switch (reason) {
  case RejectReason::Decode:
    return "DECODE";
  case RejectReason::Height:
    return "HEIGHT";
  case RejectReason::Linkage:
    return "LINKAGE";
  case RejectReason::Timestamp:
    return "TIMESTAMP";
  case RejectReason::Merkle:
    return "MERKLE";
  case RejectReason::BlockHash:
    return "BLOCK_HASH";
  case RejectReason::Proposer:
    return "PROPOSER";
  case RejectReason::Signature:
    return "SIGNATURE";
  case RejectReason::TxId:
    return "TX_ID";
  case RejectReason::Duplicate:
    return "DUPLICATE";
  case RejectReason::Semantics:
    return "SEMANTICS";
  case RejectReason::Genesis:
    return "GENESIS";
  case RejectReason::Index:
    return "INDEX";
  }
  return "UNKNOWN";
}

} // namespace ctb
