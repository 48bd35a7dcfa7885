#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ctb {

enum class ErrorCode {
  NotFound,
  AlreadyExists,
  PermissionDenied,
  Erased,
  AlreadyErased,
  InvalidEvidence,
  IntegrityError,
  UnknownParticipant,
  NotAuthorized,
  InvalidTransfer,
  TerminalOwner,
  InvalidArgument,
  Malformed,
  BlockRejected,
  ReplayError,
  SpecError,
  IoError,
  Unauthenticated,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every domain failure. The code is stable and
/// machine-readable; the message is for humans.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

enum class RejectReason {
  Decode,
  Height,
  Linkage,
  Timestamp,
  Merkle,
  BlockHash,
  Proposer,
  Signature,
  TxId,
  Duplicate,
  Semantics,
  Genesis,
  Index,
};

std::string_view to_string(RejectReason reason);

class BlockRejected : public Error {
public:
  BlockRejected(RejectReason reason, std::uint64_t height,
                const std::string &detail)
      : Error(ErrorCode::BlockRejected,
              "block " + std::to_string(height) + " rejected (" +
                  std::string(to_string(reason)) + "): " + detail),
        reason_(reason), height_(height), detail_(detail) {}

  RejectReason reason() const noexcept { return reason_; }
  std::uint64_t height() const noexcept { return height_; }
  const std::string &detail() const noexcept { return detail_; }

private:
  RejectReason reason_;
  std::uint64_t height_;
  std::string detail_;
};

class ReplayError : public Error {
public:
  ReplayError(std::uint64_t height, const std::string &detail)
      : Error(ErrorCode::ReplayError,
              "replay failed at height " + std::to_string(height) + ": " +
                  detail),
        height_(height) {}

  std::uint64_t height() const noexcept { return height_; }

private:
  std::uint64_t height_;
};

} // namespace ctb
