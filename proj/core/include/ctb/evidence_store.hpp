#pragma once

// Off-chain evidence database of one ISP.
//
// Layout under the store root:
//   objects/<hex id>/payload.bin   raw evidentiary bytes (removed on erase)
//   objects/<hex id>/meta.json     nonce, creator signature, log event,
//                                  incident descriptor, erasure tombstone
//
// The identifier of a stored item is Hash(payload || signature || nonce):
// the signed evidence followed by a fresh 32-byte nonce. Everything needed
// to recompute it stays in the store.

#include <filesystem>
#include <functional>
#include <optional>
#include <shared_mutex>
#include <vector>

#include "ctb/hash.hpp"
#include "ctb/identity.hpp"
#include "ctb/incident.hpp"
#include "ctb/transaction.hpp"

namespace ctb {

struct Evidence {
  Bytes payload;
  Nonce nonce;
  Signature creator_signature;
  Digest id;
};

Digest evidence_id(ByteView payload, const Signature &creator_signature,
                   const Nonce &nonce,
                   HashAlgorithm alg = HashAlgorithm::Sha256);

struct EvidenceLogEvent {
  Digest id;
  Address creator;
  Timestamp timestamp = 0;
  /// Hash of the payload alone.
  Digest digest;
  /// Creator's signature over the canonical bytes of the fields above.
  Signature signature;

  Bytes signed_bytes() const;
  Bytes serialize() const;
  static EvidenceLogEvent deserialize(ByteView data);

  bool operator==(const EvidenceLogEvent &) const = default;
};

struct ErasureReceipt {
  Digest id;
  Nonce nonce;
  Timestamp erased_at = 0;
  Address erased_by;
};

struct EvidenceStoreConfig {
  HashAlgorithm hash = HashAlgorithm::Sha256;
  std::uint64_t max_payload_bytes = std::uint64_t{1} << 30;
};

using NonceSource = std::function<Nonce()>;

Nonce random_nonce();

class EvidenceStore {
public:
  explicit EvidenceStore(std::filesystem::path root,
                         EvidenceStoreConfig config = {},
                         Clock clock = system_now);

  /// Test hook: replace the CSPRNG nonce source.
  void set_nonce_source(NonceSource source);
  void set_clock(Clock clock);

  /// Persist a new payload signed by `creator` and return the signed log
  /// event. Throws PermissionDenied for non-ISP creators, InvalidEvidence
  /// for empty or oversized payloads.
  EvidenceLogEvent ev_gen(const Participant &creator, const SigningKey &key,
                          ByteView payload, const IncidentDescriptor &incident);

  /// Streams a file (raw or pcap, not parsed) into the store.
  EvidenceLogEvent ingest_file(const Participant &creator,
                               const SigningKey &key,
                               const std::filesystem::path &file,
                               const IncidentDescriptor &incident);

  /// Throws NotFound, Erased, or IntegrityError when the stored bytes no
  /// longer hash to the id.
  Evidence fetch(const Digest &id) const;

  /// Destroys the payload and leaves a tombstone. Only the creating ISP may
  /// erase. Throws PermissionDenied, NotFound, AlreadyErased.
  ErasureReceipt erase(const Digest &id, const Participant &caller);

  bool contains(const Digest &id) const;
  bool is_erased(const Digest &id) const;
  EvidenceLogEvent event(const Digest &id) const;
  IncidentDescriptor incident(const Digest &id) const;
  std::optional<ErasureReceipt> tombstone(const Digest &id) const;
  std::vector<Digest> list() const;

  /// Recompute the id from stored payload, signature and nonce.
  bool verify_integrity(const Digest &id) const;

  const std::filesystem::path &root() const { return root_; }
  const EvidenceStoreConfig &config() const { return config_; }

private:
  struct Meta;
  Meta load_meta(const Digest &id) const;
  void save_meta(const Meta &meta) const;
  std::filesystem::path entry_dir(const Digest &id) const;

  std::filesystem::path root_;
  EvidenceStoreConfig config_;
  Clock clock_;
  NonceSource nonce_source_;
  mutable std::shared_mutex mutex_;
};

/// Turn a verified log event into a CREATE proposal: creator and first
/// owner are the event's creator, logged_at carries the event timestamp.
/// Throws IntegrityError when the event signature does not verify.
CreateProposal tx_gen(const EvidenceLogEvent &event,
                      const IncidentDescriptor &meta,
                      const Certificate &creator_cert,
                      const TrustAnchor &anchor);

} // namespace ctb
