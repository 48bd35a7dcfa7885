#include "ctb/evidence_store.hpp"

#include <fstream>
#include <mutex>

#include <nlohmann/json.hpp>
#include <sodium.h>

#include "ctb/error.hpp"

namespace ctb {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

Digest evidence_id(ByteView payload, const Signature &creator_signature,
                   const Nonce &nonce, HashAlgorithm alg) {
  return Hasher(alg)
      .update(payload)
      .update(creator_signature.view())
      .update(nonce.view())
      .finish();
}

Bytes EvidenceLogEvent::signed_bytes() const {
  return ByteWriter()
      .fixed(id)
      .fixed(creator)
      .i64(timestamp)
      .fixed(digest)
      .bytes();
}

Bytes EvidenceLogEvent::serialize() const {
  ByteWriter w;
  w.fixed(id).fixed(creator).i64(timestamp).fixed(digest).fixed(signature);
  return std::move(w).take();
}

EvidenceLogEvent EvidenceLogEvent::deserialize(ByteView data) {
  ByteReader r(data);
  EvidenceLogEvent e;
  e.id = r.fixed<Digest>();
  e.creator = r.fixed<Address>();
  e.timestamp = r.i64();
  e.digest = r.fixed<Digest>();
  e.signature = r.fixed<Signature>();
  r.expect_end();
  return e;
}

Nonce random_nonce() {
  ensure_crypto();
  Nonce n;
  randombytes_buf(n.data(), Nonce::size);
  return n;
}

struct EvidenceStore::Meta {
  Digest id;
  Nonce nonce;
  Signature creator_signature;
  EvidenceLogEvent event;
  IncidentDescriptor incident;
  std::uint64_t payload_size = 0;
  bool erased = false;
  Timestamp erased_at = 0;
  Address erased_by;
};

namespace {

json incident_json(const IncidentDescriptor &d) {
  return {{"attack_kind", to_string(d.attack_kind)},
          {"source_device", d.source_device},
          {"target", d.target},
          {"tm", d.tm},
          {"summary", d.summary},
          {"device_type", d.device_type}};
}

IncidentDescriptor incident_from_json(const json &j) {
  IncidentDescriptor d;
  d.attack_kind = parse_attack_kind(j.at("attack_kind").get<std::string>());
  d.source_device = j.at("source_device").get<std::string>();
  d.target = j.at("target").get<std::string>();
  d.tm = j.at("tm").get<Timestamp>();
  d.summary = j.at("summary").get<std::string>();
  d.device_type = j.at("device_type").get<std::string>();
  return d;
}

void write_atomically(const fs::path &path, ByteView data) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char *>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out.flush())
      throw Error(ErrorCode::IoError, "failed to write " + tmp.string());
  }
  fs::rename(tmp, path);
}

Bytes read_all(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::IoError, "cannot read " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

} // namespace

EvidenceStore::EvidenceStore(fs::path root, EvidenceStoreConfig config,
                             Clock clock)
    : root_(std::move(root)), config_(config), clock_(std::move(clock)),
      nonce_source_(random_nonce) {
  fs::create_directories(root_ / "objects");
}

void EvidenceStore::set_nonce_source(NonceSource source) {
  std::unique_lock lock(mutex_);
  nonce_source_ = std::move(source);
}

void EvidenceStore::set_clock(Clock clock) {
  std::unique_lock lock(mutex_);
  clock_ = std::move(clock);
}

fs::path EvidenceStore::entry_dir(const Digest &id) const {
  return root_ / "objects" / id.hex();
}

void EvidenceStore::save_meta(const Meta &m) const {
  json j = {
      {"id", m.id.hex()},
      {"nonce", m.nonce.hex()},
      {"creator_signature", m.creator_signature.hex()},
      {"payload_size", m.payload_size},
      {"event",
       {{"creator", m.event.creator.hex()},
        {"timestamp", m.event.timestamp},
        {"digest", m.event.digest.hex()},
        {"signature", m.event.signature.hex()}}},
      {"incident", incident_json(m.incident)},
      {"erased", m.erased},
  };
  if (m.erased)
    j["tombstone"] = {{"erased_at", m.erased_at},
                      {"erased_by", m.erased_by.hex()}};
  write_atomically(entry_dir(m.id) / "meta.json", as_bytes(j.dump(2) + "\n"));
}

EvidenceStore::Meta EvidenceStore::load_meta(const Digest &id) const {
  auto path = entry_dir(id) / "meta.json";
  if (!fs::exists(path))
    throw Error(ErrorCode::NotFound, "no evidence " + id.hex());
  try {
    auto j = json::parse(to_string(read_all(path)));
    Meta m;
    m.id = Digest::from_hex(j.at("id").get<std::string>());
    m.nonce = Nonce::from_hex(j.at("nonce").get<std::string>());
    m.creator_signature =
        Signature::from_hex(j.at("creator_signature").get<std::string>());
    m.payload_size = j.at("payload_size").get<std::uint64_t>();
    const auto &ev = j.at("event");
    m.event.id = m.id;
    m.event.creator = Address::from_hex(ev.at("creator").get<std::string>());
    m.event.timestamp = ev.at("timestamp").get<Timestamp>();
    m.event.digest = Digest::from_hex(ev.at("digest").get<std::string>());
    m.event.signature =
        Signature::from_hex(ev.at("signature").get<std::string>());
    m.incident = incident_from_json(j.at("incident"));
    m.erased = j.at("erased").get<bool>();
    if (m.erased) {
      const auto &t = j.at("tombstone");
      m.erased_at = t.at("erased_at").get<Timestamp>();
      m.erased_by = Address::from_hex(t.at("erased_by").get<std::string>());
    }
    return m;
  } catch (const json::exception &e) {
    throw Error(ErrorCode::IntegrityError,
                "corrupt metadata for " + id.hex() + ": " + e.what());
  }
}

EvidenceLogEvent EvidenceStore::ev_gen(const Participant &creator,
                                       const SigningKey &key, ByteView payload,
                                       const IncidentDescriptor &incident) {
  if (creator.role != Role::Isp)
    throw Error(ErrorCode::PermissionDenied,
                "only an ISP may insert evidence");
  if (key.public_key() != creator.public_key)
    throw Error(ErrorCode::PermissionDenied,
                "signing key does not belong to the creator");
  if (payload.empty())
    throw Error(ErrorCode::InvalidEvidence, "evidence payload is empty");
  if (payload.size() > config_.max_payload_bytes)
    throw Error(ErrorCode::InvalidEvidence,
                "evidence payload exceeds the configured size cap");

  std::unique_lock lock(mutex_);
  Meta m;
  m.creator_signature = key.sign(payload);
  m.nonce = nonce_source_();
  m.id = evidence_id(payload, m.creator_signature, m.nonce, config_.hash);
  m.payload_size = payload.size();
  m.incident = incident;

  m.event.id = m.id;
  m.event.creator = creator.address;
  m.event.timestamp = clock_();
  m.event.digest = hash(payload, config_.hash);
  m.event.signature = key.sign(m.event.signed_bytes());

  auto dir = entry_dir(m.id);
  if (fs::exists(dir))
    throw Error(ErrorCode::AlreadyExists, "evidence " + m.id.hex() + " exists");
  fs::create_directories(dir);
  write_atomically(dir / "payload.bin", payload);
  save_meta(m);
  return m.event;
}

EvidenceLogEvent EvidenceStore::ingest_file(const Participant &creator,
                                            const SigningKey &key,
                                            const fs::path &file,
                                            const IncidentDescriptor &incident) {
  std::error_code ec;
  auto size = fs::file_size(file, ec);
  if (ec)
    throw Error(ErrorCode::IoError, "cannot stat " + file.string());
  if (size > config_.max_payload_bytes)
    throw Error(ErrorCode::InvalidEvidence,
                file.string() + " exceeds the configured size cap");
  std::ifstream in(file, std::ios::binary);
  Bytes payload;
  payload.reserve(size);
  std::array<char, 1 << 16> chunk;
  while (in.read(chunk.data(), chunk.size()) || in.gcount() > 0)
    payload.insert(payload.end(), chunk.data(), chunk.data() + in.gcount());
  return ev_gen(creator, key, payload, incident);
}

Evidence EvidenceStore::fetch(const Digest &id) const {
  std::shared_lock lock(mutex_);
  auto m = load_meta(id);
  if (m.erased)
    throw Error(ErrorCode::Erased, "evidence " + id.hex() + " was erased");
  Evidence ev;
  ev.payload = read_all(entry_dir(id) / "payload.bin");
  ev.nonce = m.nonce;
  ev.creator_signature = m.creator_signature;
  ev.id = evidence_id(ev.payload, ev.creator_signature, ev.nonce, config_.hash);
  if (ev.id != id)
    throw Error(ErrorCode::IntegrityError,
                "stored payload no longer matches id " + id.hex());
  return ev;
}

ErasureReceipt EvidenceStore::erase(const Digest &id, const Participant &caller) {
  std::unique_lock lock(mutex_);
  auto m = load_meta(id);
  if (caller.role != Role::Isp || caller.address != m.event.creator)
    throw Error(ErrorCode::PermissionDenied,
                "only the creating ISP may erase evidence");
  if (m.erased)
    throw Error(ErrorCode::AlreadyErased, "evidence " + id.hex() +
                                              " was already erased");
  auto payload = entry_dir(id) / "payload.bin";
  if (fs::exists(payload)) {
    // Overwrite before unlinking so the bytes do not linger in the file.
    auto size = fs::file_size(payload);
    write_atomically(payload, Bytes(size, 0));
    fs::remove(payload);
  }
  m.erased = true;
  m.erased_at = clock_();
  m.erased_by = caller.address;
  save_meta(m);
  return {m.id, m.nonce, m.erased_at, m.erased_by};
}

bool EvidenceStore::contains(const Digest &id) const {
  std::shared_lock lock(mutex_);
  return fs::exists(entry_dir(id) / "meta.json");
}

bool EvidenceStore::is_erased(const Digest &id) const {
  std::shared_lock lock(mutex_);
  return load_meta(id).erased;
}

EvidenceLogEvent EvidenceStore::event(const Digest &id) const {
  std::shared_lock lock(mutex_);
  return load_meta(id).event;
}

IncidentDescriptor EvidenceStore::incident(const Digest &id) const {
  std::shared_lock lock(mutex_);
  return load_meta(id).incident;
}

std::optional<ErasureReceipt> EvidenceStore::tombstone(const Digest &id) const {
  std::shared_lock lock(mutex_);
  auto m = load_meta(id);
  if (!m.erased)
    return std::nullopt;
  return ErasureReceipt{m.id, m.nonce, m.erased_at, m.erased_by};
}

std::vector<Digest> EvidenceStore::list() const {
  std::shared_lock lock(mutex_);
  std::vector<Digest> out;
  for (const auto &entry : fs::directory_iterator(root_ / "objects"))
    if (entry.is_directory())
      out.push_back(Digest::from_hex(entry.path().filename().string()));
  std::sort(out.begin(), out.end());
  return out;
}

bool EvidenceStore::verify_integrity(const Digest &id) const {
  try {
    fetch(id);
    return true;
  } catch (const Error &e) {
    if (e.code() == ErrorCode::IntegrityError)
      return false;
    throw;
  }
}

CreateProposal tx_gen(const EvidenceLogEvent &event,
                      const IncidentDescriptor &meta,
                      const Certificate &creator_cert,
                      const TrustAnchor &anchor) {
  if (creator_cert.subject_address != event.creator ||
      !verify(anchor, creator_cert, event.signed_bytes(),
              event.signature.view(), event.timestamp))
    throw Error(ErrorCode::IntegrityError,
                "evidence log event " + event.id.hex() + " does not verify");
  CreateProposal p;
  p.id = event.id;
  p.creator = event.creator;
  p.dsc = meta.summary;
  p.tm = meta.tm;
  p.owner = event.creator;
  p.device_type = meta.device_type;
  p.logged_at = event.timestamp;
  p.issued_at = event.timestamp;
  return p;
}

} // namespace ctb
