#include "ctb/render.hpp"

#include <algorithm>
#include <sstream>

namespace ctb::render {

namespace {

template <class... Ts> struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

std::string_view access_name(MetadataAccess m) {
  return m == MetadataAccess::Open ? "open" : "owner_only";
}

} // namespace

Json policy(const ChaincodePolicy &p) {
  Json j;
  j["allow_prosecutor_transfer"] = p.allow_prosecutor_transfer;
  j["allow_isp_to_isp"] = p.allow_isp_to_isp;
  j["metadata_access"] = access_name(p.metadata_access);
  return j;
}

Json participant(const Certificate &cert) {
  Json j;
  j["address"] = cert.subject_address.hex();
  j["role"] = to_string(cert.subject_role);
  j["public_key"] = cert.subject_public_key.hex();
  j["issued_at"] = cert.issued_at;
  j["expires_at"] = cert.expires_at;
  return j;
}

Json proposal(const Proposal &p) {
  Json j;
  j["kind"] = to_string(kind_of(p));
  std::visit(
      overloaded{
          [&](const GenesisProposal &g) {
            j["ca_root"] = g.ca_root.hex();
            j["hash"] = to_string(g.hash);
            j["orderer"] = g.orderer.hex();
            j["policy"] = policy(g.policy);
            Json roster = Json::array();
            for (const auto &c : g.roster)
              roster.push_back(participant(c));
            j["roster"] = std::move(roster);
            j["issued_at"] = g.issued_at;
          },
          [&](const CreateProposal &c) {
            j["id"] = c.id.hex();
            j["creator"] = c.creator.hex();
            j["dsc"] = c.dsc;
            j["tm"] = c.tm;
            j["owner"] = c.owner.hex();
            j["device_type"] = c.device_type;
            j["logged_at"] = c.logged_at;
            j["issued_at"] = c.issued_at;
          },
          [&](const TransferProposal &t) {
            j["id"] = t.id.hex();
            j["new_owner"] = t.new_owner.hex();
            j["dsc_amendment"] = t.dsc_amendment;
            j["issued_at"] = t.issued_at;
          },
          [&](const EraseProposal &e) {
            j["id"] = e.id.hex();
            j["issued_at"] = e.issued_at;
          },
          [&](const AccessProposal &a) {
            j["id"] = a.id.hex();
            j["issued_at"] = a.issued_at;
          },
          [&](const DeviceRegisterProposal &d) {
            j["device_id"] = d.device_id;
            j["firmware_hash"] = d.firmware_hash.hex();
            j["config_hash"] = d.config_hash.hex();
            j["issued_at"] = d.issued_at;
          },
          [&](const DeviceVerifyProposal &d) {
            j["device_id"] = d.device_id;
            j["firmware_hash"] = d.firmware_hash.hex();
            j["config_hash"] = d.config_hash.hex();
            j["issued_at"] = d.issued_at;
          },
      },
      p);
  return j;
}

Json transaction(const Transaction &tx, std::optional<TxLocation> location) {
  Json j;
  j["tx_id"] = tx.tx_id.hex();
  j["kind"] = to_string(tx.kind);
  j["submitter"] = tx.submitter.hex();
  j["submitter_signature"] = tx.submitter_signature.hex();
  if (location) {
    j["height"] = location->height;
    j["index"] = location->index;
  }
  try {
    j["proposal"] = proposal(tx.decoded());
  } catch (const Error &) {
    j["proposal"] = nullptr;
    j["proposal_bytes"] = to_hex(tx.proposal);
  }
  return j;
}

Json block(const Block &b, bool with_txs) {
  Json j;
  j["height"] = b.height;
  j["block_hash"] = b.block_hash.hex();
  j["prev_hash"] = b.prev_hash.hex();
  j["timestamp"] = b.timestamp;
  j["tx_merkle_root"] = b.tx_merkle_root.hex();
  j["proposer"] = b.proposer.hex();
  j["proposer_signature"] = b.proposer_signature.hex();
  j["tx_count"] = b.txs.size();
  if (with_txs) {
    Json txs = Json::array();
    for (std::size_t i = 0; i < b.txs.size(); ++i)
      txs.push_back(transaction(b.txs[i], TxLocation{b.height, i}));
    j["txs"] = std::move(txs);
  } else {
    Json ids = Json::array();
    for (const auto &tx : b.txs)
      ids.push_back(tx.tx_id.hex());
    j["tx_ids"] = std::move(ids);
  }
  return j;
}

Json interval(const CustodyInterval &i) {
  Json j;
  j["owner"] = i.owner.hex();
  j["start"] = i.start;
  j["end"] = i.end ? Json(*i.end) : Json(nullptr);
  return j;
}

Json trail(const Digest &id, const std::vector<CustodyInterval> &intervals) {
  Json j;
  j["id"] = id.hex();
  Json arr = Json::array();
  for (const auto &i : intervals)
    arr.push_back(interval(i));
  j["trail"] = std::move(arr);
  return j;
}

Json record(const EvidenceRecord &r, bool erased) {
  Json j;
  j["id"] = r.id.hex();
  j["creator"] = r.creator.hex();
  j["dsc"] = r.dsc;
  j["tm"] = r.tm;
  j["own"] = r.own.hex();
  j["own_prev"] = r.own_prev.is_zero() ? Json(nullptr) : Json(r.own_prev.hex());
  j["device_type"] = r.device_type;
  Json times = Json::array();
  for (const auto &i : r.custody_times)
    times.push_back(interval(i));
  j["custody_times"] = std::move(times);
  j["erased"] = erased;
  if (!erased)
    j["payload_locator"] = "evdb:" + r.creator.hex() + "/" + r.id.hex();
  return j;
}

Json device_history(const std::string &device_id,
                    const std::vector<DeviceRecord> &history) {
  Json j;
  j["device_id"] = device_id;
  Json arr = Json::array();
  for (const auto &d : history) {
    Json e;
    e["firmware_hash"] = d.firmware_hash.hex();
    e["config_hash"] = d.config_hash.hex();
    e["registered_at"] = d.registered_at;
    e["registrar"] = d.registrar.hex();
    arr.push_back(std::move(e));
  }
  j["history"] = std::move(arr);
  return j;
}

Json report(const VerificationReport &r) {
  Json j;
  j["valid"] = r.valid;
  j["first_invalid_height"] =
      r.first_invalid_height ? Json(*r.first_invalid_height) : Json(nullptr);
  j["tip_hash"] = r.tip_hash ? Json(r.tip_hash->hex()) : Json(nullptr);
  j["block_count"] = r.blocks.size();
  Json failures = Json::array();
  for (const auto &b : r.blocks) {
    if (b.ok)
      continue;
    Json f;
    f["height"] = b.height;
    f["reason"] = b.reason ? Json(to_string(*b.reason)) : Json(nullptr);
    f["detail"] = b.detail;
    failures.push_back(std::move(f));
  }
  j["failures"] = std::move(failures);
  return j;
}

Json incident(const IncidentDescriptor &i) {
  Json j;
  j["attack_kind"] = to_string(i.attack_kind);
  j["source_device"] = i.source_device;
  j["target"] = i.target;
  j["tm"] = i.tm;
  j["summary"] = i.summary;
  j["device_type"] = i.device_type;
  return j;
}

Json log_event(const EvidenceLogEvent &e) {
  Json j;
  j["id"] = e.id.hex();
  j["creator"] = e.creator.hex();
  j["timestamp"] = e.timestamp;
  j["digest"] = e.digest.hex();
  j["signature"] = e.signature.hex();
  return j;
}

Json chain_summary(const Ledger &ledger) {
  Json j;
  auto state = ledger.snapshot();
  j["height"] = ledger.height();
  auto tip = ledger.tip_hash();
  j["tip_hash"] = tip ? Json(tip->hex()) : Json(nullptr);
  if (state->params) {
    j["hash"] = to_string(state->params->hash);
    j["orderer"] = state->params->orderer.hex();
    j["ca_root"] = state->params->ca_root.hex();
    j["policy"] = policy(state->params->policy);
  }
  j["participants"] = state->roster.size();
  j["evidence"] = state->evidence.size();
  j["erased"] = state->erased.size();
  return j;
}

Json error(ErrorCode code, const std::string &message) {
  Json j;
  j["error"] = to_string(code);
  j["message"] = message;
  return j;
}

namespace {

void flatten(const Json &doc, const std::string &prefix, std::ostream &out) {
  if (doc.is_object()) {
    if (doc.empty())
      out << prefix << ": {}\n";
    for (const auto &[k, v] : doc.items())
      flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (doc.is_array()) {
    if (doc.empty())
      out << prefix << ": []\n";
    for (std::size_t i = 0; i < doc.size(); ++i)
      flatten(doc[i], prefix + "[" + std::to_string(i) + "]", out);
  } else if (doc.is_string()) {
    // Control characters would break the one-field-per-line layout.
    const auto &v = doc.get_ref<const std::string &>();
    bool plain = std::none_of(v.begin(), v.end(), [](unsigned char c) {
      return c < 0x20 || c == 0x7f;
    });
    out << prefix << ": " << (plain ? v : doc.dump()) << "\n";
  } else {
    out << prefix << ": " << doc.dump() << "\n";
  }
}

} // namespace

std::string text(const Json &doc) {
  std::ostringstream out;
  flatten(doc, "", out);
  return out.str();
}

} // namespace ctb::render
