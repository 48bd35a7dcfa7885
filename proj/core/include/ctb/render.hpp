#pragma once

// Structured (JSON) renderings shared by the explorer API and the CLI.
// Field order is fixed; byte strings are lower-case hex.

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "ctb/chaincode.hpp"
#include "ctb/evidence_store.hpp"
#include "ctb/ledger.hpp"

namespace ctb::render {

using Json = nlohmann::ordered_json;

Json proposal(const Proposal &p);
Json transaction(const Transaction &tx,
                 std::optional<TxLocation> location = std::nullopt);
Json block(const Block &b, bool with_txs = true);
Json participant(const Certificate &cert);
Json policy(const ChaincodePolicy &p);
Json interval(const CustodyInterval &i);
Json trail(const Digest &id, const std::vector<CustodyInterval> &intervals);
/// Erased records carry `erased: true` and no payload locator.
Json record(const EvidenceRecord &r, bool erased);
Json device_history(const std::string &device_id,
                    const std::vector<DeviceRecord> &history);
Json report(const VerificationReport &r);
Json incident(const IncidentDescriptor &i);
Json log_event(const EvidenceLogEvent &e);
Json chain_summary(const Ledger &ledger);
Json error(ErrorCode code, const std::string &message);

/// Flat `key: value` lines, nested keys joined with dots, arrays indexed.
std::string text(const Json &doc);

} // namespace ctb::render
