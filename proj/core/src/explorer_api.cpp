#include "ctb/explorer_api.hpp"

#include <charconv>

#include "ctb/render.hpp"

namespace ctb {

namespace {

using render::Json;

int status_of(ErrorCode code) {
  switch (code) {
  case ErrorCode::NotFound:
    return 404;
  case ErrorCode::Erased:
    return 410;
  case ErrorCode::Unauthenticated:
    return 401;
  case ErrorCode::Malformed:
  case ErrorCode::InvalidArgument:
  case ErrorCode::IntegrityError:
  case ErrorCode::SpecError:
    return 400;
  case ErrorCode::IoError:
  case ErrorCode::ReplayError:
  case ErrorCode::BlockRejected:
    return 500;
  default:
    return 403;
  }
}

ApiResponse json_response(const Json &doc, int status = 200) {
  ApiResponse r;
  r.status = status;
  r.body = doc.dump();
  return r;
}

ApiResponse error_response(ErrorCode code, const std::string &message,
                           std::optional<int> status = std::nullopt) {
  return json_response(render::error(code, message),
                       status.value_or(status_of(code)));
}

std::vector<std::string> split_path(const std::string &path) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < path.size()) {
    auto j = path.find('/', i);
    if (j == std::string::npos)
      j = path.size();
    if (j > i)
      out.push_back(path.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

std::uint64_t parse_u64(const std::string &s, const char *what) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw Error(ErrorCode::InvalidArgument,
                std::string("invalid ") + what + ": " + s);
  return v;
}

Digest parse_digest(const std::string &hex) {
  try {
    return Digest::from_hex(hex);
  } catch (const Error &) {
    throw Error(ErrorCode::InvalidArgument, "invalid 32-byte hex id: " + hex);
  }
}

Json parse_body(const std::string &body) {
  try {
    return Json::parse(body);
  } catch (const Json::exception &e) {
    throw Error(ErrorCode::Malformed, std::string("invalid JSON body: ") +
                                          e.what());
  }
}

std::string body_string(const Json &j, const char *key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string())
    throw Error(ErrorCode::Malformed, std::string("missing field ") + key);
  return it->get<std::string>();
}

Transaction decode_transaction(const std::string &b64) {
  try {
    return Transaction::deserialize(from_base64(b64));
  } catch (const Error &e) {
    throw Error(ErrorCode::Malformed,
                std::string("undecodable transaction: ") + e.what());
  }
}

} // namespace

ExplorerService::ExplorerService(LocalNode &node, ExplorerConfig config)
    : node_(node), config_(config) {}

Bytes ExplorerService::login_message(const Nonce &challenge) {
  ByteWriter w;
  w.str("ctb-explorer-login").fixed(challenge);
  return std::move(w).take();
}

ApiResponse ExplorerService::handle(const ApiRequest &request) {
  try {
    return route(request);
  } catch (const BlockRejected &e) {
    return error_response(e.code(), e.what());
  } catch (const Error &e) {
    return error_response(e.code(), e.what());
  } catch (const std::exception &e) {
    return error_response(ErrorCode::IoError, e.what(), 500);
  }
}

ApiResponse ExplorerService::challenge(const ApiRequest &request) {
  auto body = parse_body(request.body);
  Address address;
  try {
    address = Address::from_hex(body_string(body, "address"));
  } catch (const Error &e) {
    throw Error(ErrorCode::Malformed, e.what());
  }
  auto state = node_.ledger().snapshot();
  if (!state->find_participant(address))
    throw Error(ErrorCode::UnknownParticipant,
                "address " + address.hex() + " is not enrolled");
  auto nonce = random_nonce();
  auto expires = node_.now() + config_.challenge_ttl;
  {
    std::lock_guard lock(mutex_);
    challenges_[nonce] = {address, expires};
  }
  Json j;
  j["challenge"] = nonce.hex();
  j["expires_at"] = expires;
  return json_response(j);
}

ApiResponse ExplorerService::login(const ApiRequest &request) {
  auto body = parse_body(request.body);
  Address address;
  Nonce nonce;
  Bytes signature;
  try {
    address = Address::from_hex(body_string(body, "address"));
    nonce = Nonce::from_hex(body_string(body, "challenge"));
    signature = from_hex(body_string(body, "signature"));
  } catch (const Error &e) {
    throw Error(ErrorCode::Malformed, e.what());
  }
  const auto now = node_.now();
  {
    std::lock_guard lock(mutex_);
    auto it = challenges_.find(nonce);
    bool usable = it != challenges_.end() && it->second.address == address &&
                  it->second.expires_at > now;
    if (it != challenges_.end())
      challenges_.erase(it);
    if (!usable)
      throw Error(ErrorCode::Unauthenticated, "unknown or expired challenge");
  }
  auto state = node_.ledger().snapshot();
  const auto *cert = state->find_participant(address);
  if (!cert || !state->params ||
      !verify(state->params->anchor(), *cert, login_message(nonce), signature,
              now))
    throw Error(ErrorCode::Unauthenticated, "challenge signature invalid");
  auto token = random_nonce().hex();
  auto expires = now + config_.session_ttl;
  {
    std::lock_guard lock(mutex_);
    sessions_[token] = {address, expires};
  }
  Json j;
  j["token"] = token;
  j["address"] = address.hex();
  j["role"] = to_string(cert->subject_role);
  j["expires_at"] = expires;
  return json_response(j);
}

Address ExplorerService::authenticate(const ApiRequest &request) {
  auto h = request.headers.find("authorization");
  const std::string prefix = "Bearer ";
  if (h == request.headers.end() || h->second.rfind(prefix, 0) != 0)
    throw Error(ErrorCode::Unauthenticated, "missing bearer token");
  auto token = h->second.substr(prefix.size());
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(token);
  if (it == sessions_.end())
    throw Error(ErrorCode::Unauthenticated, "unknown session token");
  if (it->second.expires_at <= node_.now()) {
    sessions_.erase(it);
    throw Error(ErrorCode::Unauthenticated, "session expired");
  }
  return it->second.address;
}

ApiResponse ExplorerService::route(const ApiRequest &request) {
  auto parts = split_path(request.path);
  const bool get = request.method == "GET";
  const bool post = request.method == "POST";

  if (post && parts.size() == 2 && parts[0] == "session") {
    if (parts[1] == "challenge")
      return challenge(request);
    if (parts[1] == "login")
      return login(request);
  }

  const auto caller = authenticate(request);
  auto &ledger = node_.ledger();
  auto state = ledger.snapshot();

  if (post && parts.size() == 2 && parts[0] == "invoke")
    return invoke(parts[1], caller, request);
  if (!get)
    throw Error(ErrorCode::NotFound,
                "no route for " + request.method + " " + request.path);

  if (parts.size() == 1 && parts[0] == "chain")
    return json_response(render::chain_summary(ledger));
  if (parts.size() == 2 && parts[0] == "chain" && parts[1] == "verify")
    return json_response(render::report(verify_chain(ledger.store())));
  if (parts.size() == 1 && parts[0] == "participants") {
    Json arr = Json::array();
    for (const auto &[_, cert] : state->roster)
      arr.push_back(render::participant(cert));
    Json j;
    j["participants"] = std::move(arr);
    return json_response(j);
  }

  if (!parts.empty() && parts[0] == "blocks") {
    if (parts.size() == 1) {
      std::uint64_t offset = 0, limit = 20;
      if (auto it = request.query.find("offset"); it != request.query.end())
        offset = parse_u64(it->second, "offset");
      if (auto it = request.query.find("limit"); it != request.query.end())
        limit = parse_u64(it->second, "limit");
      limit = std::min<std::uint64_t>(limit, config_.max_page);
      auto height = ledger.height();
      auto from = std::min(offset, height);
      auto to = std::min(height, from + limit);
      Json arr = Json::array();
      for (const auto &b : ledger.blocks(from, to))
        arr.push_back(render::block(b, false));
      Json j;
      j["height"] = height;
      j["offset"] = from;
      j["limit"] = limit;
      j["blocks"] = std::move(arr);
      return json_response(j);
    }
    if (parts.size() == 2) {
      std::optional<Block> b;
      if (parts[1] == "latest")
        b = ledger.latest();
      else
        b = ledger.block(parse_u64(parts[1], "height"));
      if (!b)
        throw Error(ErrorCode::NotFound, "no block " + parts[1]);
      return json_response(render::block(*b));
    }
  }

  if (parts.size() == 2 && parts[0] == "tx") {
    auto id = parse_digest(parts[1]);
    auto loc = ledger.find_tx(id);
    if (!loc)
      throw Error(ErrorCode::NotFound, "no transaction " + parts[1]);
    return json_response(render::transaction(*ledger.transaction(id), loc));
  }

  if (!parts.empty() && parts[0] == "evidence") {
    if (parts.size() == 1) {
      Json arr = Json::array();
      for (const auto &[id, rec] : state->evidence) {
        try {
          chaincode::query_metadata(*state, caller, id);
        } catch (const Error &) {
          continue;
        }
        arr.push_back(render::record(rec, state->is_erased(id)));
      }
      Json j;
      j["evidence"] = std::move(arr);
      return json_response(j);
    }
    auto id = parse_digest(parts[1]);
    if (parts.size() == 2) {
      const auto &rec = chaincode::query_metadata(*state, caller, id);
      return json_response(render::record(rec, state->is_erased(id)));
    }
    if (parts.size() == 3 && parts[2] == "trail") {
      chaincode::query_metadata(*state, caller, id);
      return json_response(render::trail(id, custody_trail(*state, id)));
    }
    if (parts.size() == 3 && parts[2] == "payload")
      return payload(id, caller, request);
  }

  if (parts.size() == 2 && parts[0] == "devices") {
    auto it = state->devices.find(parts[1]);
    if (it == state->devices.end() || it->second.empty())
      throw Error(ErrorCode::NotFound, "no history for device " + parts[1]);
    return json_response(render::device_history(parts[1], it->second));
  }

  throw Error(ErrorCode::NotFound, "no route for GET " + request.path);
}

ApiResponse ExplorerService::invoke(const std::string &kind,
                                    const Address &caller,
                                    const ApiRequest &request) {
  static const std::map<std::string, TxKind> kinds = {
      {"create", TxKind::Create},
      {"transfer", TxKind::Transfer},
      {"erase", TxKind::Erase},
      {"register_device", TxKind::DeviceRegister},
      {"verify_device", TxKind::DeviceVerify},
      {"access", TxKind::Access},
  };
  auto k = kinds.find(kind);
  if (k == kinds.end())
    throw Error(ErrorCode::NotFound, "unknown invoke " + kind);
  auto body = parse_body(request.body);
  auto tx = decode_transaction(body_string(body, "transaction"));
  if (tx.kind != k->second)
    throw Error(ErrorCode::InvalidArgument,
                "transaction kind " + std::string(to_string(tx.kind)) +
                    " does not match /invoke/" + kind);
  if (tx.submitter != caller)
    throw Error(ErrorCode::PermissionDenied,
                "transaction submitter is not the session participant");
  Proposal proposal;
  try {
    proposal = tx.decoded();
  } catch (const Error &e) {
    throw Error(ErrorCode::Malformed, e.what());
  }

  std::optional<EraseProposal> erase;
  if (tx.kind == TxKind::Erase) {
    erase = std::get<EraseProposal>(proposal);
    if (auto code = chaincode::check(*node_.ledger().snapshot(), caller,
                                     proposal);
        code && !node_.ledger().find_tx(tx.tx_id))
      throw Error(*code, "erase refused");
  }

  auto result = node_.submit(tx);

  if (erase && !result.duplicate) {
    auto state = node_.ledger().snapshot();
    const auto *rec = state->find_evidence(erase->id);
    const auto *cert = state->find_participant(caller);
    if (rec && cert) {
      auto &store = node_.evidence_store(rec->creator);
      if (store.contains(erase->id) && !store.is_erased(erase->id))
        store.erase(erase->id, Participant::from_certificate(*cert));
    }
  }

  Json j;
  j["tx_id"] = result.tx_id.hex();
  j["height"] = result.height;
  j["index"] = result.index;
  j["duplicate"] = result.duplicate;
  j["status"] = "committed";
  return json_response(j);
}

ApiResponse ExplorerService::payload(const Digest &id, const Address &caller,
                                     const ApiRequest &request) {
  auto state = node_.ledger().snapshot();
  const auto *rec = state->find_evidence(id);
  if (!rec)
    throw Error(ErrorCode::NotFound, "unknown evidence " + id.hex());
  if (state->is_erased(id))
    throw Error(ErrorCode::Erased, "evidence " + id.hex() + " was erased");
  if (rec->own != caller)
    throw Error(ErrorCode::PermissionDenied,
                "only the current owner may retrieve the payload");
  auto h = request.headers.find("x-access-transaction");
  if (h == request.headers.end())
    throw Error(ErrorCode::InvalidArgument,
                "X-Access-Transaction header required");
  auto tx = decode_transaction(h->second);
  if (tx.kind != TxKind::Access || tx.submitter != caller)
    throw Error(ErrorCode::PermissionDenied,
                "access transaction must be an ACCESS signed by the caller");
  AccessProposal access;
  try {
    access = std::get<AccessProposal>(tx.decoded());
  } catch (const std::exception &e) {
    throw Error(ErrorCode::Malformed, e.what());
  }
  if (access.id != id)
    throw Error(ErrorCode::InvalidArgument,
                "access transaction names a different evidence id");
  auto committed = node_.submit(tx);

  auto ev = node_.evidence_store(rec->creator).fetch(id);
  ApiResponse r;
  r.content_type = "application/octet-stream";
  r.body.assign(ev.payload.begin(), ev.payload.end());
  r.headers["X-Evidence-Id"] = ev.id.hex();
  r.headers["X-Evidence-Nonce"] = ev.nonce.hex();
  r.headers["X-Creator-Signature"] = ev.creator_signature.hex();
  r.headers["X-Access-Tx"] = committed.tx_id.hex();
  return r;
}

} // namespace ctb
