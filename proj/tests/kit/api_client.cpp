#include "api_client.hpp"

namespace ctb::testkit {

ApiClient::ApiClient(ExplorerService &service, const SigningKey &key)
    : service_(service), key_(key) {
  auto me = address_of(key.public_key()).hex();
  ApiRequest ask{"POST", "/session/challenge", {}, {},
                 nlohmann::json{{"address", me}}.dump()};
  auto r = service_.handle(ask);
  if (r.status != 200)
    throw Error(ErrorCode::Unauthenticated, "challenge refused: " + r.body);
  auto challenge = nlohmann::json::parse(r.body).at("challenge").get<std::string>();
  auto sig = key.sign(
      ExplorerService::login_message(Nonce::from_hex(challenge)));
  ApiRequest login{"POST", "/session/login", {}, {},
                   nlohmann::json{{"address", me},
                                  {"challenge", challenge},
                                  {"signature", sig.hex()}}
                       .dump()};
  r = service_.handle(login);
  if (r.status != 200)
    throw Error(ErrorCode::Unauthenticated, "login refused: " + r.body);
  token_ = nlohmann::json::parse(r.body).at("token").get<std::string>();
}

ApiResponse ApiClient::get(const std::string &path,
                           std::map<std::string, std::string> headers) const {
  ApiRequest req;
  req.method = "GET";
  auto q = path.find('?');
  req.path = path.substr(0, q);
  if (q != std::string::npos) {
    auto rest = path.substr(q + 1);
    std::size_t start = 0;
    while (start <= rest.size()) {
      auto amp = rest.find('&', start);
      auto kv = rest.substr(start, amp == std::string::npos ? std::string::npos
                                                            : amp - start);
      auto eq = kv.find('=');
      if (!kv.empty())
        req.query[kv.substr(0, eq)] =
            eq == std::string::npos ? "" : kv.substr(eq + 1);
      if (amp == std::string::npos)
        break;
      start = amp + 1;
    }
  }
  req.headers = std::move(headers);
  req.headers["authorization"] = "Bearer " + token_;
  return service_.handle(req);
}

ApiResponse ApiClient::post(const std::string &path,
                            const std::string &body) const {
  ApiRequest req{"POST", path, {}, {{"authorization", "Bearer " + token_}}, body};
  return service_.handle(req);
}

ApiResponse ApiClient::invoke(const std::string &kind,
                              const Transaction &tx) const {
  return post("/invoke/" + kind,
              nlohmann::json{{"transaction", to_base64(tx.serialize())}}.dump());
}

ApiResponse ApiClient::payload(const Digest &id, const Address &me,
                               Timestamp now) const {
  auto alg = service_.node().ledger().snapshot()->hash_algorithm();
  auto tx = make_transaction(AccessProposal{id, now}, me, key_, alg);
  return get("/evidence/" + id.hex() + "/payload",
             {{"x-access-transaction", to_base64(tx.serialize())}});
}

} // namespace ctb::testkit
