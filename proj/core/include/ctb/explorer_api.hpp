#pragma once

// Query and invoke service over one LocalNode.
//
// Sessions: POST /session/challenge {address} returns a random challenge;
// POST /session/login {address, challenge, signature} verifies the
// participant's signature over login_message(challenge) and returns a
// bearer token. Every other endpoint needs `Authorization: Bearer <token>`.
//
//   GET  /chain                       chain summary
//   GET  /chain/verify                verification report
//   GET  /participants                roster
//   GET  /blocks?offset=&limit=       block headers
//   GET  /blocks/latest, /blocks/{h}  block with transactions
//   GET  /tx/{tx_id}                  transaction and its location
//   GET  /evidence                    records readable by the session
//   GET  /evidence/{id}               record (policy-checked)
//   GET  /evidence/{id}/trail         custody intervals
//   GET  /evidence/{id}/payload       raw bytes, owner only; needs a signed
//                                     ACCESS transaction in the
//                                     X-Access-Transaction header (base64)
//   GET  /devices/{device_id}         device history
//   POST /invoke/{create|transfer|erase|register_device|verify_device}
//        body {"transaction": base64 of a client-signed transaction}
//
// Errors are {"error": CODE, "message": ...} with 400, 401, 403, 404, 410.

#include <map>
#include <mutex>
#include <string>

#include "ctb/node.hpp"

namespace ctb {

struct ApiRequest {
  std::string method = "GET";
  std::string path;
  std::map<std::string, std::string> query;
  /// Header names in lower case.
  std::map<std::string, std::string> headers;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;
};

struct ExplorerConfig {
  Timestamp session_ttl = 900;
  Timestamp challenge_ttl = 120;
  std::size_t max_page = 100;
};

class ExplorerService {
public:
  explicit ExplorerService(LocalNode &node, ExplorerConfig config = {});

  ApiResponse handle(const ApiRequest &request);

  /// Bytes a participant signs to answer a login challenge.
  static Bytes login_message(const Nonce &challenge);

  LocalNode &node() { return node_; }

private:
  struct Session {
    Address address;
    Timestamp expires_at = 0;
  };
  struct Challenge {
    Address address;
    Timestamp expires_at = 0;
  };

  ApiResponse route(const ApiRequest &request);
  ApiResponse challenge(const ApiRequest &request);
  ApiResponse login(const ApiRequest &request);
  Address authenticate(const ApiRequest &request);
  ApiResponse invoke(const std::string &kind, const Address &caller,
                     const ApiRequest &request);
  ApiResponse payload(const Digest &id, const Address &caller,
                      const ApiRequest &request);

  LocalNode &node_;
  ExplorerConfig config_;
  std::mutex mutex_;
  std::map<std::string, Session> sessions_;
  std::map<Nonce, Challenge> challenges_;
};

/// HTTP/1.1 front of an ExplorerService.
class ExplorerServer {
public:
  explicit ExplorerServer(ExplorerService &service);
  ~ExplorerServer();

  ExplorerServer(const ExplorerServer &) = delete;
  ExplorerServer &operator=(const ExplorerServer &) = delete;

  /// Binds and serves on a background thread. Port 0 picks a free port.
  void start(const std::string &host, int port);
  /// Serves on the calling thread until stop().
  void listen(const std::string &host, int port);
  void stop();
  int port() const { return port_; }

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

} // namespace ctb
