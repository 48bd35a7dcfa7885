#include <algorithm>
#include <cctype>
#include <thread>

#include <httplib.h>

#include "ctb/explorer_api.hpp"

namespace ctb {

struct ExplorerServer::Impl {
  ExplorerService &service;
  httplib::Server server;
  std::thread thread;

  explicit Impl(ExplorerService &s) : service(s) {
    auto handler = [this](const httplib::Request &req, httplib::Response &res) {
      ApiRequest in;
      in.method = req.method;
      in.path = req.path;
      for (const auto &[k, v] : req.params)
        in.query[k] = v;
      for (const auto &[k, v] : req.headers) {
        std::string key = k;
        std::transform(key.begin(), key.end(), key.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        in.headers[key] = v;
      }
      in.body = req.body;
      auto out = service.handle(in);
      res.status = out.status;
      for (const auto &[k, v] : out.headers)
        res.set_header(k, v);
      res.set_content(out.body, out.content_type);
    };
    server.Get(R"(/.*)", handler);
    server.Post(R"(/.*)", handler);
  }
};

ExplorerServer::ExplorerServer(ExplorerService &service)
    : impl_(std::make_unique<Impl>(service)) {}

ExplorerServer::~ExplorerServer() { stop(); }

void ExplorerServer::start(const std::string &host, int port) {
  if (port == 0)
    port_ = impl_->server.bind_to_any_port(host);
  else if (impl_->server.bind_to_port(host, port))
    port_ = port;
  else
    port_ = -1;
  if (port_ <= 0)
    throw Error(ErrorCode::IoError,
                "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void ExplorerServer::listen(const std::string &host, int port) {
  port_ = port;
  if (!impl_->server.listen(host, port))
    throw Error(ErrorCode::IoError,
                "cannot serve on " + host + ":" + std::to_string(port));
}

void ExplorerServer::stop() {
  if (!impl_)
    return;
  impl_->server.stop();
  if (impl_->thread.joinable())
    impl_->thread.join();
}

} // namespace ctb
