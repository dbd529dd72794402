#include "nwulab/kms/http_server.hpp"

#include <httplib.h>
#include <json.hpp>

#include "nwulab/bytes.hpp"

#include <atomic>
#include <stdexcept>
#include <thread>

namespace nwulab::kms {

using nlohmann::json;

namespace {

int status_for(KmsErrorKind kind) {
  switch (kind) {
    case KmsErrorKind::Request: return 400;
    case KmsErrorKind::Authorization: return 401;
    case KmsErrorKind::NotFound: return 404;
    case KmsErrorKind::Unavailable: return 503;
    case KmsErrorKind::Capacity: return 507;
  }
  return 500;
}

void fail(httplib::Response& res, KmsErrorKind kind, const std::string& message) {
  json body = {{"message", message}, {"error", to_string(kind)}};
  res.status = status_for(kind);
  res.set_content(body.dump(), "application/json");
}

json container_to_json(const KeyContainer& container) {
  json keys = json::array();
  for (const QkdKey& key : container.keys) {
    keys.push_back({{"key_ID", key.key_id.str()}, {"key", base64_encode(key.material)}});
  }
  return json{{"keys", keys}};
}

}  // namespace

struct KmsHttpServer::Impl {
  Kme& kme;
  std::string host;
  int port;
  std::string sae_header;
  httplib::Server server;
  std::thread thread;
  std::atomic<bool> running{false};

  Impl(Kme& k, std::string h, int p, std::string header)
      : kme(k), host(std::move(h)), port(p), sae_header(std::move(header)) {}

  SaeId requester(const httplib::Request& req) const {
    return SaeId{req.get_header_value(sae_header)};
  }

  void route() {
    server.Get(R"(/api/v1/keys/([^/]+)/status)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 handle([&] {
                   KmeStatus status = kme.get_status(requester(req), SaeId{req.matches[1].str()});
                   json body = {{"source_KME_ID", status.source_kme_id},
                                {"target_KME_ID", status.target_kme_id},
                                {"key_size", status.key_size_bits},
                                {"stored_key_count", status.stored_key_count},
                                {"max_key_per_request", status.max_key_per_request}};
                   res.set_content(body.dump(), "application/json");
                 }, res);
               });

    server.Post(R"(/api/v1/keys/([^/]+)/enc_keys)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  handle([&] {
                    json body = json::parse(req.body);
                    if (!body.contains("number") || !body["number"].is_number_unsigned()) {
                      throw KmsError(KmsErrorKind::Request, "missing or bad 'number'");
                    }
                    uint32_t size = body.value("size", 256u);
                    KeyContainer keys = kme.get_keys(requester(req), SaeId{req.matches[1].str()},
                                                     body["number"].get<size_t>(), size);
                    res.set_content(container_to_json(keys).dump(), "application/json");
                  }, res);
                });

    server.Post(R"(/api/v1/keys/([^/]+)/dec_keys)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  handle([&] {
                    json body = json::parse(req.body);
                    if (!body.contains("key_IDs") || !body["key_IDs"].is_array()) {
                      throw KmsError(KmsErrorKind::Request, "missing or bad 'key_IDs'");
                    }
                    std::vector<Uuid> ids;
                    ids.reserve(body["key_IDs"].size());
                    for (const auto& entry : body["key_IDs"]) {
                      if (!entry.contains("key_ID") || !entry["key_ID"].is_string()) {
                        throw KmsError(KmsErrorKind::Request, "bad key_ID entry");
                      }
                      ids.push_back(Uuid::parse(entry["key_ID"].get<std::string>()));
                    }
                    KeyContainer keys =
                        kme.get_keys_by_id(requester(req), SaeId{req.matches[1].str()}, ids);
                    res.set_content(container_to_json(keys).dump(), "application/json");
                  }, res);
                });
  }

  template <typename Fn>
  void handle(Fn&& fn, httplib::Response& res) {
    try {
      fn();
    } catch (const KmsError& e) {
      fail(res, e.kind(), e.what());
    } catch (const json::exception& e) {
      fail(res, KmsErrorKind::Request, std::string("bad request body: ") + e.what());
    } catch (const std::invalid_argument& e) {
      fail(res, KmsErrorKind::Request, e.what());
    }
  }
};

KmsHttpServer::KmsHttpServer(Kme& kme, std::string host, int port, std::string sae_header)
    : impl_(std::make_unique<Impl>(kme, std::move(host), port, std::move(sae_header))) {
  impl_->route();
}

KmsHttpServer::~KmsHttpServer() { stop(); }

void KmsHttpServer::start() {
  if (impl_->running.exchange(true)) return;
  if (impl_->port == 0) {
    int bound = impl_->server.bind_to_any_port(impl_->host);
    if (bound <= 0) throw std::runtime_error("KMS HTTP server could not bind a port");
    impl_->port = bound;
  } else if (!impl_->server.bind_to_port(impl_->host, impl_->port)) {
    throw std::runtime_error("KMS HTTP server could not bind port " + std::to_string(impl_->port));
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void KmsHttpServer::stop() {
  if (!impl_->running.exchange(false)) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int KmsHttpServer::port() const { return impl_->port; }

}  // namespace nwulab::kms
