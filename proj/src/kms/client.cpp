#include "nwulab/kms/client.hpp"

#include <httplib.h>
#include <json.hpp>

#include "nwulab/bytes.hpp"

namespace nwulab::kms {

using nlohmann::json;

KmeStatus InProcessKmsClient::get_status(const SaeId& peer_sae) {
  return kme_.get_status(self_, peer_sae);
}

KeyContainer InProcessKmsClient::get_keys(const SaeId& slave_sae, size_t number,
                                          uint32_t size_bits) {
  return kme_.get_keys(self_, slave_sae, number, size_bits);
}

KeyContainer InProcessKmsClient::get_keys_by_id(const SaeId& master_sae,
                                                std::span<const Uuid> key_ids) {
  return kme_.get_keys_by_id(self_, master_sae, key_ids);
}

namespace {

KmsErrorKind kind_for_status(int status) {
  switch (status) {
    case 400: return KmsErrorKind::Request;
    case 401: return KmsErrorKind::Authorization;
    case 404: return KmsErrorKind::NotFound;
    case 503: return KmsErrorKind::Unavailable;
    case 507: return KmsErrorKind::Capacity;
    default: return KmsErrorKind::Unavailable;
  }
}

[[noreturn]] void raise_http_error(const httplib::Result& res) {
  if (!res) {
    throw KmsError(KmsErrorKind::Unavailable,
                   std::string("KMS unreachable: ") + httplib::to_string(res.error()));
  }
  std::string detail = "HTTP " + std::to_string(res->status);
  try {
    json body = json::parse(res->body);
    if (body.contains("message")) detail += ": " + body["message"].get<std::string>();
  } catch (const json::exception&) {
    // keep the bare status line
  }
  throw KmsError(kind_for_status(res->status), detail);
}

KeyContainer parse_container(const std::string& body_text) {
  json body = json::parse(body_text);
  if (!body.contains("keys") || !body["keys"].is_array()) {
    throw KmsError(KmsErrorKind::Request, "response missing 'keys' array");
  }
  KeyContainer container;
  container.keys.reserve(body["keys"].size());
  for (const auto& entry : body["keys"]) {
    QkdKey key;
    key.key_id = Uuid::parse(entry.at("key_ID").get<std::string>());
    key.material = base64_decode(entry.at("key").get<std::string>());
    container.keys.push_back(std::move(key));
  }
  return container;
}

}  // namespace

struct HttpKmsClient::Impl {
  httplib::Client http;
  SaeId self;
  std::string sae_header;

  Impl(const std::string& host, int port, SaeId s, std::string header)
      : http(host, port), self(std::move(s)), sae_header(std::move(header)) {
    http.set_connection_timeout(5, 0);
    http.set_read_timeout(5, 0);
  }

  httplib::Headers headers() const { return {{sae_header, self.value}}; }
};

HttpKmsClient::HttpKmsClient(std::string host, int port, SaeId self, std::string sae_header)
    : impl_(std::make_unique<Impl>(host, port, std::move(self), std::move(sae_header))) {}

HttpKmsClient::~HttpKmsClient() = default;

KmeStatus HttpKmsClient::get_status(const SaeId& peer_sae) {
  auto res = impl_->http.Get("/api/v1/keys/" + peer_sae.value + "/status", impl_->headers());
  if (!res || res->status != 200) raise_http_error(res);
  json body = json::parse(res->body);
  KmeStatus status;
  status.source_kme_id = body.at("source_KME_ID").get<std::string>();
  status.target_kme_id = body.at("target_KME_ID").get<std::string>();
  status.key_size_bits = body.at("key_size").get<uint32_t>();
  status.stored_key_count = body.at("stored_key_count").get<size_t>();
  status.max_key_per_request = body.at("max_key_per_request").get<size_t>();
  return status;
}

KeyContainer HttpKmsClient::get_keys(const SaeId& slave_sae, size_t number, uint32_t size_bits) {
  json req = {{"number", number}, {"size", size_bits}};
  auto res = impl_->http.Post("/api/v1/keys/" + slave_sae.value + "/enc_keys", impl_->headers(),
                              req.dump(), "application/json");
  if (!res || res->status != 200) raise_http_error(res);
  try {
    return parse_container(res->body);
  } catch (const json::exception& e) {
    throw KmsError(KmsErrorKind::Request, std::string("bad enc_keys response: ") + e.what());
  }
}

KeyContainer HttpKmsClient::get_keys_by_id(const SaeId& master_sae,
                                           std::span<const Uuid> key_ids) {
  json ids = json::array();
  for (const Uuid& id : key_ids) ids.push_back({{"key_ID", id.str()}});
  json req = {{"key_IDs", ids}};
  auto res = impl_->http.Post("/api/v1/keys/" + master_sae.value + "/dec_keys", impl_->headers(),
                              req.dump(), "application/json");
  if (!res || res->status != 200) raise_http_error(res);
  try {
    return parse_container(res->body);
  } catch (const json::exception& e) {
    throw KmsError(KmsErrorKind::Request, std::string("bad dec_keys response: ") + e.what());
  }
}

}  // namespace nwulab::kms
