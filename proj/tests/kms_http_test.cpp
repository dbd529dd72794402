#include <gtest/gtest.h>

#include <httplib.h>
#include <json.hpp>

#include "nwulab/kms/client.hpp"
#include "nwulab/kms/http_server.hpp"
#include "nwulab/kms/store.hpp"

using namespace nwulab;
using namespace nwulab::kms;
using json = nlohmann::json;

namespace {

constexpr char kUe[] = "ue-001.sae.nwu-lab.example";
constexpr char kGw[] = "n3iwf-001.sae.nwu-lab.example";

struct HttpFixture {
  KmsSystem system;
  KmsHttpServer server_a;
  KmsHttpServer server_b;
  SaeId ue{kUe};
  SaeId gw{kGw};

  HttpFixture()
      : system([] {
          KmsConfig config;
          config.seed = 7;
          return config;
        }()),
        server_a(system.kme_a(), "127.0.0.1", 0),
        server_b(system.kme_b(), "127.0.0.1", 0) {
    system.register_sae(ue, 'a');
    system.register_sae(gw, 'b');
    system.replenish(100);
    server_a.start();
    server_b.start();
  }
};

TEST(KmsHttp, StatusEndpoint) {
  HttpFixture f;
  HttpKmsClient gw_client("127.0.0.1", f.server_b.port(), f.gw);
  KmeStatus status = gw_client.get_status(f.ue);
  EXPECT_EQ(status.stored_key_count, 100u);
  EXPECT_EQ(status.key_size_bits, 256u);
  EXPECT_EQ(status.source_kme_id, "kme-core.nwu-lab.example");
  EXPECT_EQ(status.target_kme_id, "kme-access.nwu-lab.example");
  EXPECT_GT(status.max_key_per_request, 0u);
}

TEST(KmsHttp, KeyDeliveryRoundTripsThroughRest) {
  HttpFixture f;
  HttpKmsClient gw_client("127.0.0.1", f.server_b.port(), f.gw);
  HttpKmsClient ue_client("127.0.0.1", f.server_a.port(), f.ue);

  KeyContainer got = gw_client.get_keys(f.ue, 13, 256);
  ASSERT_EQ(got.size(), 13u);
  for (const QkdKey& k : got.keys) EXPECT_EQ(k.material.size(), 32u);

  std::vector<Uuid> ids;
  for (const QkdKey& k : got.keys) ids.push_back(k.key_id);
  KeyContainer again = ue_client.get_keys_by_id(f.gw, ids);
  EXPECT_EQ(again, got);

  EXPECT_EQ(gw_client.get_status(f.ue).stored_key_count, 87u);
}

TEST(KmsHttp, ErrorKindsSurviveTheWire) {
  HttpFixture f;
  HttpKmsClient gw_client("127.0.0.1", f.server_b.port(), f.gw);
  HttpKmsClient ue_client("127.0.0.1", f.server_a.port(), f.ue);
  HttpKmsClient intruder("127.0.0.1", f.server_b.port(), SaeId{"intruder"});

  try {
    intruder.get_keys(f.ue, 1, 256);
    FAIL() << "unauthorized SAE must be refused";
  } catch (const KmsError& e) {
    EXPECT_EQ(e.kind(), KmsErrorKind::Authorization);
  }
  try {
    gw_client.get_keys(f.ue, 0, 256);
    FAIL() << "zero-key request must be refused";
  } catch (const KmsError& e) {
    EXPECT_EQ(e.kind(), KmsErrorKind::Request);
  }
  try {
    gw_client.get_keys(f.ue, 101, 256);  // pool holds 100
    FAIL() << "exhausted pool must be retryable";
  } catch (const KmsError& e) {
    EXPECT_EQ(e.kind(), KmsErrorKind::Unavailable);
  }
  try {
    Uuid bogus{};  // all zeros; never issued
    std::vector<Uuid> ids = {bogus};
    ue_client.get_keys_by_id(f.gw, ids);
    FAIL() << "unknown key id must be not-found";
  } catch (const KmsError& e) {
    EXPECT_EQ(e.kind(), KmsErrorKind::NotFound);
  }
}

TEST(KmsHttp, RawSurfaceMatchesTheRestShape) {
  HttpFixture f;
  httplib::Client raw("127.0.0.1", f.server_b.port());

  // Status is a GET with the requester named in a header.
  httplib::Headers headers = {{"X-SAE-ID", kGw}};
  auto status_res = raw.Get(std::string("/api/v1/keys/") + kUe + "/status", headers);
  ASSERT_TRUE(status_res);
  EXPECT_EQ(status_res->status, 200);
  json status = json::parse(status_res->body);
  EXPECT_EQ(status["source_KME_ID"], "kme-core.nwu-lab.example");
  EXPECT_EQ(status["target_KME_ID"], "kme-access.nwu-lab.example");
  EXPECT_EQ(status["key_size"], 256);
  EXPECT_TRUE(status.contains("stored_key_count"));
  EXPECT_TRUE(status.contains("max_key_per_request"));

  // Key delivery is a POST with {"number", "size"}.
  json body = {{"number", 2}, {"size", 256}};
  auto enc_res = raw.Post(std::string("/api/v1/keys/") + kUe + "/enc_keys", headers,
                          body.dump(), "application/json");
  ASSERT_TRUE(enc_res);
  EXPECT_EQ(enc_res->status, 200);
  json container = json::parse(enc_res->body);
  ASSERT_TRUE(container.contains("keys"));
  ASSERT_EQ(container["keys"].size(), 2u);
  for (const auto& k : container["keys"]) {
    EXPECT_TRUE(k.contains("key_ID"));
    EXPECT_TRUE(k.contains("key"));
    EXPECT_EQ(base64_decode(k["key"].get<std::string>()).size(), 32u);
  }

  // Missing requester header is unauthorized.
  auto anon = raw.Get(std::string("/api/v1/keys/") + kUe + "/status");
  ASSERT_TRUE(anon);
  EXPECT_EQ(anon->status, 401);

  // Malformed body is a bad request.
  auto bad = raw.Post(std::string("/api/v1/keys/") + kUe + "/enc_keys", headers,
                      "{\"number\": \"many\"}", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);

  // The slave collects by POSTing {"key_IDs": [{"key_ID": ...}]}.
  httplib::Client raw_a("127.0.0.1", f.server_a.port());
  httplib::Headers ue_headers = {{"X-SAE-ID", kUe}};
  json dec_body = json::array();
  for (const auto& k : container["keys"]) dec_body.push_back({{"key_ID", k["key_ID"]}});
  auto dec_res = raw_a.Post(std::string("/api/v1/keys/") + kGw + "/dec_keys", ue_headers,
                            json{{"key_IDs", dec_body}}.dump(), "application/json");
  ASSERT_TRUE(dec_res);
  EXPECT_EQ(dec_res->status, 200);
  json collected = json::parse(dec_res->body);
  EXPECT_EQ(collected["keys"], container["keys"]);

  // Collecting the same ids again is a 404.
  auto again = raw_a.Post(std::string("/api/v1/keys/") + kGw + "/dec_keys", ue_headers,
                          json{{"key_IDs", dec_body}}.dump(), "application/json");
  ASSERT_TRUE(again);
  EXPECT_EQ(again->status, 404);
}

TEST(KmsHttp, UnreachableServerIsUnavailable) {
  // Nothing listens on this port (bound and closed immediately).
  HttpKmsClient client("127.0.0.1", 1, SaeId{kGw});
  try {
    client.get_status(SaeId{kUe});
    FAIL() << "connection failure must surface as unavailable";
  } catch (const KmsError& e) {
    EXPECT_EQ(e.kind(), KmsErrorKind::Unavailable);
  }
}

}  // namespace
