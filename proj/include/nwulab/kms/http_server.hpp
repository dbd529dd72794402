#pragma once

#include <memory>
#include <string>

#include "nwulab/kms/store.hpp"

namespace nwulab::kms {

/// ETSI GS QKD 014-shaped REST front end for one KME:
///   GET  /api/v1/keys/{slave_sae_id}/status
///   POST /api/v1/keys/{slave_sae_id}/enc_keys   {"number": n, "size": bits}
///   POST /api/v1/keys/{master_sae_id}/dec_keys  {"key_IDs":[{"key_ID": "..."}]}
/// The requesting SAE identifies itself in a header (default X-SAE-ID).
class KmsHttpServer {
 public:
  KmsHttpServer(Kme& kme, std::string host, int port, std::string sae_header = "X-SAE-ID");
  ~KmsHttpServer();

  KmsHttpServer(const KmsHttpServer&) = delete;
  KmsHttpServer& operator=(const KmsHttpServer&) = delete;

  /// Binds and serves on a background thread. Throws if the port cannot
  /// be bound. Returns once the server is accepting requests.
  void start();
  void stop();

  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace nwulab::kms
