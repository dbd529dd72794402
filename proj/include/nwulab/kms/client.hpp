#pragma once

#include <memory>
#include <span>
#include <string>

#include "nwulab/kms/store.hpp"
#include "nwulab/kms/types.hpp"

namespace nwulab::kms {

/// What the handshake needs from a KMS, regardless of whether the KME is
/// in-process or behind the ETSI 014 REST interface.
class KmsClient {
 public:
  virtual ~KmsClient() = default;

  virtual KmeStatus get_status(const SaeId& peer_sae) = 0;
  virtual KeyContainer get_keys(const SaeId& slave_sae, size_t number, uint32_t size_bits) = 0;
  virtual KeyContainer get_keys_by_id(const SaeId& master_sae,
                                      std::span<const Uuid> key_ids) = 0;
};

/// Direct calls into a local Kme; the default for benches and tests.
class InProcessKmsClient final : public KmsClient {
 public:
  InProcessKmsClient(Kme& kme, SaeId self) : kme_(kme), self_(std::move(self)) {}

  KmeStatus get_status(const SaeId& peer_sae) override;
  KeyContainer get_keys(const SaeId& slave_sae, size_t number, uint32_t size_bits) override;
  KeyContainer get_keys_by_id(const SaeId& master_sae,
                              std::span<const Uuid> key_ids) override;

 private:
  Kme& kme_;
  SaeId self_;
};

/// REST client for a KME serving the ETSI 014 endpoints over HTTP.
/// Maps 400/401/404/503 responses back to the KmsError kinds.
class HttpKmsClient final : public KmsClient {
 public:
  HttpKmsClient(std::string host, int port, SaeId self,
                std::string sae_header = "X-SAE-ID");
  ~HttpKmsClient() override;

  KmeStatus get_status(const SaeId& peer_sae) override;
  KeyContainer get_keys(const SaeId& slave_sae, size_t number, uint32_t size_bits) override;
  KeyContainer get_keys_by_id(const SaeId& master_sae,
                              std::span<const Uuid> key_ids) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace nwulab::kms
