#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nwulab/bytes.hpp"
#include "nwulab/uuid.hpp"

namespace nwulab::kms {

/// Identity of an application entity (UE, N3IWF) registered with a KME.
struct SaeId {
  std::string value;

  SaeId() = default;
  explicit SaeId(std::string v) : value(std::move(v)) {}

  bool empty() const { return value.empty(); }
  auto operator<=>(const SaeId&) const = default;
};

struct QkdKey {
  Uuid key_id;
  Bytes material;

  bool operator==(const QkdKey&) const = default;
};

/// Ordered key delivery. Order is load-bearing: the positional key
/// assignment downstream depends on it surviving the wire round trip.
struct KeyContainer {
  std::vector<QkdKey> keys;

  size_t size() const { return keys.size(); }
  bool operator==(const KeyContainer&) const = default;
};

struct KmeStatus {
  std::string source_kme_id;
  std::string target_kme_id;
  uint32_t key_size_bits = 0;
  size_t stored_key_count = 0;
  size_t max_key_per_request = 0;
};

enum class KmsErrorKind {
  Request,        // malformed or out-of-policy request -> HTTP 400
  Authorization,  // unknown SAE or wrong SAE pair      -> HTTP 401
  NotFound,       // unknown or already-consumed key id -> HTTP 404
  Unavailable,    // pool exhausted, retryable          -> HTTP 503
  Capacity,       // replenish beyond pool capacity
};

class KmsError : public std::runtime_error {
 public:
  KmsError(KmsErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  KmsErrorKind kind() const { return kind_; }

 private:
  KmsErrorKind kind_;
};

const char* to_string(KmsErrorKind kind);

}  // namespace nwulab::kms
