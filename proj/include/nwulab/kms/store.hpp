#pragma once

#include <chrono>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <unordered_map>
#include <unordered_set>

#include "nwulab/kms/types.hpp"
#include "nwulab/rng.hpp"

namespace nwulab::kms {

struct KmsConfig {
  std::string kme_a_id = "kme-access.nwu-lab.example";
  std::string kme_b_id = "kme-core.nwu-lab.example";
  uint32_t key_size_bits = 256;
  size_t capacity = 100000;
  size_t max_key_per_request = 128;
  double generation_rate = 0.0;  // keys/s for the background replenisher; 0 = manual only
  std::chrono::milliseconds request_latency{0};
  std::optional<uint64_t> seed;  // set -> deterministic key material and ids
};

/// Hook for mirroring generated keys into a second process. The default
/// deployment shares one in-process store between the two KMEs, so the
/// paired KME sees new keys with no copying at all.
class ReplenishSink {
 public:
  virtual ~ReplenishSink() = default;
  virtual void on_keys_generated(std::span<const QkdKey> keys) = 0;
};

class Kme;

/// A pair of KMEs joined by one simulated QKD link. Both sides observe a
/// single pool, which makes the byte-for-byte pair-consistency invariant
/// hold by construction; reservations and consumption are tracked per key
/// so a key id is in exactly one of {pending, reserved, consumed}.
class KmsSystem {
 public:
  explicit KmsSystem(KmsConfig config);
  ~KmsSystem();

  KmsSystem(const KmsSystem&) = delete;
  KmsSystem& operator=(const KmsSystem&) = delete;

  Kme& kme_a() { return *kme_a_; }
  Kme& kme_b() { return *kme_b_; }

  /// Registers an SAE at one KME ('a' or 'b'). Requests from anything
  /// else are rejected as unauthorized.
  void register_sae(const SaeId& sae, char side);

  /// Appends `count` fresh keys, identically visible to both KMEs.
  /// Returns the new stored (pending) key count.
  size_t replenish(size_t count);

  void set_replenish_sink(std::shared_ptr<ReplenishSink> sink);

  const KmsConfig& config() const { return config_; }

 private:
  friend class Kme;

  struct Reservation {
    QkdKey key;
    SaeId master;
    SaeId slave;
  };

  bool sae_known_locked(const SaeId& sae) const;
  void maybe_sleep() const;

  KmsConfig config_;
  std::unique_ptr<Rng> rng_;

  mutable std::mutex mu_;
  std::deque<QkdKey> pending_;
  std::unordered_map<Uuid, Reservation, UuidHash> reserved_;
  std::unordered_set<Uuid, UuidHash> consumed_;
  std::unordered_map<std::string, char> sae_side_;
  std::shared_ptr<ReplenishSink> sink_;

  std::unique_ptr<Kme> kme_a_;
  std::unique_ptr<Kme> kme_b_;
};

/// One Key Management Entity: the ETSI 014 server role for the SAEs on
/// its side of the link. All operations are linearizable across the pair
/// (single store mutex).
class Kme {
 public:
  Kme(KmsSystem& system, std::string kme_id, char side);

  const std::string& kme_id() const { return kme_id_; }

  /// Read-only pool statistics, ETSI 014 "Get status" shape.
  KmeStatus get_status(const SaeId& requester, const SaeId& slave_sae) const;

  /// Reserves `number` fresh keys for (requester -> slave_sae) and
  /// returns them with their ids. ETSI 014 "Get key".
  KeyContainer get_keys(const SaeId& requester, const SaeId& slave_sae, size_t number,
                        uint32_t size_bits);

  /// Serves previously reserved keys, in request order, to the slave
  /// side. ETSI 014 "Get key with key IDs". Each key is served once.
  KeyContainer get_keys_by_id(const SaeId& requester, const SaeId& master_sae,
                              std::span<const Uuid> key_ids);

 private:
  KmsSystem& sys_;
  std::string kme_id_;
  char side_;
};

}  // namespace nwulab::kms
