#include "nwulab/kms/store.hpp"

#include <thread>
#include <vector>

namespace nwulab::kms {

const char* to_string(KmsErrorKind kind) {
  switch (kind) {
    case KmsErrorKind::Request: return "request";
    case KmsErrorKind::Authorization: return "authorization";
    case KmsErrorKind::NotFound: return "not-found";
    case KmsErrorKind::Unavailable: return "unavailable";
    case KmsErrorKind::Capacity: return "capacity";
  }
  return "unknown";
}

KmsSystem::KmsSystem(KmsConfig config)
    : config_(std::move(config)), rng_(make_rng(config_.seed)) {
  kme_a_ = std::make_unique<Kme>(*this, config_.kme_a_id, 'a');
  kme_b_ = std::make_unique<Kme>(*this, config_.kme_b_id, 'b');
}

KmsSystem::~KmsSystem() = default;

void KmsSystem::register_sae(const SaeId& sae, char side) {
  if (sae.empty()) throw KmsError(KmsErrorKind::Request, "SAE id must be non-empty");
  if (side != 'a' && side != 'b') throw KmsError(KmsErrorKind::Request, "side must be 'a' or 'b'");
  std::lock_guard lock(mu_);
  sae_side_[sae.value] = side;
}

size_t KmsSystem::replenish(size_t count) {
  if (count == 0) throw KmsError(KmsErrorKind::Request, "replenish count must be positive");
  std::lock_guard lock(mu_);
  if (pending_.size() + count > config_.capacity) {
    throw KmsError(KmsErrorKind::Capacity, "pool capacity exceeded");
  }
  std::vector<QkdKey> fresh;
  fresh.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    QkdKey key;
    key.key_id = Uuid::random(*rng_);
    key.material = rng_->bytes(config_.key_size_bits / 8);
    pending_.push_back(key);
    fresh.push_back(std::move(key));
  }
  if (sink_) sink_->on_keys_generated(fresh);
  return pending_.size();
}

void KmsSystem::set_replenish_sink(std::shared_ptr<ReplenishSink> sink) {
  std::lock_guard lock(mu_);
  sink_ = std::move(sink);
}

bool KmsSystem::sae_known_locked(const SaeId& sae) const {
  return sae_side_.find(sae.value) != sae_side_.end();
}

void KmsSystem::maybe_sleep() const {
  if (config_.request_latency.count() > 0) {
    std::this_thread::sleep_for(config_.request_latency);
  }
}

Kme::Kme(KmsSystem& system, std::string kme_id, char side)
    : sys_(system), kme_id_(std::move(kme_id)), side_(side) {}

KmeStatus Kme::get_status(const SaeId& requester, const SaeId& slave_sae) const {
  sys_.maybe_sleep();
  std::lock_guard lock(sys_.mu_);
  auto it = sys_.sae_side_.find(requester.value);
  if (it == sys_.sae_side_.end() || it->second != side_) {
    throw KmsError(KmsErrorKind::Authorization, "unknown requester SAE: " + requester.value);
  }
  KmeStatus status;
  status.source_kme_id = kme_id_;
  status.target_kme_id = side_ == 'a' ? sys_.config_.kme_b_id : sys_.config_.kme_a_id;
  status.key_size_bits = sys_.config_.key_size_bits;
  status.stored_key_count = sys_.pending_.size();
  status.max_key_per_request = sys_.config_.max_key_per_request;
  (void)slave_sae;
  return status;
}

KeyContainer Kme::get_keys(const SaeId& requester, const SaeId& slave_sae, size_t number,
                           uint32_t size_bits) {
  sys_.maybe_sleep();
  std::lock_guard lock(sys_.mu_);
  auto it = sys_.sae_side_.find(requester.value);
  if (it == sys_.sae_side_.end() || it->second != side_) {
    throw KmsError(KmsErrorKind::Authorization, "unknown requester SAE: " + requester.value);
  }
  if (number == 0) throw KmsError(KmsErrorKind::Request, "number must be positive");
  if (number > sys_.config_.max_key_per_request) {
    throw KmsError(KmsErrorKind::Request, "number exceeds max_key_per_request");
  }
  if (size_bits != sys_.config_.key_size_bits) {
    throw KmsError(KmsErrorKind::Request, "requested key size not provisioned by this pool");
  }
  if (sys_.pending_.size() < number) {
    throw KmsError(KmsErrorKind::Unavailable, "insufficient keys in pool");
  }
  KeyContainer out;
  out.keys.reserve(number);
  for (size_t i = 0; i < number; ++i) {
    QkdKey key = std::move(sys_.pending_.front());
    sys_.pending_.pop_front();
    sys_.reserved_.emplace(key.key_id,
                           KmsSystem::Reservation{key, requester, slave_sae});
    out.keys.push_back(std::move(key));
  }
  return out;
}

KeyContainer Kme::get_keys_by_id(const SaeId& requester, const SaeId& master_sae,
                                 std::span<const Uuid> key_ids) {
  sys_.maybe_sleep();
  std::lock_guard lock(sys_.mu_);
  auto it = sys_.sae_side_.find(requester.value);
  if (it == sys_.sae_side_.end() || it->second != side_) {
    throw KmsError(KmsErrorKind::Authorization, "unknown requester SAE: " + requester.value);
  }
  // Validate the whole batch before consuming anything, so a bad id
  // cannot leave a partially consumed container behind. A repeated id in
  // one request would be a double retrieval, same as two requests.
  std::unordered_set<Uuid, UuidHash> seen;
  for (const Uuid& id : key_ids) {
    auto res = sys_.reserved_.find(id);
    if (res == sys_.reserved_.end() || !seen.insert(id).second) {
      throw KmsError(KmsErrorKind::NotFound, "key id not available: " + id.str());
    }
    if (res->second.master != master_sae || res->second.slave != requester) {
      throw KmsError(KmsErrorKind::Authorization,
                     "key id reserved for a different SAE pair: " + id.str());
    }
  }
  KeyContainer out;
  out.keys.reserve(key_ids.size());
  for (const Uuid& id : key_ids) {
    auto res = sys_.reserved_.find(id);
    out.keys.push_back(res->second.key);
    sys_.consumed_.insert(id);
    sys_.reserved_.erase(res);
  }
  return out;
}

}  // namespace nwulab::kms
