#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>

#include "nwulab/bytes.hpp"

namespace nwulab {

/// Random source injected into everything that needs nondeterminism
/// (SPIs, nonces, IVs, DH exponents, QKD key material). Tests and the
/// bench's repeatability mode use the seeded implementation.
class Rng {
 public:
  virtual ~Rng() = default;
  virtual void fill(std::span<uint8_t> out) = 0;

  Bytes bytes(size_t n);
  uint64_t next_u64();
};

/// CSPRNG backed by the system (OpenSSL RAND_bytes).
class SystemRng final : public Rng {
 public:
  void fill(std::span<uint8_t> out) override;
};

/// Deterministic stream: SHA-256(seed || counter). Stable across
/// platforms, which the trace-repeatability contract relies on.
class SeededRng final : public Rng {
 public:
  explicit SeededRng(uint64_t seed);
  void fill(std::span<uint8_t> out) override;

 private:
  void refill();

  uint64_t seed_;
  uint64_t counter_ = 0;
  std::array<uint8_t, 32> block_{};
  size_t pos_ = 32;
};

std::unique_ptr<Rng> make_rng(std::optional<uint64_t> seed);

}  // namespace nwulab
