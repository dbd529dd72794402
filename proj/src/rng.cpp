#include "nwulab/rng.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <cstring>
#include <optional>
#include <stdexcept>

namespace nwulab {

Bytes Rng::bytes(size_t n) {
  Bytes out(n);
  fill(out);
  return out;
}

uint64_t Rng::next_u64() {
  std::array<uint8_t, 8> b{};
  fill(b);
  uint64_t v = 0;
  for (uint8_t c : b) v = (v << 8) | c;
  return v;
}

void SystemRng::fill(std::span<uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
    throw std::runtime_error("system random source failed");
  }
}

SeededRng::SeededRng(uint64_t seed) : seed_(seed) {}

void SeededRng::refill() {
  uint8_t in[16];
  for (int i = 0; i < 8; ++i) in[i] = static_cast<uint8_t>(seed_ >> (56 - 8 * i));
  for (int i = 0; i < 8; ++i) in[8 + i] = static_cast<uint8_t>(counter_ >> (56 - 8 * i));
  unsigned int len = 0;
  if (!EVP_Digest(in, sizeof(in), block_.data(), &len, EVP_sha256(), nullptr) ||
      len != block_.size()) {
    throw std::runtime_error("seeded stream digest failed");
  }
  ++counter_;
  pos_ = 0;
}

void SeededRng::fill(std::span<uint8_t> out) {
  size_t done = 0;
  while (done < out.size()) {
    if (pos_ == block_.size()) refill();
    size_t take = std::min(block_.size() - pos_, out.size() - done);
    std::memcpy(out.data() + done, block_.data() + pos_, take);
    pos_ += take;
    done += take;
  }
}

std::unique_ptr<Rng> make_rng(std::optional<uint64_t> seed) {
  if (seed.has_value()) return std::make_unique<SeededRng>(*seed);
  return std::make_unique<SystemRng>();
}

}  // namespace nwulab
