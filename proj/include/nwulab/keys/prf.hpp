#pragma once

#include <cstdint>
#include <stdexcept>

#include "nwulab/bytes.hpp"

namespace nwulab::keys {

class PrfError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr size_t kPrfOutputLen = 32;  // HMAC-SHA-256

Bytes hmac_sha256(ByteView key, ByteView data);
Bytes sha256(ByteView data);
Bytes sha1(ByteView data);

/// Keyed expansion: T1 = prf(K, S | 0x01), Tn = prf(K, Tn-1 | S | n),
/// output = T1 | T2 | ... truncated to out_len. The counter is a single
/// octet, so out_len beyond 255 blocks throws.
Bytes prf_plus(ByteView key, ByteView seed, size_t out_len);

/// Process-wide count of prf+ expansions. The QKD path performs none;
/// tests assert on the deltas.
uint64_t prf_plus_count();
void reset_prf_plus_count();

}  // namespace nwulab::keys
