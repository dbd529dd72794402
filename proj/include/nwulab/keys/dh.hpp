#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string_view>

#include "nwulab/bytes.hpp"
#include "nwulab/rng.hpp"

namespace nwulab::keys {

class DhError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Prime-modulus Diffie-Hellman group. Immutable; share one instance
/// across sessions.
struct DhGroup;
using DhGroupPtr = std::shared_ptr<const DhGroup>;

/// The 2048-bit MODP group (IKE transform id 14): the group every
/// classical-mode proposal in this lab offers.
DhGroupPtr modp2048();

/// Arbitrary group from a hex prime and small generator. Intended for
/// tests that need a group tiny enough to check exponentiation by hand.
DhGroupPtr make_group(std::string_view prime_hex, uint64_t generator);

size_t group_prime_bytes(const DhGroup& group);
size_t group_prime_bits(const DhGroup& group);

struct DhKeyPair {
  Bytes private_key;
  Bytes public_key;  // zero-left-padded to the prime length
};

/// Draws the private exponent from `rng`. `private_bits` == 0 means an
/// exponent as wide as the modulus; smaller values trade security for
/// speed and only make sense in tests.
DhKeyPair dh_keypair(const DhGroup& group, Rng& rng, size_t private_bits = 0);

/// peer_public^private mod p, zero-left-padded to the prime length.
/// Rejects degenerate peer values (0, 1, p-1) that would pin the result.
Bytes dh_shared_secret(const DhGroup& group, ByteView private_key, ByteView peer_public);

/// Process-wide count of modular exponentiations performed. The QKD path
/// must leave this untouched; tests and the bench assert on the deltas.
uint64_t modexp_count();
void reset_modexp_count();

}  // namespace nwulab::keys
