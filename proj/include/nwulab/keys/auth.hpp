#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "nwulab/bytes.hpp"
#include "nwulab/rng.hpp"

namespace nwulab::keys {

class AuthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AuthMethod : uint8_t {
  Psk = 2,               // shared-secret MAC; also the quantum-key path
  DigitalSignature = 14,
};

/// A certificate-shaped credential: an opaque blob sized like a typical
/// X.509 chain (so byte accounting is honest) wrapping an Ed25519 key.
struct CertIdentity {
  std::string subject;
  Bytes blob;         // carried in the CERT payload
  Bytes public_key;   // raw Ed25519, 32 bytes
  Bytes private_key;  // raw Ed25519 seed, 32 bytes
};

/// Fields recoverable from a received blob.
struct CertInfo {
  std::string subject;
  Bytes public_key;
};

/// blob_size must leave room for the header, subject, and key; the rest
/// is deterministic filler standing in for chain padding.
CertIdentity make_cert_identity(std::string_view subject, size_t blob_size, Rng& rng);

/// Throws AuthError on bad magic, truncation, or a subject that does not
/// fit the declared lengths.
CertInfo parse_cert_blob(ByteView blob);

Bytes ed25519_sign(ByteView private_key, ByteView message);
bool ed25519_verify(ByteView public_key, ByteView message, ByteView signature);

/// The octets a peer authenticates: its first message, the other side's
/// nonce, and a prf over its identity body. `id_prf_key` is SK_pi/SK_pr
/// classically and the shared auth key on the quantum path.
Bytes auth_signed_octets(ByteView first_message, ByteView peer_nonce, ByteView id_prf_key,
                         ByteView id_body);

/// prf(prf(secret, "Key Pad for IKEv2"), signed_octets)
Bytes compute_psk_auth(ByteView secret, ByteView signed_octets);
bool verify_psk_auth(ByteView secret, ByteView signed_octets, ByteView auth_data);

}  // namespace nwulab::keys
