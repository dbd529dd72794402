#pragma once

#include <stdexcept>
#include <vector>

#include "nwulab/ike/codec.hpp"
#include "nwulab/ike/message.hpp"
#include "nwulab/rng.hpp"

namespace nwulab::ike {

class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One direction's SK-payload protection keys: AES-256-CBC encryption
/// key (32 bytes) and HMAC-SHA-256 integrity key (32 bytes, tag cut to
/// 16 on the wire).
struct SaDirectionKeys {
  Bytes enc;
  Bytes integ;
};

/// Encrypt-then-MAC of a raw plaintext against explicit associated data.
/// Exposed for tests; messages go through seal_message/open_message.
SkPayload seal(ByteView plaintext, PayloadType first_inner, const SaDirectionKeys& keys,
               ByteView aad, Rng& rng);
Bytes open(const SkPayload& sk, const SaDirectionKeys& keys, ByteView aad);

/// Full wire message: header, then one SK payload holding the encoded
/// inner chain. The tag covers every byte that precedes it.
Bytes seal_message(const IkeHeader& header, const std::vector<Payload>& inner,
                   const SaDirectionKeys& keys, Rng& rng);

struct OpenedMessage {
  IkeHeader header;
  std::vector<Payload> payloads;
};

/// Verifies and strips the SK container. Throws IntegrityError on a bad
/// tag, ParseError on anything structurally wrong before or after.
OpenedMessage open_message(ByteView wire, const SaDirectionKeys& keys);

}  // namespace nwulab::ike
