#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "nwulab/bytes.hpp"

namespace nwulab::keys {

class ScheduleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Keys protecting the IKE SA itself. The d/p keys only exist on the
/// classical path: with QKD assignment there is no derivation secret to
/// carry and the auth key is shared, so those members stay empty.
struct IkeSaKeys {
  Bytes sk_ei, sk_er;  // SK payload encryption, initiator/responder
  Bytes sk_ai, sk_ar;  // SK payload integrity
  Bytes sk_d;          // child-SA derivation secret (classical only)
  Bytes sk_pi, sk_pr;  // auth-payload prf keys (classical only)

  bool operator==(const IkeSaKeys&) const = default;
};

/// One Child SA's traffic keys.
struct ChildSaKeys {
  Bytes enc_i, int_i;  // initiator->responder direction
  Bytes enc_r, int_r;  // responder->initiator direction

  bool operator==(const ChildSaKeys&) const = default;
};

/// How many quantum keys one handshake consumes and what each position
/// means. Both ends must agree on this before keys are fetched: the
/// key-id list on the wire carries no role tags, only order.
///
/// Slot layout: [sk_ei, sk_er, sk_ai, sk_ar]
///              then per child SA [enc_i, enc_r, int_i, int_r]
///              then [auth] if psk_auth.
struct KeyAssignmentPlan {
  size_t child_sa_count = 2;
  bool psk_auth = true;

  size_t slot_count() const { return 4 + 4 * child_sa_count + (psk_auth ? 1 : 0); }
  bool operator==(const KeyAssignmentPlan&) const = default;
};

struct QkdAssignment {
  IkeSaKeys ike;
  std::vector<ChildSaKeys> children;
  Bytes auth_key;  // empty when the plan has no auth slot
};

/// Positional mapping of fetched quantum keys onto SA roles. Throws
/// ScheduleError unless keys.size() == plan.slot_count().
QkdAssignment assign_qkd_keys(std::span<const Bytes> keys, const KeyAssignmentPlan& plan);

/// SKEYSEED = prf(Ni | Nr, shared_secret), then one prf+ expansion over
/// (Ni | Nr | SPIi | SPIr) cut into d, ai, ar, ei, er, pi, pr — that
/// exact order.
IkeSaKeys derive_classical_ike_keys(ByteView shared_secret, ByteView nonce_i, ByteView nonce_r,
                                    ByteView spi_i, ByteView spi_r);

/// KEYMAT = prf+(SK_d, Ni | Nr) cut into enc_i, int_i, enc_r, int_r.
ChildSaKeys derive_classical_child_keys(ByteView sk_d, ByteView nonce_i, ByteView nonce_r,
                                        size_t enc_len = 32, size_t int_len = 32);

}  // namespace nwulab::keys
