#include "nwulab/keys/schedule.hpp"

#include <string>

#include "nwulab/keys/prf.hpp"

namespace nwulab::keys {

QkdAssignment assign_qkd_keys(std::span<const Bytes> keys, const KeyAssignmentPlan& plan) {
  if (keys.size() != plan.slot_count()) {
    throw ScheduleError("key count " + std::to_string(keys.size()) +
                        " does not match the assignment plan (" +
                        std::to_string(plan.slot_count()) + " slots)");
  }
  QkdAssignment out;
  size_t i = 0;
  out.ike.sk_ei = keys[i++];
  out.ike.sk_er = keys[i++];
  out.ike.sk_ai = keys[i++];
  out.ike.sk_ar = keys[i++];
  out.children.resize(plan.child_sa_count);
  for (ChildSaKeys& child : out.children) {
    child.enc_i = keys[i++];
    child.enc_r = keys[i++];
    child.int_i = keys[i++];
    child.int_r = keys[i++];
  }
  if (plan.psk_auth) out.auth_key = keys[i++];
  return out;
}

IkeSaKeys derive_classical_ike_keys(ByteView shared_secret, ByteView nonce_i, ByteView nonce_r,
                                    ByteView spi_i, ByteView spi_r) {
  Bytes skeyseed = hmac_sha256(concat({nonce_i, nonce_r}), shared_secret);
  Bytes seed = concat({nonce_i, nonce_r, spi_i, spi_r});
  Bytes stream = prf_plus(skeyseed, seed, 7 * kPrfOutputLen);

  auto cut = [&stream](size_t index) {
    auto begin = stream.begin() + static_cast<ptrdiff_t>(index * kPrfOutputLen);
    return Bytes(begin, begin + kPrfOutputLen);
  };
  IkeSaKeys keys;
  keys.sk_d = cut(0);
  keys.sk_ai = cut(1);
  keys.sk_ar = cut(2);
  keys.sk_ei = cut(3);
  keys.sk_er = cut(4);
  keys.sk_pi = cut(5);
  keys.sk_pr = cut(6);
  return keys;
}

ChildSaKeys derive_classical_child_keys(ByteView sk_d, ByteView nonce_i, ByteView nonce_r,
                                        size_t enc_len, size_t int_len) {
  Bytes stream = prf_plus(sk_d, concat({nonce_i, nonce_r}), 2 * (enc_len + int_len));

  size_t pos = 0;
  auto cut = [&stream, &pos](size_t len) {
    auto begin = stream.begin() + static_cast<ptrdiff_t>(pos);
    pos += len;
    return Bytes(begin, begin + static_cast<ptrdiff_t>(len));
  };
  ChildSaKeys keys;
  keys.enc_i = cut(enc_len);
  keys.int_i = cut(int_len);
  keys.enc_r = cut(enc_len);
  keys.int_r = cut(int_len);
  return keys;
}

}  // namespace nwulab::keys
