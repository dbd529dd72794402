#include "nwulab/keys/dh.hpp"

#include <openssl/bn.h>

#include <atomic>
#include <mutex>

namespace nwulab::keys {

namespace {

std::atomic<uint64_t> g_modexp_count{0};

struct BnDeleter {
  void operator()(BIGNUM* bn) const { BN_free(bn); }
};
using BnPtr = std::unique_ptr<BIGNUM, BnDeleter>;

struct BnCtxDeleter {
  void operator()(BN_CTX* ctx) const { BN_CTX_free(ctx); }
};
using BnCtxPtr = std::unique_ptr<BN_CTX, BnCtxDeleter>;

BnPtr bytes_to_bn(ByteView b) {
  BIGNUM* bn = BN_bin2bn(b.data(), static_cast<int>(b.size()), nullptr);
  if (!bn) throw DhError("big-number conversion failed");
  return BnPtr(bn);
}

Bytes bn_to_padded_bytes(const BIGNUM* bn, size_t width) {
  Bytes out(width);
  if (BN_bn2binpad(bn, out.data(), static_cast<int>(width)) < 0) {
    throw DhError("value wider than the group prime");
  }
  return out;
}

}  // namespace

struct DhGroup {
  BnPtr p;
  BnPtr g;
  size_t prime_bytes = 0;
  size_t prime_bits = 0;
};

DhGroupPtr modp2048() {
  static DhGroupPtr group = [] {
    auto g = std::make_shared<DhGroup>();
    g->p = BnPtr(BN_get_rfc3526_prime_2048(nullptr));
    if (!g->p) throw DhError("could not load the 2048-bit MODP prime");
    g->g = BnPtr(BN_new());
    if (!g->g || !BN_set_word(g->g.get(), 2)) throw DhError("could not set generator");
    g->prime_bits = static_cast<size_t>(BN_num_bits(g->p.get()));
    g->prime_bytes = static_cast<size_t>(BN_num_bytes(g->p.get()));
    return DhGroupPtr(std::move(g));
  }();
  return group;
}

DhGroupPtr make_group(std::string_view prime_hex, uint64_t generator) {
  auto g = std::make_shared<DhGroup>();
  BIGNUM* p = nullptr;
  if (!BN_hex2bn(&p, std::string(prime_hex).c_str())) {
    throw DhError("bad prime hex");
  }
  g->p = BnPtr(p);
  g->g = BnPtr(BN_new());
  if (!g->g || !BN_set_word(g->g.get(), generator)) throw DhError("could not set generator");
  if (BN_cmp(g->g.get(), g->p.get()) >= 0 || BN_cmp(g->g.get(), BN_value_one()) <= 0) {
    throw DhError("generator out of range for the prime");
  }
  g->prime_bits = static_cast<size_t>(BN_num_bits(g->p.get()));
  g->prime_bytes = static_cast<size_t>(BN_num_bytes(g->p.get()));
  return g;
}

size_t group_prime_bytes(const DhGroup& group) { return group.prime_bytes; }
size_t group_prime_bits(const DhGroup& group) { return group.prime_bits; }

DhKeyPair dh_keypair(const DhGroup& group, Rng& rng, size_t private_bits) {
  if (private_bits == 0) private_bits = group.prime_bits;
  size_t priv_len = (private_bits + 7) / 8;

  // Draw until the exponent is in [1, p-2]; with a full-width draw this
  // loops at most a couple of times even for tiny test primes.
  BnPtr x;
  Bytes priv;
  BnPtr p_minus_1(BN_dup(group.p.get()));
  if (!p_minus_1 || !BN_sub_word(p_minus_1.get(), 1)) throw DhError("group arithmetic failed");
  for (int attempt = 0; attempt < 1000; ++attempt) {
    priv = rng.bytes(priv_len);
    if (private_bits % 8 != 0) {
      priv[0] &= static_cast<uint8_t>(0xff >> (8 - private_bits % 8));
    }
    x = bytes_to_bn(priv);
    if (!BN_is_zero(x.get()) && BN_cmp(x.get(), p_minus_1.get()) < 0) break;
    x.reset();
  }
  if (!x) throw DhError("could not draw a private exponent in range");

  BnCtxPtr ctx(BN_CTX_new());
  BnPtr pub(BN_new());
  if (!ctx || !pub) throw DhError("out of memory");
  if (!BN_mod_exp(pub.get(), group.g.get(), x.get(), group.p.get(), ctx.get())) {
    throw DhError("modular exponentiation failed");
  }
  g_modexp_count.fetch_add(1, std::memory_order_relaxed);

  DhKeyPair pair;
  pair.private_key = std::move(priv);
  pair.public_key = bn_to_padded_bytes(pub.get(), group.prime_bytes);
  return pair;
}

Bytes dh_shared_secret(const DhGroup& group, ByteView private_key, ByteView peer_public) {
  BnPtr peer = bytes_to_bn(peer_public);
  BnPtr p_minus_1(BN_dup(group.p.get()));
  if (!p_minus_1 || !BN_sub_word(p_minus_1.get(), 1)) throw DhError("group arithmetic failed");
  if (BN_cmp(peer.get(), p_minus_1.get()) >= 0) {
    throw DhError("peer public value out of range");
  }
  // 0 and 1 force the shared secret to a constant; p-1 leaks the exponent
  // parity. All three are rejected outright.
  if (BN_is_zero(peer.get()) || BN_is_one(peer.get())) {
    throw DhError("degenerate peer public value");
  }

  BnPtr x = bytes_to_bn(private_key);
  BnCtxPtr ctx(BN_CTX_new());
  BnPtr shared(BN_new());
  if (!ctx || !shared) throw DhError("out of memory");
  if (!BN_mod_exp(shared.get(), peer.get(), x.get(), group.p.get(), ctx.get())) {
    throw DhError("modular exponentiation failed");
  }
  g_modexp_count.fetch_add(1, std::memory_order_relaxed);
  return bn_to_padded_bytes(shared.get(), group.prime_bytes);
}

uint64_t modexp_count() { return g_modexp_count.load(std::memory_order_relaxed); }
void reset_modexp_count() { g_modexp_count.store(0, std::memory_order_relaxed); }

}  // namespace nwulab::keys
