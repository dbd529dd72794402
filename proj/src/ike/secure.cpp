#include "nwulab/ike/secure.hpp"

#include <openssl/evp.h>

#include <memory>

#include "nwulab/keys/prf.hpp"

namespace nwulab::ike {

namespace {

constexpr size_t kBlockLen = 16;
constexpr size_t kTagLen = 16;
constexpr size_t kKeyLen = 32;

struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

void check_keys(const SaDirectionKeys& keys) {
  if (keys.enc.size() != kKeyLen || keys.integ.size() != kKeyLen) {
    throw IntegrityError("protection keys must be 32 bytes each");
  }
}

Bytes cbc_crypt(ByteView key, ByteView iv, ByteView in, bool encrypt) {
  CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
  if (!ctx ||
      !EVP_CipherInit_ex(ctx.get(), EVP_aes_256_cbc(), nullptr, key.data(), iv.data(),
                         encrypt ? 1 : 0) ||
      !EVP_CIPHER_CTX_set_padding(ctx.get(), 0)) {
    throw IntegrityError("cipher setup failed");
  }
  Bytes out(in.size());
  int len = 0;
  if (!EVP_CipherUpdate(ctx.get(), out.data(), &len, in.data(), static_cast<int>(in.size()))) {
    throw IntegrityError("cipher update failed");
  }
  int fin = 0;
  if (!EVP_CipherFinal_ex(ctx.get(), out.data() + len, &fin)) {
    throw IntegrityError("cipher finalization failed");
  }
  out.resize(static_cast<size_t>(len + fin));
  if (out.size() != in.size()) throw IntegrityError("cipher length mismatch");
  return out;
}

Bytes compute_tag(ByteView integ_key, ByteView aad, ByteView iv, ByteView ciphertext) {
  Bytes mac = keys::hmac_sha256(integ_key, concat({aad, iv, ciphertext}));
  mac.resize(kTagLen);
  return mac;
}

}  // namespace

SkPayload seal(ByteView plaintext, PayloadType first_inner, const SaDirectionKeys& keys,
               ByteView aad, Rng& rng) {
  check_keys(keys);

  // Zero padding, then one byte holding the pad length; total a whole
  // number of blocks.
  size_t pad = (kBlockLen - (plaintext.size() + 1) % kBlockLen) % kBlockLen;
  Bytes padded;
  padded.reserve(plaintext.size() + pad + 1);
  padded.insert(padded.end(), plaintext.begin(), plaintext.end());
  padded.insert(padded.end(), pad, 0);
  padded.push_back(static_cast<uint8_t>(pad));

  SkPayload sk;
  sk.first_inner = first_inner;
  sk.iv = rng.bytes(kBlockLen);
  sk.ciphertext = cbc_crypt(keys.enc, sk.iv, padded, true);
  sk.tag = compute_tag(keys.integ, aad, sk.iv, sk.ciphertext);
  return sk;
}

Bytes open(const SkPayload& sk, const SaDirectionKeys& keys, ByteView aad) {
  check_keys(keys);
  if (sk.iv.size() != kBlockLen || sk.tag.size() != kTagLen || sk.ciphertext.empty() ||
      sk.ciphertext.size() % kBlockLen != 0) {
    throw IntegrityError("malformed encrypted container");
  }
  Bytes expected = compute_tag(keys.integ, aad, sk.iv, sk.ciphertext);
  if (!ct_equal(expected, sk.tag)) throw IntegrityError("integrity check failed");

  Bytes padded = cbc_crypt(keys.enc, sk.iv, sk.ciphertext, false);
  uint8_t pad = padded.back();
  if (pad + 1u > padded.size()) throw IntegrityError("bad padding length");
  padded.resize(padded.size() - pad - 1);
  return padded;
}

Bytes seal_message(const IkeHeader& header, const std::vector<Payload>& inner,
                   const SaDirectionKeys& keys, Rng& rng) {
  PayloadType first_inner =
      inner.empty() ? PayloadType::None : payload_type(inner.front());
  Bytes plaintext = encode_payload_chain(inner);

  // Tag input: everything on the wire before the ciphertext, i.e. the
  // message header plus the SK generic header, then IV and ciphertext.
  // Sealing against a dummy SK payload of the right size yields those
  // prefix bytes, since lengths depend only on the plaintext size.
  size_t pad = (kBlockLen - (plaintext.size() + 1) % kBlockLen) % kBlockLen;
  size_t ct_len = plaintext.size() + pad + 1;

  IkeMessage shell;
  shell.header = header;
  SkPayload placeholder;
  placeholder.first_inner = first_inner;
  placeholder.iv = Bytes(kBlockLen, 0);
  placeholder.ciphertext = Bytes(ct_len, 0);
  placeholder.tag = Bytes(kTagLen, 0);
  Bytes wire = encode_message({shell.header, {Payload{placeholder}}});

  ByteView aad = ByteView(wire).first(kHeaderLen + kGenericHeaderLen);
  SkPayload sealed = seal(plaintext, first_inner, keys, aad, rng);

  size_t off = kHeaderLen + kGenericHeaderLen;
  std::copy(sealed.iv.begin(), sealed.iv.end(), wire.begin() + static_cast<ptrdiff_t>(off));
  off += kBlockLen;
  std::copy(sealed.ciphertext.begin(), sealed.ciphertext.end(),
            wire.begin() + static_cast<ptrdiff_t>(off));
  off += ct_len;
  std::copy(sealed.tag.begin(), sealed.tag.end(), wire.begin() + static_cast<ptrdiff_t>(off));
  return wire;
}

OpenedMessage open_message(ByteView wire, const SaDirectionKeys& keys) {
  IkeMessage outer = decode_message(wire);
  if (outer.payloads.size() != 1 || !std::holds_alternative<SkPayload>(outer.payloads.front())) {
    throw ParseError("expected exactly one encrypted container", kHeaderLen);
  }
  const auto& sk = std::get<SkPayload>(outer.payloads.front());

  ByteView aad = wire.first(kHeaderLen + kGenericHeaderLen);
  Bytes plaintext = open(sk, keys, aad);

  OpenedMessage out;
  out.header = outer.header;
  out.payloads = decode_payload_chain(plaintext, sk.first_inner);
  return out;
}

}  // namespace nwulab::ike
