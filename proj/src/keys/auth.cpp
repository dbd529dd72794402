#include "nwulab/keys/auth.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <memory>

#include "nwulab/keys/prf.hpp"

namespace nwulab::keys {

namespace {

constexpr std::array<uint8_t, 8> kBlobMagic = {'N', 'W', 'U', 'C', 'E', 'R', 'T', '1'};
constexpr size_t kEdKeyLen = 32;
constexpr size_t kEdSigLen = 64;

struct PkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;

struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

PkeyPtr load_private(ByteView key) {
  if (key.size() != kEdKeyLen) throw AuthError("bad Ed25519 private key length");
  PkeyPtr p(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, key.data(), key.size()));
  if (!p) throw AuthError("could not load Ed25519 private key");
  return p;
}

PkeyPtr load_public(ByteView key) {
  if (key.size() != kEdKeyLen) throw AuthError("bad Ed25519 public key length");
  PkeyPtr p(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, key.data(), key.size()));
  if (!p) throw AuthError("could not load Ed25519 public key");
  return p;
}

}  // namespace

CertIdentity make_cert_identity(std::string_view subject, size_t blob_size, Rng& rng) {
  if (subject.empty() || subject.size() > 0xffff) throw AuthError("bad subject length");

  CertIdentity id;
  id.subject = std::string(subject);
  id.private_key = rng.bytes(kEdKeyLen);

  PkeyPtr pkey = load_private(id.private_key);
  id.public_key.resize(kEdKeyLen);
  size_t pub_len = kEdKeyLen;
  if (!EVP_PKEY_get_raw_public_key(pkey.get(), id.public_key.data(), &pub_len) ||
      pub_len != kEdKeyLen) {
    throw AuthError("could not derive Ed25519 public key");
  }

  size_t fixed = kBlobMagic.size() + 2 + subject.size() + kEdKeyLen;
  if (blob_size < fixed) throw AuthError("blob size too small for the subject and key");

  id.blob.reserve(blob_size);
  id.blob.insert(id.blob.end(), kBlobMagic.begin(), kBlobMagic.end());
  put_u16(id.blob, static_cast<uint16_t>(subject.size()));
  id.blob.insert(id.blob.end(), subject.begin(), subject.end());
  id.blob.insert(id.blob.end(), id.public_key.begin(), id.public_key.end());

  // Filler is a hash chain over the identifying fields, so re-creating
  // the same identity yields a byte-identical blob.
  Bytes state = sha256(ByteView(id.blob));
  while (id.blob.size() < blob_size) {
    size_t take = std::min(state.size(), blob_size - id.blob.size());
    id.blob.insert(id.blob.end(), state.begin(), state.begin() + static_cast<ptrdiff_t>(take));
    state = sha256(state);
  }
  return id;
}

CertInfo parse_cert_blob(ByteView blob) {
  size_t min_len = kBlobMagic.size() + 2 + 1 + kEdKeyLen;
  if (blob.size() < min_len) throw AuthError("certificate blob truncated");
  if (!std::equal(kBlobMagic.begin(), kBlobMagic.end(), blob.begin())) {
    throw AuthError("certificate blob has the wrong magic");
  }
  size_t pos = kBlobMagic.size();
  uint16_t subject_len = read_u16(blob, pos);
  pos += 2;
  if (subject_len == 0 || pos + subject_len + kEdKeyLen > blob.size()) {
    throw AuthError("certificate blob subject length out of range");
  }
  CertInfo info;
  info.subject.assign(reinterpret_cast<const char*>(blob.data() + pos), subject_len);
  pos += subject_len;
  info.public_key.assign(blob.begin() + static_cast<ptrdiff_t>(pos),
                         blob.begin() + static_cast<ptrdiff_t>(pos + kEdKeyLen));
  return info;
}

Bytes ed25519_sign(ByteView private_key, ByteView message) {
  PkeyPtr pkey = load_private(private_key);
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx || !EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get())) {
    throw AuthError("could not start Ed25519 signing");
  }
  Bytes sig(kEdSigLen);
  size_t sig_len = sig.size();
  if (!EVP_DigestSign(ctx.get(), sig.data(), &sig_len, message.data(), message.size()) ||
      sig_len != kEdSigLen) {
    throw AuthError("Ed25519 signing failed");
  }
  return sig;
}

bool ed25519_verify(ByteView public_key, ByteView message, ByteView signature) {
  if (signature.size() != kEdSigLen) return false;
  PkeyPtr pkey = load_public(public_key);
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx || !EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get())) {
    throw AuthError("could not start Ed25519 verification");
  }
  return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), message.data(),
                          message.size()) == 1;
}

Bytes auth_signed_octets(ByteView first_message, ByteView peer_nonce, ByteView id_prf_key,
                         ByteView id_body) {
  Bytes id_mac = hmac_sha256(id_prf_key, id_body);
  return concat({first_message, peer_nonce, ByteView(id_mac)});
}

Bytes compute_psk_auth(ByteView secret, ByteView signed_octets) {
  static constexpr std::string_view kPad = "Key Pad for IKEv2";
  Bytes pad_key = hmac_sha256(secret, to_bytes(kPad));
  return hmac_sha256(pad_key, signed_octets);
}

bool verify_psk_auth(ByteView secret, ByteView signed_octets, ByteView auth_data) {
  Bytes expected = compute_psk_auth(secret, signed_octets);
  return ct_equal(expected, auth_data);
}

}  // namespace nwulab::keys
