#include "nwulab/keys/prf.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <atomic>
#include <string>

namespace nwulab::keys {

namespace {
std::atomic<uint64_t> g_prf_plus_count{0};
}

Bytes hmac_sha256(ByteView key, ByteView data) {
  Bytes out(kPrfOutputLen);
  unsigned int out_len = 0;
  if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(),
            out.data(), &out_len) ||
      out_len != kPrfOutputLen) {
    throw PrfError("HMAC-SHA-256 failed");
  }
  return out;
}

namespace {

Bytes digest(const EVP_MD* md, ByteView data, const char* name) {
  Bytes out(EVP_MAX_MD_SIZE);
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), out.data(), &len, md, nullptr)) {
    throw PrfError(std::string(name) + " failed");
  }
  out.resize(len);
  return out;
}

}  // namespace

Bytes sha256(ByteView data) { return digest(EVP_sha256(), data, "SHA-256"); }

Bytes sha1(ByteView data) { return digest(EVP_sha1(), data, "SHA-1"); }

Bytes prf_plus(ByteView key, ByteView seed, size_t out_len) {
  if (out_len == 0) return {};
  size_t blocks = (out_len + kPrfOutputLen - 1) / kPrfOutputLen;
  if (blocks > 255) throw PrfError("prf+ output longer than 255 blocks");

  g_prf_plus_count.fetch_add(1, std::memory_order_relaxed);

  Bytes out;
  out.reserve(blocks * kPrfOutputLen);
  Bytes t;
  for (size_t n = 1; n <= blocks; ++n) {
    Bytes input;
    input.reserve(t.size() + seed.size() + 1);
    input.insert(input.end(), t.begin(), t.end());
    input.insert(input.end(), seed.begin(), seed.end());
    input.push_back(static_cast<uint8_t>(n));
    t = hmac_sha256(key, input);
    out.insert(out.end(), t.begin(), t.end());
  }
  out.resize(out_len);
  return out;
}

uint64_t prf_plus_count() { return g_prf_plus_count.load(std::memory_order_relaxed); }
void reset_prf_plus_count() { g_prf_plus_count.store(0, std::memory_order_relaxed); }

}  // namespace nwulab::keys
