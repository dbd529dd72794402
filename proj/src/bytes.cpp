#include "nwulab/bytes.hpp"

#include <openssl/crypto.h>

#include <stdexcept>

namespace nwulab {

Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

std::string to_ascii(ByteView b) { return std::string(b.begin(), b.end()); }

void put_u8(Bytes& out, uint8_t v) { out.push_back(v); }

void put_u16(Bytes& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_u32(Bytes& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_u64(Bytes& out, uint64_t v) {
  put_u32(out, static_cast<uint32_t>(v >> 32));
  put_u32(out, static_cast<uint32_t>(v));
}

void put_bytes(Bytes& out, ByteView b) { out.insert(out.end(), b.begin(), b.end()); }

uint8_t read_u8(ByteView in, size_t off) { return in[off]; }

uint16_t read_u16(ByteView in, size_t off) {
  return static_cast<uint16_t>((in[off] << 8) | in[off + 1]);
}

uint32_t read_u32(ByteView in, size_t off) {
  return (static_cast<uint32_t>(in[off]) << 24) | (static_cast<uint32_t>(in[off + 1]) << 16) |
         (static_cast<uint32_t>(in[off + 2]) << 8) | static_cast<uint32_t>(in[off + 3]);
}

uint64_t read_u64(ByteView in, size_t off) {
  return (static_cast<uint64_t>(read_u32(in, off)) << 32) | read_u32(in, off + 4);
}

static constexpr char kHexDigits[] = "0123456789abcdef";

std::string to_hex(ByteView b) {
  std::string out;
  out.reserve(b.size() * 2);
  for (uint8_t c : b) {
    out.push_back(kHexDigits[c >> 4]);
    out.push_back(kHexDigits[c & 0x0f]);
  }
  return out;
}

static int hex_val(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

Bytes from_hex(std::string_view h) {
  if (h.size() % 2 != 0) throw std::invalid_argument("hex string has odd length");
  Bytes out;
  out.reserve(h.size() / 2);
  for (size_t i = 0; i < h.size(); i += 2) {
    int hi = hex_val(h[i]);
    int lo = hex_val(h[i + 1]);
    if (hi < 0 || lo < 0) throw std::invalid_argument("bad hex digit");
    out.push_back(static_cast<uint8_t>((hi << 4) | lo));
  }
  return out;
}

bool ct_equal(ByteView a, ByteView b) {
  if (a.size() != b.size()) return false;
  if (a.empty()) return true;
  return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

Bytes concat(std::initializer_list<ByteView> parts) {
  size_t total = 0;
  for (const auto& p : parts) total += p.size();
  Bytes out;
  out.reserve(total);
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

static constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(ByteView b) {
  std::string out;
  out.reserve(((b.size() + 2) / 3) * 4);
  size_t i = 0;
  for (; i + 3 <= b.size(); i += 3) {
    uint32_t v = (b[i] << 16) | (b[i + 1] << 8) | b[i + 2];
    out.push_back(kB64Alphabet[(v >> 18) & 0x3f]);
    out.push_back(kB64Alphabet[(v >> 12) & 0x3f]);
    out.push_back(kB64Alphabet[(v >> 6) & 0x3f]);
    out.push_back(kB64Alphabet[v & 0x3f]);
  }
  size_t rem = b.size() - i;
  if (rem == 1) {
    uint32_t v = b[i] << 16;
    out.push_back(kB64Alphabet[(v >> 18) & 0x3f]);
    out.push_back(kB64Alphabet[(v >> 12) & 0x3f]);
    out.push_back('=');
    out.push_back('=');
  } else if (rem == 2) {
    uint32_t v = (b[i] << 16) | (b[i + 1] << 8);
    out.push_back(kB64Alphabet[(v >> 18) & 0x3f]);
    out.push_back(kB64Alphabet[(v >> 12) & 0x3f]);
    out.push_back(kB64Alphabet[(v >> 6) & 0x3f]);
    out.push_back('=');
  }
  return out;
}

static int b64_val(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

Bytes base64_decode(std::string_view s) {
  if (s.size() % 4 != 0) throw std::invalid_argument("base64 length not a multiple of 4");
  Bytes out;
  out.reserve((s.size() / 4) * 3);
  for (size_t i = 0; i < s.size(); i += 4) {
    int pad = 0;
    uint32_t v = 0;
    for (size_t j = 0; j < 4; ++j) {
      char c = s[i + j];
      if (c == '=') {
        if (i + 4 != s.size() || j < 2) throw std::invalid_argument("misplaced base64 padding");
        ++pad;
        v <<= 6;
        continue;
      }
      if (pad > 0) throw std::invalid_argument("data after base64 padding");
      int d = b64_val(c);
      if (d < 0) throw std::invalid_argument("bad base64 character");
      v = (v << 6) | static_cast<uint32_t>(d);
    }
    out.push_back(static_cast<uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<uint8_t>(v));
  }
  return out;
}

}  // namespace nwulab
