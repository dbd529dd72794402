#include "nwulab/uuid.hpp"

#include <cstring>
#include <stdexcept>

namespace nwulab {

Uuid Uuid::random(Rng& rng) {
  Uuid u;
  rng.fill(u.data);
  u.data[6] = static_cast<uint8_t>((u.data[6] & 0x0f) | 0x40);  // version 4
  u.data[8] = static_cast<uint8_t>((u.data[8] & 0x3f) | 0x80);  // variant 1
  return u;
}

Uuid Uuid::from_bytes(ByteView b) {
  if (b.size() != 16) throw std::invalid_argument("uuid needs exactly 16 bytes");
  Uuid u;
  std::memcpy(u.data.data(), b.data(), 16);
  return u;
}

std::string Uuid::str() const {
  std::string hex = to_hex(view());
  std::string out;
  out.reserve(36);
  out.append(hex, 0, 8);
  out.push_back('-');
  out.append(hex, 8, 4);
  out.push_back('-');
  out.append(hex, 12, 4);
  out.push_back('-');
  out.append(hex, 16, 4);
  out.push_back('-');
  out.append(hex, 20, 12);
  return out;
}

Uuid Uuid::parse(std::string_view s) {
  if (s.size() != 36 || s[8] != '-' || s[13] != '-' || s[18] != '-' || s[23] != '-') {
    throw std::invalid_argument("malformed uuid string");
  }
  std::string hex;
  hex.reserve(32);
  for (size_t i = 0; i < s.size(); ++i) {
    if (i == 8 || i == 13 || i == 18 || i == 23) continue;
    hex.push_back(s[i]);
  }
  return from_bytes(from_hex(hex));
}

size_t UuidHash::operator()(const Uuid& u) const {
  // FNV-1a over the 16 bytes; ids are uniformly random already.
  uint64_t h = 1469598103934665603ull;
  for (uint8_t c : u.data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return static_cast<size_t>(h);
}

}  // namespace nwulab
