#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "nwulab/bytes.hpp"
#include "nwulab/rng.hpp"

namespace nwulab {

/// 128-bit key identifier in RFC 4122 v4 shape. The raw 16-byte form is
/// what goes on the IKE wire; the dashed string form is what the ETSI 014
/// JSON bodies carry.
struct Uuid {
  std::array<uint8_t, 16> data{};

  static Uuid random(Rng& rng);
  static Uuid from_bytes(ByteView b);         // throws if b.size() != 16
  static Uuid parse(std::string_view s);      // 8-4-4-4-12 hex, throws on bad input

  std::string str() const;
  ByteView view() const { return ByteView(data.data(), data.size()); }

  auto operator<=>(const Uuid&) const = default;
};

struct UuidHash {
  size_t operator()(const Uuid& u) const;
};

}  // namespace nwulab
