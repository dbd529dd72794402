#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nwulab {

using Bytes = std::vector<uint8_t>;
using ByteView = std::span<const uint8_t>;

Bytes to_bytes(std::string_view s);
std::string to_ascii(ByteView b);

// Big-endian append helpers. The IKEv2 wire format is big-endian throughout.
void put_u8(Bytes& out, uint8_t v);
void put_u16(Bytes& out, uint16_t v);
void put_u32(Bytes& out, uint32_t v);
void put_u64(Bytes& out, uint64_t v);
void put_bytes(Bytes& out, ByteView b);

// Readers assume the caller has bounds-checked offset+width.
uint8_t read_u8(ByteView in, size_t off);
uint16_t read_u16(ByteView in, size_t off);
uint32_t read_u32(ByteView in, size_t off);
uint64_t read_u64(ByteView in, size_t off);

std::string to_hex(ByteView b);
Bytes from_hex(std::string_view h);  // throws std::invalid_argument on bad input

// Constant-time comparison for secrets and integrity tags.
bool ct_equal(ByteView a, ByteView b);

Bytes concat(std::initializer_list<ByteView> parts);

std::string base64_encode(ByteView b);
Bytes base64_decode(std::string_view s);  // strict; throws std::invalid_argument

}  // namespace nwulab
