#pragma once

#include <stdexcept>
#include <string>

#include "nwulab/ike/message.hpp"

namespace nwulab::ike {

class EncodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Decode failure. Carries where in the input it happened and, when the
/// failure is inside a payload, that payload's position in the chain.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, size_t offset, int payload_index = -1)
      : std::runtime_error(what + " (offset " + std::to_string(offset) + ")"),
        offset_(offset),
        payload_index_(payload_index) {}

  size_t offset() const { return offset_; }
  int payload_index() const { return payload_index_; }

 private:
  size_t offset_;
  int payload_index_;
};

Bytes encode_message(const IkeMessage& msg);

/// Strict: the header length must equal the buffer size, the payload
/// chain must terminate exactly at the end, and every nested length must
/// stay in bounds. Unknown payload types are skipped unless their
/// critical bit is set. Never reads out of bounds on any input.
IkeMessage decode_message(ByteView wire);

/// One payload body, without its generic header.
Bytes encode_payload_body(const Payload& p);

/// The identification payload body (type + reserved + data): the exact
/// octets the authentication binding covers.
Bytes encode_id_body(const IdBody& id);

/// A payload chain with generic headers, as carried inside an SK
/// container. An SK payload cannot itself appear in a chain.
Bytes encode_payload_chain(const std::vector<Payload>& payloads);
std::vector<Payload> decode_payload_chain(ByteView data, PayloadType first);

}  // namespace nwulab::ike
