#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nwulab/bytes.hpp"

namespace nwulab::transport {

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Largest payload a UDP datagram over IPv4 can carry; the memory link
/// enforces the same bound so the two are interchangeable.
inline constexpr size_t kMaxDatagram = 65507;

struct WireRecord {
  std::string label;       // sender-assigned; empty on receive records
  size_t bytes_on_wire = 0;
  uint64_t timestamp_ns = 0;  // monotonic clock
  enum class Direction : uint8_t { Send, Recv } direction = Direction::Send;
};

/// One end of a datagram path. An endpoint belongs to one thread; the
/// trace may be read by others only after that thread is done with it.
class Endpoint {
 public:
  virtual ~Endpoint() = default;

  /// Throws TransportError if the path is closed or the payload exceeds
  /// kMaxDatagram. The label tags the trace record only; it does not go
  /// on the wire.
  virtual void send(ByteView bytes, std::string_view label) = 0;

  /// Blocks up to `timeout`; nullopt on timeout or when the path is
  /// closed and drained.
  virtual std::optional<Bytes> recv(std::chrono::milliseconds timeout) = 0;

  virtual void close() = 0;

  virtual std::vector<WireRecord> trace() const = 0;
};

struct LinkPair {
  std::unique_ptr<Endpoint> a;
  std::unique_ptr<Endpoint> b;
};

}  // namespace nwulab::transport
