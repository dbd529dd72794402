#include "nwulab/transport/udp.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <mutex>

namespace nwulab::transport {

namespace {

uint64_t now_ns() {
  return static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                   std::chrono::steady_clock::now().time_since_epoch())
                                   .count());
}

[[noreturn]] void throw_errno(const char* what) {
  throw TransportError(std::string(what) + ": " + std::strerror(errno));
}

int make_bound_socket(sockaddr_in& addr) {
  int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd < 0) throw_errno("socket");
  std::memset(&addr, 0, sizeof(addr));
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    ::close(fd);
    throw_errno("bind");
  }
  socklen_t len = sizeof(addr);
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) < 0) {
    ::close(fd);
    throw_errno("getsockname");
  }
  return fd;
}

class UdpEndpoint final : public Endpoint {
 public:
  explicit UdpEndpoint(int fd) : fd_(fd) {}
  ~UdpEndpoint() override { close(); }

  void send(ByteView bytes, std::string_view label) override {
    if (bytes.size() > kMaxDatagram) {
      throw TransportError("datagram of " + std::to_string(bytes.size()) +
                           " bytes exceeds the 65507-byte limit");
    }
    int fd = fd_.load();
    if (fd < 0) throw TransportError("socket is closed");
    // Stamp before the datagram hits the socket, so send times stay
    // causally ordered across the two endpoints' traces.
    uint64_t stamp = now_ns();
    ssize_t n = ::send(fd, bytes.data(), bytes.size(), 0);
    if (n < 0) throw_errno("send");
    if (static_cast<size_t>(n) != bytes.size()) throw TransportError("short datagram send");
    record(label, bytes.size(), stamp, WireRecord::Direction::Send);
  }

  std::optional<Bytes> recv(std::chrono::milliseconds timeout) override {
    int fd = fd_.load();
    if (fd < 0) return std::nullopt;
    pollfd pfd{fd, POLLIN, 0};
    int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    if (rc < 0) {
      if (errno == EINTR) return std::nullopt;
      throw_errno("poll");
    }
    if (rc == 0 || !(pfd.revents & POLLIN)) return std::nullopt;
    Bytes buf(65536);
    ssize_t n = ::recv(fd, buf.data(), buf.size(), 0);
    if (n < 0) {
      if (errno == ECONNREFUSED) return std::nullopt;
      throw_errno("recv");
    }
    buf.resize(static_cast<size_t>(n));
    record("", buf.size(), now_ns(), WireRecord::Direction::Recv);
    return buf;
  }

  void close() override {
    int fd = fd_.exchange(-1);
    if (fd >= 0) ::close(fd);
  }

  std::vector<WireRecord> trace() const override {
    std::lock_guard lock(trace_mutex_);
    return trace_;
  }

 private:
  void record(std::string_view label, size_t n, uint64_t stamp,
              WireRecord::Direction dir) {
    std::lock_guard lock(trace_mutex_);
    trace_.push_back({std::string(label), n, stamp, dir});
  }

  std::atomic<int> fd_;
  mutable std::mutex trace_mutex_;
  std::vector<WireRecord> trace_;
};

}  // namespace

LinkPair make_udp_pair() {
  sockaddr_in addr_a{};
  sockaddr_in addr_b{};
  int fd_a = make_bound_socket(addr_a);
  int fd_b;
  try {
    fd_b = make_bound_socket(addr_b);
  } catch (...) {
    ::close(fd_a);
    throw;
  }
  if (::connect(fd_a, reinterpret_cast<sockaddr*>(&addr_b), sizeof(addr_b)) < 0 ||
      ::connect(fd_b, reinterpret_cast<sockaddr*>(&addr_a), sizeof(addr_a)) < 0) {
    ::close(fd_a);
    ::close(fd_b);
    throw_errno("connect");
  }
  LinkPair pair;
  pair.a = std::make_unique<UdpEndpoint>(fd_a);
  pair.b = std::make_unique<UdpEndpoint>(fd_b);
  return pair;
}

}  // namespace nwulab::transport
