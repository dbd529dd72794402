#include "nwulab/transport/link.hpp"

#include <condition_variable>
#include <deque>
#include <mutex>
#include <random>

namespace nwulab::transport {

namespace {

using Clock = std::chrono::steady_clock;

uint64_t now_ns() {
  return static_cast<uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now().time_since_epoch())
          .count());
}

struct Parcel {
  Bytes data;
  Clock::time_point deliver_at;
};

/// One direction of the link.
struct Channel {
  std::mutex mutex;
  std::condition_variable ready;
  std::deque<Parcel> queue;
  bool closed = false;
};

struct LinkState {
  LinkOptions options;
  Channel a_to_b;
  Channel b_to_a;
  std::mutex loss_mutex;
  std::mt19937_64 loss_rng;

  explicit LinkState(const LinkOptions& opts) : options(opts), loss_rng(opts.loss_seed) {}

  bool drop() {
    if (options.loss_probability <= 0.0) return false;
    std::lock_guard lock(loss_mutex);
    return std::uniform_real_distribution<double>(0.0, 1.0)(loss_rng) <
           options.loss_probability;
  }
};

class MemoryEndpoint final : public Endpoint {
 public:
  MemoryEndpoint(std::shared_ptr<LinkState> link, Channel& out, Channel& in)
      : link_(std::move(link)), out_(out), in_(in) {}

  ~MemoryEndpoint() override { close(); }

  void send(ByteView bytes, std::string_view label) override {
    if (bytes.size() > kMaxDatagram) {
      throw TransportError("datagram of " + std::to_string(bytes.size()) +
                           " bytes exceeds the 65507-byte limit");
    }
    // Stamp before the datagram becomes visible to the peer, so send
    // times stay causally ordered across the two endpoints' traces.
    uint64_t stamp = now_ns();
    {
      std::lock_guard lock(out_.mutex);
      if (out_.closed) throw TransportError("link is closed");
      if (!link_->drop()) {
        out_.queue.push_back({Bytes(bytes.begin(), bytes.end()),
                              Clock::now() + link_->options.latency});
      }
    }
    out_.ready.notify_one();
    record(label, bytes.size(), stamp, WireRecord::Direction::Send);
  }

  std::optional<Bytes> recv(std::chrono::milliseconds timeout) override {
    std::unique_lock lock(in_.mutex);
    auto deadline = Clock::now() + timeout;
    while (true) {
      auto now = Clock::now();
      if (!in_.queue.empty() && in_.queue.front().deliver_at <= now) {
        Bytes data = std::move(in_.queue.front().data);
        in_.queue.pop_front();
        lock.unlock();
        record("", data.size(), now_ns(), WireRecord::Direction::Recv);
        return data;
      }
      if (in_.closed && in_.queue.empty()) return std::nullopt;
      if (now >= deadline) return std::nullopt;
      // Sleep until the deadline or until the head datagram lands,
      // whichever comes first; sends and close() also wake us.
      auto until = deadline;
      if (!in_.queue.empty()) until = std::min(until, in_.queue.front().deliver_at);
      in_.ready.wait_until(lock, until);
    }
  }

  void close() override {
    for (Channel* ch : {&out_, &in_}) {
      {
        std::lock_guard lock(ch->mutex);
        ch->closed = true;
      }
      ch->ready.notify_all();
    }
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

  std::shared_ptr<LinkState> link_;
  Channel& out_;
  Channel& in_;
  mutable std::mutex trace_mutex_;
  std::vector<WireRecord> trace_;
};

}  // namespace

LinkPair make_memory_link(const LinkOptions& options) {
  auto state = std::make_shared<LinkState>(options);
  LinkPair pair;
  pair.a = std::make_unique<MemoryEndpoint>(state, state->a_to_b, state->b_to_a);
  pair.b = std::make_unique<MemoryEndpoint>(state, state->b_to_a, state->a_to_b);
  return pair;
}

}  // namespace nwulab::transport
