#pragma once

#include "nwulab/transport/endpoint.hpp"

namespace nwulab::transport {

struct LinkOptions {
  /// One-way delivery delay applied to every datagram.
  std::chrono::microseconds latency{0};
  /// Probability that any one datagram silently disappears.
  double loss_probability = 0.0;
  /// Seed for the loss draw, so lossy runs can be replayed.
  uint64_t loss_seed = 0;
};

/// Two endpoints joined by an in-process datagram path: FIFO per
/// direction, optional fixed latency and seeded random loss.
LinkPair make_memory_link(const LinkOptions& options = {});

}  // namespace nwulab::transport
