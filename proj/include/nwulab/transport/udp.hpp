#pragma once

#include "nwulab/transport/endpoint.hpp"

namespace nwulab::transport {

/// Two UDP sockets on 127.0.0.1, each connected to the other. Same
/// contract as the memory link, with the kernel in the middle.
LinkPair make_udp_pair();

}  // namespace nwulab::transport
