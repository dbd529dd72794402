#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nwulab/handshake/config.hpp"
#include "nwulab/handshake/session.hpp"
#include "nwulab/kms/client.hpp"
#include "nwulab/kms/store.hpp"
#include "nwulab/transport/endpoint.hpp"
#include "nwulab/transport/link.hpp"

namespace nwulab::handshake {

/// Trace label for one datagram: exchange name, message id, direction,
/// e.g. "IKE_SA_INIT MID=00 I". Requests and responses of one exchange
/// share everything but the final letter.
std::string wire_label(ByteView wire);

struct RunOptions {
  /// Seeds both ends' RNGs (differently) for reproducible runs; unset
  /// draws from the system RNG.
  std::optional<uint64_t> seed;

  /// Real UDP sockets on loopback instead of the in-memory link.
  bool use_udp = false;

  /// Latency/loss shaping; memory link only.
  transport::LinkOptions link;

  /// Key source for QKD mode: either one simulated KMS pair (the runner
  /// registers the configured SAEs and builds in-process clients), or
  /// explicit clients, which take precedence and may point anywhere.
  kms::KmsSystem* kms = nullptr;
  kms::KmsClient* initiator_kms = nullptr;
  kms::KmsClient* responder_kms = nullptr;
};

/// Everything one handshake run produced, for checks and benchmarks.
struct HandshakeResult {
  bool success = false;
  std::string error;              // initiator-side failure, when !success
  std::string responder_failure;  // responder's refusal reason, if any
  Mode mode = Mode::DhPsk;

  // Monotonic-clock marks: run start, IKE_SA_INIT done, IKE_AUTH done,
  // session established. Unreached marks collapse onto the run's end so
  // the three phase spans always sum to the total.
  int64_t t0_ns = 0, t1_ns = 0, t2_ns = 0, t3_ns = 0;
  double init_ms() const { return double(t1_ns - t0_ns) / 1e6; }
  double auth_ms() const { return double(t2_ns - t1_ns) / 1e6; }
  double child_ms() const { return double(t3_ns - t2_ns) / 1e6; }
  double total_ms() const { return double(t3_ns - t0_ns) / 1e6; }

  bool keys_match = false;  // byte-identical SessionKeys on both ends
  bool probes_ok = false;   // seal/open succeeded across ends on every SA
  std::string key_fingerprint;  // digest over the initiator's key set

  size_t message_count = 0;  // distinct datagram labels both ends sent
  uint64_t modexp_count = 0;     // modular exponentiations this run
  uint64_t prf_plus_count = 0;   // key-stream expansions this run

  KmsCallStats initiator_kms;
  KmsCallStats responder_kms;

  std::vector<transport::WireRecord> initiator_trace;
  std::vector<transport::WireRecord> responder_trace;

  SessionKeys keys;  // the initiator's view
};

/// Drives one complete handshake: initiator on the calling thread,
/// responder on a worker, retransmitting per the config's policy.
/// Failures land in the result; this never throws for protocol or
/// transport reasons.
HandshakeResult run_full_handshake(const HandshakeConfig& config, const RunOptions& opts = {});

}  // namespace nwulab::handshake
