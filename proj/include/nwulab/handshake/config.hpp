#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nwulab/bytes.hpp"
#include "nwulab/keys/auth.hpp"
#include "nwulab/kms/types.hpp"

namespace nwulab::handshake {

class HandshakeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
/// Structurally valid message that breaks the protocol's rules.
class ProtocolError : public HandshakeError {
 public:
  using HandshakeError::HandshakeError;
};
/// Peer rejected or failed authentication.
class AuthFailure : public HandshakeError {
 public:
  using HandshakeError::HandshakeError;
};
/// No overlap between what was offered and what this end requires.
class ProposalRejected : public HandshakeError {
 public:
  using HandshakeError::HandshakeError;
};
/// Quantum key delivery failed on either end.
class KmsFailure : public HandshakeError {
 public:
  using HandshakeError::HandshakeError;
};

enum class Mode {
  DhPsk,   // group-14 exchange, shared-secret auth
  DhCert,  // group-14 exchange, certificate auth
  Qkd,     // no exchange payload; every key fetched from the KMS pair
};
const char* to_string(Mode m);

struct SaPlan {
  size_t child_sa_count = 2;
};

/// Shapes of the stubbed EAP-5G conversation. Sizes are whole payloads
/// on the wire (generic header included), one entry per round; the
/// content is a deterministic pattern both ends can check.
struct EapStubPlan {
  std::vector<size_t> request_sizes = {1290, 50, 36, 8};
  std::vector<size_t> response_sizes = {66, 36, 66, 8};
  int fail_at_round = -1;  // responder rejects this round's response

  size_t rounds() const { return request_sizes.size(); }
};

struct Identities {
  std::string initiator = "ue.nwu-lab.example";
  std::string responder = "n3iwf.nwu-lab.example";
};

struct QkdSettings {
  kms::SaeId initiator_sae{"ue-001.sae.nwu-lab.example"};
  kms::SaeId responder_sae{"n3iwf-001.sae.nwu-lab.example"};
  std::string source_kme_id = "kme-access.nwu-lab.example";
  std::string target_kme_id = "kme-core.nwu-lab.example";
  uint32_t key_size_bits = 256;
  /// 0 fetches exactly what the assignment plan needs; a larger value
  /// over-fetches and leaves the surplus unassigned.
  size_t key_count_override = 0;
};

struct RetransmitPolicy {
  std::chrono::milliseconds timeout{500};
  int max_retries = 3;
};

struct HandshakeConfig {
  Mode mode = Mode::DhPsk;
  SaPlan sa_plan;
  EapStubPlan eap;
  Identities identities;
  QkdSettings qkd;

  Bytes psk = to_bytes("nwu-lab shared secret for the baseline");
  keys::CertIdentity initiator_cert;  // DhCert mode; responder pins the peer key
  keys::CertIdentity responder_cert;

  /// 0 uses a private exponent as wide as the group prime.
  size_t dh_private_bits = 0;
  size_t nonce_len = 32;

  /// NAT-detection, fragmentation-support, and hash-algorithm notifies
  /// in IKE_SA_INIT, matching what production initiators emit.
  bool wire_extras = true;

  RetransmitPolicy retransmit;
};

}  // namespace nwulab::handshake
