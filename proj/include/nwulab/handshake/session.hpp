#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nwulab/handshake/config.hpp"
#include "nwulab/ike/message.hpp"
#include "nwulab/ike/secure.hpp"
#include "nwulab/keys/schedule.hpp"
#include "nwulab/kms/client.hpp"
#include "nwulab/rng.hpp"

namespace nwulab::handshake {

enum class Phase { Init, Auth, ChildSa, Established, Failed };
const char* to_string(Phase p);

/// Everything both ends must agree on, byte for byte.
struct SessionKeys {
  keys::IkeSaKeys ike;
  std::vector<keys::ChildSaKeys> children;
  Bytes auth_secret;  // MAC-auth secret; empty under certificate auth

  bool operator==(const SessionKeys&) const = default;
};

struct KmsCallStats {
  size_t get_keys_calls = 0;
  size_t get_keys_by_id_calls = 0;
  size_t keys_requested = 0;  // total across calls
};

/// UE side: emits requests, consumes responses. Bytes in, bytes out —
/// transport and timing belong to the caller.
class InitiatorSession {
 public:
  /// `kms` must be non-null in QKD mode (it is the slave-side client)
  /// and is ignored otherwise.
  InitiatorSession(const HandshakeConfig& config, Rng& rng, kms::KmsClient* kms = nullptr);

  /// The current outstanding request. Stable across calls until the
  /// matching response is consumed, so a timeout can resend verbatim.
  /// nullopt once the session is Established or Failed.
  std::optional<Bytes> next_request();

  /// True when the response matched the outstanding request and the
  /// session advanced; false for stale duplicates, which are ignored.
  /// Throws (and fails the session) on protocol violations.
  bool consume_response(ByteView wire);

  Phase phase() const { return phase_; }
  const SessionKeys& session_keys() const { return keys_; }
  const KmsCallStats& kms_stats() const { return kms_stats_; }
  uint32_t outstanding_message_id() const { return mid_; }

 private:
  Bytes build_init_request();
  Bytes build_auth_request();
  Bytes build_child_request();
  bool handle_init_response(ByteView wire);
  void handle_auth_response(const ike::OpenedMessage& msg);
  void handle_final_auth_response(const ike::OpenedMessage& msg);
  void handle_child_response(const ike::OpenedMessage& msg);
  void derive_qkd_keys(const ike::IkeMessage& response);
  void derive_classical_keys(const ike::IkeMessage& response);
  uint32_t final_auth_mid() const;
  uint32_t last_child_mid() const;

  HandshakeConfig config_;
  Rng& rng_;
  kms::KmsClient* kms_;
  keys::KeyAssignmentPlan plan_;

  Phase phase_ = Phase::Init;
  uint32_t mid_ = 0;  // message id of the outstanding/next request
  std::optional<Bytes> pending_;
  uint64_t spi_i_ = 0;
  uint64_t spi_r_ = 0;

  Bytes nonce_i_, nonce_r_;
  Bytes init_request_wire_, init_response_wire_;
  Bytes dh_private_;
  Bytes child_nonce_;   // fresh per CREATE_CHILD_SA exchange (classical)
  size_t next_child_ = 1;  // child SA index the next exchange creates

  SessionKeys keys_;
  Bytes id_mac_key_i_, id_mac_key_r_;  // prf keys binding the identities
  KmsCallStats kms_stats_;
};

/// N3IWF side: consumes requests, produces responses. Replays the
/// cached response for a retransmitted request; silently drops what it
/// cannot parse or authenticate.
class ResponderSession {
 public:
  /// `kms` must be non-null in QKD mode (master-side client).
  ResponderSession(const HandshakeConfig& config, Rng& rng, kms::KmsClient* kms = nullptr);

  /// The datagram to send back, or nullopt when the message was ignored
  /// (stale beyond the cache, unauthentic, or addressed to another SA).
  std::optional<Bytes> on_message(ByteView wire);

  Phase phase() const { return phase_; }
  const SessionKeys& session_keys() const { return keys_; }
  const KmsCallStats& kms_stats() const { return kms_stats_; }
  size_t dropped_messages() const { return dropped_; }
  /// Why the handshake was refused, when phase() is Failed.
  const std::string& failure_reason() const { return failure_reason_; }

 private:
  Bytes handle_init_request(const ike::IkeMessage& msg, ByteView wire);
  Bytes handle_sealed_request(const ike::IkeMessage& outer, ByteView wire);
  Bytes handle_first_auth(const std::vector<ike::Payload>& inner);
  Bytes handle_eap_round(uint32_t mid, const std::vector<ike::Payload>& inner);
  Bytes handle_final_auth(const std::vector<ike::Payload>& inner);
  Bytes handle_child_request(const std::vector<ike::Payload>& inner);
  Bytes respond_sealed(uint32_t mid, ike::ExchangeType exchange,
                       const std::vector<ike::Payload>& inner);
  Bytes refuse_sealed(uint32_t mid, ike::ExchangeType exchange, uint16_t notify_type,
                      const std::string& why);
  Bytes refuse_init(uint16_t notify_type, const std::string& why);
  uint32_t final_auth_mid() const;
  uint32_t last_child_mid() const;

  HandshakeConfig config_;
  Rng& rng_;
  kms::KmsClient* kms_;
  keys::KeyAssignmentPlan plan_;

  Phase phase_ = Phase::Init;
  uint32_t expected_mid_ = 0;
  std::map<uint32_t, Bytes> response_cache_;
  size_t dropped_ = 0;
  std::string failure_reason_;

  uint64_t spi_i_ = 0;
  uint64_t spi_r_ = 0;
  Bytes nonce_i_, nonce_r_;
  Bytes init_request_wire_, init_response_wire_;
  Bytes dh_private_;
  size_t next_child_ = 1;

  SessionKeys keys_;
  Bytes id_mac_key_i_, id_mac_key_r_;
  Bytes initiator_cert_key_;  // learned from the CERT payload
  ike::SaPayload child_offer_;
  ike::TsIPayload ts_i_;
  ike::TsRPayload ts_r_;
  KmsCallStats kms_stats_;
};

}  // namespace nwulab::handshake
