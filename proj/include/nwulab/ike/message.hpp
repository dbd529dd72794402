#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "nwulab/bytes.hpp"
#include "nwulab/ike/constants.hpp"

namespace nwulab::ike {

struct IkeHeader {
  uint64_t initiator_spi = 0;
  uint64_t responder_spi = 0;
  ExchangeType exchange = ExchangeType::IkeSaInit;
  uint8_t flags = 0;
  uint32_t message_id = 0;

  bool is_response() const { return flags & kFlagResponse; }
  bool from_initiator() const { return flags & kFlagInitiator; }
  bool operator==(const IkeHeader&) const = default;
};

// --- Security Association payload -----------------------------------------

struct TransformAttribute {
  uint16_t type = 0;   // TV form only; the high bit is added on the wire
  uint16_t value = 0;

  bool operator==(const TransformAttribute&) const = default;
};

struct Transform {
  TransformType type = TransformType::Encr;
  uint16_t id = 0;
  std::vector<TransformAttribute> attributes;

  bool operator==(const Transform&) const = default;
};

struct Proposal {
  uint8_t number = 1;
  ProtocolId protocol = ProtocolId::Ike;
  Bytes spi;  // empty for the IKE SA during IKE_SA_INIT
  std::vector<Transform> transforms;

  bool operator==(const Proposal&) const = default;
};

struct SaPayload {
  std::vector<Proposal> proposals;

  bool operator==(const SaPayload&) const = default;
};

// --- Remaining payload bodies ----------------------------------------------

struct KePayload {
  uint16_t group = 0;
  Bytes data;

  bool operator==(const KePayload&) const = default;
};

struct IdBody {
  uint8_t id_type = kIdFqdn;
  Bytes data;

  bool operator==(const IdBody&) const = default;
};
struct IdIPayload : IdBody {
  bool operator==(const IdIPayload&) const = default;
};
struct IdRPayload : IdBody {
  bool operator==(const IdRPayload&) const = default;
};

struct CertPayload {
  uint8_t encoding = kCertEncodingX509Signature;
  Bytes data;

  bool operator==(const CertPayload&) const = default;
};

struct CertReqPayload {
  uint8_t encoding = kCertEncodingX509Signature;
  Bytes data;

  bool operator==(const CertReqPayload&) const = default;
};

struct AuthPayload {
  uint8_t method = 0;  // AuthMethod values
  Bytes data;

  bool operator==(const AuthPayload&) const = default;
};

struct NoncePayload {
  Bytes nonce;  // 16..256 bytes

  bool operator==(const NoncePayload&) const = default;
};

struct NotifyPayload {
  ProtocolId protocol = ProtocolId::None;
  Bytes spi;
  uint16_t type = 0;
  Bytes data;

  bool operator==(const NotifyPayload&) const = default;
};

struct DeletePayload {
  ProtocolId protocol = ProtocolId::Ike;
  uint8_t spi_size = 0;
  std::vector<Bytes> spis;

  bool operator==(const DeletePayload&) const = default;
};

struct VendorIdPayload {
  Bytes data;

  bool operator==(const VendorIdPayload&) const = default;
};

struct TrafficSelector {
  uint8_t ts_type = 7;      // IPv4 address range
  uint8_t ip_protocol = 0;  // 0 = any
  uint16_t start_port = 0;
  uint16_t end_port = 0xffff;
  Bytes start_addr = {0, 0, 0, 0};
  Bytes end_addr = {255, 255, 255, 255};

  bool operator==(const TrafficSelector&) const = default;
};

struct TsBody {
  std::vector<TrafficSelector> selectors;

  bool operator==(const TsBody&) const = default;
};
struct TsIPayload : TsBody {
  bool operator==(const TsIPayload&) const = default;
};
struct TsRPayload : TsBody {
  bool operator==(const TsRPayload&) const = default;
};

/// Encrypted-and-authenticated container, split per the fixed algorithm
/// suite (AES-256-CBC + HMAC-SHA-256-128): 16-byte IV, CBC ciphertext,
/// 16-byte integrity tag over the whole preceding message.
struct SkPayload {
  PayloadType first_inner = PayloadType::None;
  Bytes iv;
  Bytes ciphertext;
  Bytes tag;

  bool operator==(const SkPayload&) const = default;
};

struct EapPayload {
  EapCode code = EapCode::Request;
  uint8_t identifier = 0;
  Bytes data;  // type byte + type data; empty for Success/Failure

  bool operator==(const EapPayload&) const = default;
};

using Payload =
    std::variant<SaPayload, KePayload, IdIPayload, IdRPayload, CertPayload, CertReqPayload,
                 AuthPayload, NoncePayload, NotifyPayload, DeletePayload, VendorIdPayload,
                 TsIPayload, TsRPayload, SkPayload, EapPayload>;

PayloadType payload_type(const Payload& p);

struct IkeMessage {
  IkeHeader header;
  std::vector<Payload> payloads;

  bool operator==(const IkeMessage&) const = default;
};

template <typename T>
const T* find_payload_in(const std::vector<Payload>& payloads) {
  for (const Payload& p : payloads) {
    if (const T* v = std::get_if<T>(&p)) return v;
  }
  return nullptr;
}

template <typename T>
const T* find_payload(const IkeMessage& msg) {
  return find_payload_in<T>(msg.payloads);
}

template <typename T>
std::vector<const T*> find_all_payloads(const std::vector<Payload>& payloads) {
  std::vector<const T*> out;
  for (const Payload& p : payloads) {
    if (const T* v = std::get_if<T>(&p)) out.push_back(v);
  }
  return out;
}

inline const NotifyPayload* find_notify_in(const std::vector<Payload>& payloads,
                                           uint16_t type) {
  for (const Payload& p : payloads) {
    if (const auto* n = std::get_if<NotifyPayload>(&p); n && n->type == type) return n;
  }
  return nullptr;
}

inline const NotifyPayload* find_notify(const IkeMessage& msg, uint16_t type) {
  return find_notify_in(msg.payloads, type);
}

}  // namespace nwulab::ike
