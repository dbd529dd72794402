#pragma once

#include <cstddef>
#include <cstdint>

namespace nwulab::ike {

inline constexpr uint8_t kIkeVersion = 0x20;  // major 2, minor 0
inline constexpr size_t kHeaderLen = 28;
inline constexpr size_t kGenericHeaderLen = 4;

enum class ExchangeType : uint8_t {
  IkeSaInit = 34,
  IkeAuth = 35,
  CreateChildSa = 36,
  Informational = 37,
};

enum class PayloadType : uint8_t {
  None = 0,
  Sa = 33,
  Ke = 34,
  IdI = 35,
  IdR = 36,
  Cert = 37,
  CertReq = 38,
  Auth = 39,
  Nonce = 40,
  Notify = 41,
  Delete = 42,
  VendorId = 43,
  TsI = 44,
  TsR = 45,
  Sk = 46,
  Cp = 47,
  Eap = 48,
};

// Header flag bits.
inline constexpr uint8_t kFlagInitiator = 0x08;
inline constexpr uint8_t kFlagVersion = 0x10;
inline constexpr uint8_t kFlagResponse = 0x20;

enum class ProtocolId : uint8_t {
  None = 0,
  Ike = 1,
  Ah = 2,
  Esp = 3,
};

enum class TransformType : uint8_t {
  Encr = 1,
  Prf = 2,
  Integ = 3,
  Dh = 4,
  Esn = 5,
};

// Transform ids for the types above.
inline constexpr uint16_t kEncrAesCbc = 12;

inline constexpr uint16_t kPrfHmacSha1 = 2;
inline constexpr uint16_t kPrfHmacSha256 = 5;
inline constexpr uint16_t kPrfHmacSha384 = 6;
inline constexpr uint16_t kPrfHmacSha512 = 7;

inline constexpr uint16_t kIntegHmacSha1_96 = 2;
inline constexpr uint16_t kIntegHmacSha256_128 = 12;
inline constexpr uint16_t kIntegHmacSha384_192 = 13;
inline constexpr uint16_t kIntegHmacSha512_256 = 14;

inline constexpr uint16_t kDhNone = 0;
inline constexpr uint16_t kDhGroup14 = 14;  // 2048-bit MODP

inline constexpr uint16_t kEsnNone = 0;

// Transform attribute type for keyed ciphers, TV form (0x800E on the wire).
inline constexpr uint16_t kAttrKeyLength = 14;

// Notify message types.
inline constexpr uint16_t kNotifyNoProposalChosen = 14;
inline constexpr uint16_t kNotifyAuthenticationFailed = 24;
inline constexpr uint16_t kNotifyNatDetectionSourceIp = 16388;
inline constexpr uint16_t kNotifyNatDetectionDestinationIp = 16389;
inline constexpr uint16_t kNotifyFragmentationSupported = 16430;
inline constexpr uint16_t kNotifySignatureHashAlgorithms = 16431;

// Private-use notify range (>= 40960): the quantum-key negotiation.
inline constexpr uint16_t kNotifyQkdKeyIds = 40960;      // ordered raw key ids
inline constexpr uint16_t kNotifyQkdSaeId = 40961;       // sender's SAE identity
inline constexpr uint16_t kNotifyQkdKeyParams = 40962;   // plan + KMS coordinates
inline constexpr uint16_t kNotifyQkdKmsUnavailable = 40963;

// Identification payload id types.
inline constexpr uint8_t kIdFqdn = 2;

// Certificate encodings.
inline constexpr uint8_t kCertEncodingX509Signature = 4;

enum class EapCode : uint8_t {
  Request = 1,
  Response = 2,
  Success = 3,
  Failure = 4,
};

const char* to_string(ExchangeType t);
const char* to_string(PayloadType t);

}  // namespace nwulab::ike
