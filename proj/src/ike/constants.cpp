#include "nwulab/ike/constants.hpp"

namespace nwulab::ike {

const char* to_string(ExchangeType t) {
  switch (t) {
    case ExchangeType::IkeSaInit: return "IKE_SA_INIT";
    case ExchangeType::IkeAuth: return "IKE_AUTH";
    case ExchangeType::CreateChildSa: return "CREATE_CHILD_SA";
    case ExchangeType::Informational: return "INFORMATIONAL";
  }
  return "UNKNOWN";
}

const char* to_string(PayloadType t) {
  switch (t) {
    case PayloadType::None: return "none";
    case PayloadType::Sa: return "SA";
    case PayloadType::Ke: return "KE";
    case PayloadType::IdI: return "IDi";
    case PayloadType::IdR: return "IDr";
    case PayloadType::Cert: return "CERT";
    case PayloadType::CertReq: return "CERTREQ";
    case PayloadType::Auth: return "AUTH";
    case PayloadType::Nonce: return "Nonce";
    case PayloadType::Notify: return "N";
    case PayloadType::Delete: return "D";
    case PayloadType::VendorId: return "V";
    case PayloadType::TsI: return "TSi";
    case PayloadType::TsR: return "TSr";
    case PayloadType::Sk: return "SK";
    case PayloadType::Cp: return "CP";
    case PayloadType::Eap: return "EAP";
  }
  return "unknown";
}

}  // namespace nwulab::ike
