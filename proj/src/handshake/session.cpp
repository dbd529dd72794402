#include "nwulab/handshake/session.hpp"

#include <algorithm>
#include <array>

#include "nwulab/ike/codec.hpp"
#include "nwulab/keys/dh.hpp"
#include "nwulab/keys/prf.hpp"

namespace nwulab::handshake {

using namespace ike;

const char* to_string(Mode m) {
  switch (m) {
    case Mode::DhPsk: return "dh-psk";
    case Mode::DhCert: return "dh-cert";
    case Mode::Qkd: return "qkd";
  }
  return "unknown";
}

const char* to_string(Phase p) {
  switch (p) {
    case Phase::Init: return "init";
    case Phase::Auth: return "auth";
    case Phase::ChildSa: return "child-sa";
    case Phase::Established: return "established";
    case Phase::Failed: return "failed";
  }
  return "unknown";
}

namespace {

// Synthetic NWu endpoints for the NAT-detection hashes.
constexpr std::array<uint8_t, 4> kUeAddr = {192, 0, 2, 1};
constexpr std::array<uint8_t, 4> kGwAddr = {192, 0, 2, 2};
constexpr uint16_t kIkePort = 500;

Bytes u64_bytes(uint64_t v) {
  Bytes out;
  put_u64(out, v);
  return out;
}

uint64_t nonzero_u64(Rng& rng) {
  uint64_t v = 0;
  while (v == 0) v = rng.next_u64();
  return v;
}

Bytes nat_hash(uint64_t spi_i, uint64_t spi_r, const std::array<uint8_t, 4>& addr,
               uint16_t port) {
  Bytes in;
  put_u64(in, spi_i);
  put_u64(in, spi_r);
  in.insert(in.end(), addr.begin(), addr.end());
  put_u16(in, port);
  return keys::sha1(in);
}

void append_init_extras(std::vector<Payload>& out, uint64_t spi_i, uint64_t spi_r,
                        bool initiator_side) {
  const auto& src = initiator_side ? kUeAddr : kGwAddr;
  const auto& dst = initiator_side ? kGwAddr : kUeAddr;
  out.push_back(NotifyPayload{ProtocolId::None, {}, kNotifyNatDetectionSourceIp,
                              nat_hash(spi_i, spi_r, src, kIkePort)});
  out.push_back(NotifyPayload{ProtocolId::None, {}, kNotifyNatDetectionDestinationIp,
                              nat_hash(spi_i, spi_r, dst, kIkePort)});
  out.push_back(NotifyPayload{ProtocolId::None, {}, kNotifyFragmentationSupported, {}});
  Bytes sighash;
  for (uint16_t id : {1, 2, 3, 4}) put_u16(sighash, id);
  out.push_back(
      NotifyPayload{ProtocolId::None, {}, kNotifySignatureHashAlgorithms, sighash});
}

Transform encr_transform(uint16_t key_bits) {
  return Transform{TransformType::Encr, kEncrAesCbc, {{kAttrKeyLength, key_bits}}};
}

SaPayload make_ike_offer(bool with_dh) {
  Proposal p;
  p.number = 1;
  p.protocol = ProtocolId::Ike;
  for (uint16_t bits : {256, 192, 128}) p.transforms.push_back(encr_transform(bits));
  for (uint16_t id : {kPrfHmacSha256, kPrfHmacSha384, kPrfHmacSha512, kPrfHmacSha1}) {
    p.transforms.push_back(Transform{TransformType::Prf, id, {}});
  }
  for (uint16_t id :
       {kIntegHmacSha256_128, kIntegHmacSha384_192, kIntegHmacSha512_256, kIntegHmacSha1_96}) {
    p.transforms.push_back(Transform{TransformType::Integ, id, {}});
  }
  if (with_dh) p.transforms.push_back(Transform{TransformType::Dh, kDhGroup14, {}});
  return SaPayload{{p}};
}

SaPayload make_ike_chosen(bool with_dh) {
  Proposal p;
  p.number = 1;
  p.protocol = ProtocolId::Ike;
  p.transforms.push_back(encr_transform(256));
  p.transforms.push_back(Transform{TransformType::Prf, kPrfHmacSha256, {}});
  p.transforms.push_back(Transform{TransformType::Integ, kIntegHmacSha256_128, {}});
  if (with_dh) p.transforms.push_back(Transform{TransformType::Dh, kDhGroup14, {}});
  return SaPayload{{p}};
}

SaPayload make_esp_sa(const Bytes& spi) {
  Proposal p;
  p.number = 1;
  p.protocol = ProtocolId::Esp;
  p.spi = spi;
  p.transforms.push_back(encr_transform(256));
  p.transforms.push_back(Transform{TransformType::Integ, kIntegHmacSha256_128, {}});
  p.transforms.push_back(Transform{TransformType::Esn, kEsnNone, {}});
  return SaPayload{{p}};
}

const Proposal* find_proposal(const SaPayload& sa, ProtocolId proto) {
  for (const Proposal& p : sa.proposals) {
    if (p.protocol == proto) return &p;
  }
  return nullptr;
}

bool has_transform(const Proposal& p, TransformType type, uint16_t id) {
  return std::any_of(p.transforms.begin(), p.transforms.end(), [&](const Transform& t) {
    return t.type == type && t.id == id;
  });
}

bool has_transform_type(const Proposal& p, TransformType type) {
  return std::any_of(p.transforms.begin(), p.transforms.end(),
                     [&](const Transform& t) { return t.type == type; });
}

bool has_encr_with_bits(const Proposal& p, uint16_t id, uint16_t bits) {
  for (const Transform& t : p.transforms) {
    if (t.type != TransformType::Encr || t.id != id) continue;
    for (const TransformAttribute& a : t.attributes) {
      if (a.type == kAttrKeyLength && a.value == bits) return true;
    }
  }
  return false;
}

/// The IKE-SA algorithms both ends of this lab require.
bool ike_proposal_acceptable(const Proposal& p, bool with_dh) {
  return has_encr_with_bits(p, kEncrAesCbc, 256) &&
         has_transform(p, TransformType::Prf, kPrfHmacSha256) &&
         has_transform(p, TransformType::Integ, kIntegHmacSha256_128) &&
         has_transform_type(p, TransformType::Dh) == with_dh &&
         (!with_dh || has_transform(p, TransformType::Dh, kDhGroup14));
}

bool esp_proposal_acceptable(const Proposal& p) {
  return p.spi.size() == 4 && has_encr_with_bits(p, kEncrAesCbc, 256) &&
         has_transform(p, TransformType::Integ, kIntegHmacSha256_128) &&
         has_transform(p, TransformType::Esn, kEsnNone);
}

TsBody default_ts() {
  TrafficSelector all;  // defaults cover everything
  TrafficSelector inner;
  inner.start_addr = {10, 45, 0, 0};
  inner.end_addr = {10, 45, 255, 255};
  return TsBody{{all, inner}};
}

TsIPayload default_ts_i() { return TsIPayload{default_ts()}; }
TsRPayload default_ts_r() { return TsRPayload{default_ts()}; }

/// Payload content for one EAP stub round. `payload_size` counts the
/// whole payload: generic header (4) + EAP header (4) + data.
Bytes eap_stub_data(size_t round, bool request, size_t payload_size) {
  if (payload_size < 8) throw HandshakeError("EAP stub payload size must be at least 8");
  size_t n = payload_size - 8;
  Bytes data(n);
  for (size_t i = 0; i < n; ++i) {
    data[i] = i == 0 ? 254
                     : static_cast<uint8_t>(round * 131 + i * 17 + 7 + (request ? 0 : 43));
  }
  return data;
}

EapPayload make_eap_stub(size_t round, bool request, size_t payload_size) {
  EapPayload e;
  e.code = request ? EapCode::Request : EapCode::Response;
  e.identifier = static_cast<uint8_t>(round);
  e.data = eap_stub_data(round, request, payload_size);
  return e;
}

// Parameters the initiator needs before it can collect the announced
// keys: how many slots the plan consumes, the key width, and where to
// fetch (the master SAE to name, and the KME pair for the record).
Bytes encode_qkd_params(const QkdSettings& qkd, size_t slot_count) {
  Bytes out;
  put_u8(out, 1);  // version
  put_u8(out, static_cast<uint8_t>(slot_count));
  put_u16(out, static_cast<uint16_t>(qkd.key_size_bits));
  auto put_str = [&out](const std::string& s) {
    if (s.size() > 0xff) throw HandshakeError("QKD parameter string too long");
    put_u8(out, static_cast<uint8_t>(s.size()));
    Bytes b = to_bytes(s);
    put_bytes(out, b);
  };
  put_str(qkd.responder_sae.value);  // the master SAE the initiator must name
  put_str(qkd.source_kme_id);
  put_str(qkd.target_kme_id);
  return out;
}

struct QkdParams {
  uint8_t version = 0;
  size_t slot_count = 0;
  uint32_t key_size_bits = 0;
  std::string master_sae;
  std::string source_kme;
  std::string target_kme;
};

QkdParams decode_qkd_params(ByteView data) {
  size_t pos = 0;
  auto need = [&](size_t n) {
    if (data.size() - pos < n) throw ProtocolError("QKD parameter notify truncated");
  };
  QkdParams out;
  need(4);
  out.version = read_u8(data, pos++);
  out.slot_count = read_u8(data, pos++);
  out.key_size_bits = read_u16(data, pos);
  pos += 2;
  auto get_str = [&]() {
    need(1);
    size_t len = read_u8(data, pos++);
    need(len);
    std::string s(reinterpret_cast<const char*>(data.data() + pos), len);
    pos += len;
    return s;
  };
  out.master_sae = get_str();
  out.source_kme = get_str();
  out.target_kme = get_str();
  if (pos != data.size()) throw ProtocolError("trailing bytes in QKD parameter notify");
  if (out.version != 1) throw ProtocolError("unsupported QKD parameter version");
  return out;
}

IdIPayload make_id_i(const HandshakeConfig& config) {
  IdIPayload id;
  id.id_type = kIdFqdn;
  id.data = to_bytes(config.identities.initiator);
  return id;
}

IdRPayload make_id_r(const HandshakeConfig& config) {
  IdRPayload id;
  id.id_type = kIdFqdn;
  id.data = to_bytes(config.identities.responder);
  return id;
}

void validate_config(const HandshakeConfig& config, bool is_initiator, bool has_kms) {
  if (config.eap.rounds() == 0) throw HandshakeError("the EAP stub needs at least one round");
  if (config.eap.response_sizes.size() != config.eap.rounds()) {
    throw HandshakeError("EAP stub request and response size lists must match");
  }
  if (config.sa_plan.child_sa_count < 1) {
    throw HandshakeError("the SA plan needs at least one Child SA");
  }
  if (config.sa_plan.child_sa_count > 15) {
    throw HandshakeError("too many Child SAs for one-octet QKD slot counts");
  }
  if (config.mode == Mode::Qkd && !has_kms) {
    throw HandshakeError("QKD mode needs a KMS client");
  }
  if (config.mode == Mode::DhCert) {
    const auto& cert = is_initiator ? config.initiator_cert : config.responder_cert;
    if (cert.private_key.empty()) {
      throw HandshakeError("certificate mode needs this side's signing identity");
    }
    // The responder learns the initiator key from the CERT payload, but
    // the initiator must have the responder key pinned ahead of time.
    if (is_initiator && config.responder_cert.public_key.empty()) {
      throw HandshakeError("certificate mode needs the pinned responder key");
    }
  }
  if (config.mode == Mode::DhPsk && config.psk.empty()) {
    throw HandshakeError("shared-secret mode needs a non-empty secret");
  }
  if (config.nonce_len < 16 || config.nonce_len > 256) {
    throw HandshakeError("nonce length out of range");
  }
}

keys::KeyAssignmentPlan plan_for(const HandshakeConfig& config) {
  keys::KeyAssignmentPlan plan;
  plan.child_sa_count = config.sa_plan.child_sa_count;
  plan.psk_auth = true;  // the quantum path always MAC-authenticates
  return plan;
}

uint8_t auth_method_for(Mode mode) {
  return static_cast<uint8_t>(mode == Mode::DhCert ? keys::AuthMethod::DigitalSignature
                                                   : keys::AuthMethod::Psk);
}

}  // namespace

// ===========================================================================
// InitiatorSession

InitiatorSession::InitiatorSession(const HandshakeConfig& config, Rng& rng, kms::KmsClient* kms)
    : config_(config), rng_(rng), kms_(kms), plan_(plan_for(config)) {
  validate_config(config_, /*is_initiator=*/true, kms_ != nullptr);
  keys_.children.resize(plan_.child_sa_count);
  spi_i_ = nonzero_u64(rng_);
}

uint32_t InitiatorSession::final_auth_mid() const {
  return static_cast<uint32_t>(config_.eap.rounds() + 1);
}

uint32_t InitiatorSession::last_child_mid() const {
  return final_auth_mid() + static_cast<uint32_t>(plan_.child_sa_count - 1);
}

std::optional<Bytes> InitiatorSession::next_request() {
  if (phase_ == Phase::Established || phase_ == Phase::Failed) return std::nullopt;
  if (pending_) return pending_;
  Bytes wire;
  if (mid_ == 0) {
    wire = build_init_request();
  } else if (mid_ <= final_auth_mid()) {
    wire = build_auth_request();
  } else {
    wire = build_child_request();
  }
  pending_ = wire;
  return pending_;
}

Bytes InitiatorSession::build_init_request() {
  nonce_i_ = rng_.bytes(config_.nonce_len);

  IkeMessage msg;
  msg.header.initiator_spi = spi_i_;
  msg.header.responder_spi = 0;
  msg.header.exchange = ExchangeType::IkeSaInit;
  msg.header.flags = kFlagInitiator;
  msg.header.message_id = 0;

  bool qkd = config_.mode == Mode::Qkd;
  msg.payloads.push_back(make_ike_offer(/*with_dh=*/!qkd));
  if (!qkd) {
    auto group = keys::modp2048();
    keys::DhKeyPair pair = keys::dh_keypair(*group, rng_, config_.dh_private_bits);
    dh_private_ = pair.private_key;
    msg.payloads.push_back(KePayload{kDhGroup14, pair.public_key});
  }
  msg.payloads.push_back(NoncePayload{nonce_i_});
  if (config_.wire_extras) {
    append_init_extras(msg.payloads, spi_i_, 0, /*initiator_side=*/true);
  }
  if (qkd) {
    msg.payloads.push_back(NotifyPayload{
        ProtocolId::None, {}, kNotifyQkdSaeId, to_bytes(config_.qkd.initiator_sae.value)});
  }
  init_request_wire_ = encode_message(msg);
  return init_request_wire_;
}

bool InitiatorSession::handle_init_response(ByteView wire) {
  IkeMessage msg = decode_message(wire);
  if (msg.header.exchange != ExchangeType::IkeSaInit || !msg.header.is_response() ||
      msg.header.message_id != 0 || msg.header.initiator_spi != spi_i_) {
    return false;  // not ours
  }

  if (const auto* n = find_notify(msg, kNotifyNoProposalChosen)) {
    (void)n;
    phase_ = Phase::Failed;
    throw ProposalRejected("peer chose none of the offered proposals");
  }
  if (find_notify(msg, kNotifyQkdKmsUnavailable)) {
    phase_ = Phase::Failed;
    throw KmsFailure("peer reported its KMS unavailable");
  }

  if (msg.header.responder_spi == 0) {
    phase_ = Phase::Failed;
    throw ProtocolError("responder SPI missing in the exchange response");
  }

  const auto* sa = find_payload<SaPayload>(msg);
  const auto* nonce = find_payload<NoncePayload>(msg);
  if (!sa || !nonce) {
    phase_ = Phase::Failed;
    throw ProtocolError("exchange response lacks SA or nonce");
  }
  bool qkd = config_.mode == Mode::Qkd;
  const Proposal* chosen = find_proposal(*sa, ProtocolId::Ike);
  if (!chosen || !ike_proposal_acceptable(*chosen, /*with_dh=*/!qkd)) {
    phase_ = Phase::Failed;
    throw ProtocolError("peer chose an unacceptable IKE proposal");
  }

  spi_r_ = msg.header.responder_spi;
  nonce_r_ = nonce->nonce;
  init_response_wire_ = Bytes(wire.begin(), wire.end());

  if (qkd) {
    derive_qkd_keys(msg);
  } else {
    derive_classical_keys(msg);
  }

  phase_ = Phase::Auth;
  mid_ = 1;
  pending_.reset();
  return true;
}

void InitiatorSession::derive_qkd_keys(const IkeMessage& response) {
  const NotifyPayload* ids_notify = find_notify(response, kNotifyQkdKeyIds);
  const NotifyPayload* params_notify = find_notify(response, kNotifyQkdKeyParams);
  if (!ids_notify || !params_notify) {
    phase_ = Phase::Failed;
    throw ProtocolError("QKD response lacks the key-id or parameter notify");
  }
  if (ids_notify->data.size() % 16 != 0) {
    phase_ = Phase::Failed;
    throw ProtocolError("key-id notify length is not a whole number of ids");
  }
  size_t count = ids_notify->data.size() / 16;
  size_t expected =
      config_.qkd.key_count_override ? config_.qkd.key_count_override : plan_.slot_count();
  if (count != expected) {
    phase_ = Phase::Failed;
    throw ProtocolError("peer announced " + std::to_string(count) + " keys, expected " +
                        std::to_string(expected));
  }

  QkdParams params;
  try {
    params = decode_qkd_params(params_notify->data);
  } catch (const ProtocolError&) {
    phase_ = Phase::Failed;
    throw;
  }
  if (params.slot_count != plan_.slot_count()) {
    phase_ = Phase::Failed;
    throw ProtocolError("peer plans " + std::to_string(params.slot_count) +
                        " key slots, this end needs " + std::to_string(plan_.slot_count()));
  }
  if (params.key_size_bits != config_.qkd.key_size_bits) {
    phase_ = Phase::Failed;
    throw ProtocolError("peer offers keys of the wrong size");
  }
  if (params.master_sae.empty()) {
    phase_ = Phase::Failed;
    throw ProtocolError("peer did not name the master SAE");
  }

  std::vector<Uuid> ids;
  ids.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    ids.push_back(Uuid::from_bytes(ByteView(ids_notify->data).subspan(i * 16, 16)));
  }

  kms::KeyContainer container;
  try {
    kms_stats_.get_keys_by_id_calls += 1;
    kms_stats_.keys_requested += ids.size();
    container = kms_->get_keys_by_id(kms::SaeId{params.master_sae}, ids);
  } catch (const kms::KmsError& e) {
    phase_ = Phase::Failed;
    throw KmsFailure(std::string("key retrieval failed: ") + e.what());
  }
  if (container.size() != ids.size()) {
    phase_ = Phase::Failed;
    throw KmsFailure("KMS returned the wrong number of keys");
  }

  std::vector<Bytes> material;
  material.reserve(plan_.slot_count());
  for (size_t i = 0; i < plan_.slot_count(); ++i) {
    if (container.keys[i].key_id != ids[i]) {
      phase_ = Phase::Failed;
      throw KmsFailure("KMS returned keys out of order");
    }
    material.push_back(container.keys[i].material);
  }
  keys::QkdAssignment assignment = keys::assign_qkd_keys(material, plan_);
  keys_.ike = assignment.ike;
  keys_.children = assignment.children;
  keys_.auth_secret = assignment.auth_key;
  id_mac_key_i_ = assignment.auth_key;
  id_mac_key_r_ = assignment.auth_key;
}

void InitiatorSession::derive_classical_keys(const IkeMessage& response) {
  const auto* ke = find_payload<KePayload>(response);
  if (!ke || ke->group != kDhGroup14) {
    phase_ = Phase::Failed;
    throw ProtocolError("exchange response lacks a usable key-exchange payload");
  }
  auto group = keys::modp2048();
  Bytes shared;
  try {
    shared = keys::dh_shared_secret(*group, dh_private_, ke->data);
  } catch (const keys::DhError& e) {
    phase_ = Phase::Failed;
    throw ProtocolError(std::string("key exchange failed: ") + e.what());
  }
  keys_.ike = keys::derive_classical_ike_keys(shared, nonce_i_, nonce_r_, u64_bytes(spi_i_),
                                              u64_bytes(spi_r_));
  keys_.auth_secret = config_.mode == Mode::DhPsk ? config_.psk : Bytes{};
  id_mac_key_i_ = keys_.ike.sk_pi;
  id_mac_key_r_ = keys_.ike.sk_pr;
}

Bytes InitiatorSession::build_auth_request() {
  std::vector<Payload> inner;
  size_t round = mid_ - 2;  // EAP response round carried by this message

  if (mid_ == 1) {
    inner.emplace_back(make_id_i(config_));
    if (config_.mode == Mode::DhCert) {
      inner.emplace_back(
          CertPayload{kCertEncodingX509Signature, config_.initiator_cert.blob});
    }
    Bytes spi = rng_.bytes(4);
    inner.emplace_back(make_esp_sa(spi));
    inner.emplace_back(default_ts_i());
    inner.emplace_back(default_ts_r());
  } else {
    inner.emplace_back(
        make_eap_stub(round, /*request=*/false, config_.eap.response_sizes[round]));
    if (mid_ == final_auth_mid()) {
      Bytes id_body = encode_id_body(make_id_i(config_));
      Bytes octets =
          keys::auth_signed_octets(init_request_wire_, nonce_r_, id_mac_key_i_, id_body);
      Bytes auth_data =
          config_.mode == Mode::DhCert
              ? keys::ed25519_sign(config_.initiator_cert.private_key, octets)
              : keys::compute_psk_auth(keys_.auth_secret, octets);
      inner.emplace_back(AuthPayload{auth_method_for(config_.mode), auth_data});
    }
  }

  IkeHeader header;
  header.initiator_spi = spi_i_;
  header.responder_spi = spi_r_;
  header.exchange = ExchangeType::IkeAuth;
  header.flags = kFlagInitiator;
  header.message_id = mid_;
  return seal_message(header, inner, {keys_.ike.sk_ei, keys_.ike.sk_ai}, rng_);
}

Bytes InitiatorSession::build_child_request() {
  std::vector<Payload> inner;
  Bytes spi = rng_.bytes(4);
  inner.emplace_back(make_esp_sa(spi));
  if (config_.mode != Mode::Qkd) {
    child_nonce_ = rng_.bytes(config_.nonce_len);
    inner.emplace_back(NoncePayload{child_nonce_});
  }
  inner.emplace_back(default_ts_i());
  inner.emplace_back(default_ts_r());

  IkeHeader header;
  header.initiator_spi = spi_i_;
  header.responder_spi = spi_r_;
  header.exchange = ExchangeType::CreateChildSa;
  header.flags = kFlagInitiator;
  header.message_id = mid_;
  return seal_message(header, inner, {keys_.ike.sk_ei, keys_.ike.sk_ai}, rng_);
}

bool InitiatorSession::consume_response(ByteView wire) {
  if (phase_ == Phase::Established || phase_ == Phase::Failed) return false;
  try {
    if (mid_ == 0) return handle_init_response(wire);

    // Header peek before any decryption, so stale duplicates and
    // misaddressed datagrams are ignored without being treated as
    // attacks on the outstanding exchange.
    if (wire.size() < kHeaderLen) return false;
    if ((wire[19] & kFlagResponse) == 0) return false;
    if (read_u64(wire, 0) != spi_i_ || read_u64(wire, 8) != spi_r_) return false;
    if (read_u32(wire, 20) != mid_) return false;  // stale duplicate

    OpenedMessage msg = open_message(wire, {keys_.ike.sk_er, keys_.ike.sk_ar});

    if (mid_ <= final_auth_mid()) {
      if (msg.header.exchange != ExchangeType::IkeAuth) {
        throw ProtocolError("wrong exchange type during authentication");
      }
      if (mid_ == final_auth_mid()) {
        handle_final_auth_response(msg);
      } else {
        handle_auth_response(msg);
      }
    } else {
      if (msg.header.exchange != ExchangeType::CreateChildSa) {
        throw ProtocolError("wrong exchange type during Child SA creation");
      }
      handle_child_response(msg);
    }
    return true;
  } catch (const ParseError& e) {
    phase_ = Phase::Failed;
    throw ProtocolError(std::string("malformed response: ") + e.what());
  } catch (...) {
    phase_ = Phase::Failed;
    throw;
  }
}

void InitiatorSession::handle_auth_response(const OpenedMessage& msg) {
  if (find_notify_in(msg.payloads, kNotifyAuthenticationFailed)) {
    throw AuthFailure("peer rejected authentication");
  }
  if (find_notify_in(msg.payloads, kNotifyNoProposalChosen)) {
    throw ProposalRejected("peer chose none of the offered Child SA proposals");
  }

  const EapPayload* eap = nullptr;
  for (const Payload& p : msg.payloads) {
    if (const auto* e = std::get_if<EapPayload>(&p)) eap = e;
  }

  if (mid_ == 1) {
    const auto* id_r = find_payload_in<IdRPayload>(msg.payloads);
    if (!id_r || id_r->id_type != kIdFqdn ||
        id_r->data != to_bytes(config_.identities.responder)) {
      throw AuthFailure("peer presented an unexpected responder identity");
    }
  }

  size_t round = mid_ - 1;  // EAP request round carried by this response
  if (!eap) throw ProtocolError("authentication response lacks its EAP round");
  if (eap->code == EapCode::Failure) throw AuthFailure("peer ended the EAP conversation");
  if (eap->code != EapCode::Request || eap->identifier != round ||
      eap->data != eap_stub_data(round, /*request=*/true, config_.eap.request_sizes[round])) {
    throw ProtocolError("EAP round does not match the agreed stub conversation");
  }

  mid_ += 1;
  pending_.reset();
}

void InitiatorSession::handle_final_auth_response(const OpenedMessage& msg) {
  if (find_notify_in(msg.payloads, kNotifyAuthenticationFailed)) {
    throw AuthFailure("peer rejected authentication");
  }
  const EapPayload* eap = nullptr;
  for (const Payload& p : msg.payloads) {
    if (const auto* e = std::get_if<EapPayload>(&p)) eap = e;
  }
  if (!eap) throw ProtocolError("final authentication response lacks the EAP result");
  if (eap->code == EapCode::Failure) throw AuthFailure("peer ended the EAP conversation");
  if (eap->code != EapCode::Success) throw ProtocolError("expected the EAP result");

  const auto* auth = find_payload_in<AuthPayload>(msg.payloads);
  if (!auth) throw ProtocolError("final authentication response lacks AUTH");
  if (auth->method != auth_method_for(config_.mode)) {
    throw AuthFailure("peer authenticated with the wrong method");
  }
  Bytes id_body = encode_id_body(make_id_r(config_));
  Bytes octets =
      keys::auth_signed_octets(init_response_wire_, nonce_i_, id_mac_key_r_, id_body);
  bool ok = config_.mode == Mode::DhCert
                ? keys::ed25519_verify(config_.responder_cert.public_key, octets, auth->data)
                : keys::verify_psk_auth(keys_.auth_secret, octets, auth->data);
  if (!ok) throw AuthFailure("responder authentication check failed");

  const auto* sa = find_payload_in<SaPayload>(msg.payloads);
  if (!sa || !find_proposal(*sa, ProtocolId::Esp) ||
      !esp_proposal_acceptable(*find_proposal(*sa, ProtocolId::Esp))) {
    throw ProtocolError("peer chose an unacceptable Child SA proposal");
  }
  const auto* tsi = find_payload_in<TsIPayload>(msg.payloads);
  const auto* tsr = find_payload_in<TsRPayload>(msg.payloads);
  if (!tsi || !tsr || !(*tsi == default_ts_i()) || !(*tsr == default_ts_r())) {
    throw ProtocolError("peer narrowed the traffic selectors");
  }

  if (config_.mode != Mode::Qkd) {
    keys_.children[0] =
        keys::derive_classical_child_keys(keys_.ike.sk_d, nonce_i_, nonce_r_);
  }
  next_child_ = 1;
  pending_.reset();
  if (next_child_ >= plan_.child_sa_count) {
    phase_ = Phase::Established;
  } else {
    phase_ = Phase::ChildSa;
    mid_ += 1;
  }
}

void InitiatorSession::handle_child_response(const OpenedMessage& msg) {
  if (find_notify_in(msg.payloads, kNotifyNoProposalChosen)) {
    throw ProposalRejected("peer chose none of the offered Child SA proposals");
  }
  const auto* sa = find_payload_in<SaPayload>(msg.payloads);
  if (!sa || !find_proposal(*sa, ProtocolId::Esp) ||
      !esp_proposal_acceptable(*find_proposal(*sa, ProtocolId::Esp))) {
    throw ProtocolError("peer chose an unacceptable Child SA proposal");
  }
  if (config_.mode != Mode::Qkd) {
    const auto* nonce = find_payload_in<NoncePayload>(msg.payloads);
    if (!nonce) throw ProtocolError("Child SA response lacks a nonce");
    keys_.children[next_child_] =
        keys::derive_classical_child_keys(keys_.ike.sk_d, child_nonce_, nonce->nonce);
  }
  next_child_ += 1;
  pending_.reset();
  if (next_child_ >= plan_.child_sa_count) {
    phase_ = Phase::Established;
  } else {
    mid_ += 1;
  }
}

// ===========================================================================
// ResponderSession

ResponderSession::ResponderSession(const HandshakeConfig& config, Rng& rng, kms::KmsClient* kms)
    : config_(config), rng_(rng), kms_(kms), plan_(plan_for(config)) {
  validate_config(config_, /*is_initiator=*/false, kms_ != nullptr);
  keys_.children.resize(plan_.child_sa_count);
}

uint32_t ResponderSession::final_auth_mid() const {
  return static_cast<uint32_t>(config_.eap.rounds() + 1);
}

uint32_t ResponderSession::last_child_mid() const {
  return final_auth_mid() + static_cast<uint32_t>(plan_.child_sa_count - 1);
}

std::optional<Bytes> ResponderSession::on_message(ByteView wire) {
  try {
    IkeMessage msg = decode_message(wire);
    if (!msg.header.from_initiator() || msg.header.is_response()) {
      ++dropped_;
      return std::nullopt;
    }
    uint32_t mid = msg.header.message_id;

    if (mid == 0 && msg.header.exchange == ExchangeType::IkeSaInit) {
      if (msg.header.initiator_spi == 0 || msg.header.responder_spi != 0) {
        ++dropped_;
        return std::nullopt;
      }
      if (spi_i_ == 0) return handle_init_request(msg, wire);
      if (msg.header.initiator_spi == spi_i_ && response_cache_.count(0)) {
        return response_cache_[0];  // retransmitted opener
      }
      ++dropped_;
      return std::nullopt;
    }

    if (msg.header.initiator_spi != spi_i_ || msg.header.responder_spi != spi_r_ ||
        spi_i_ == 0) {
      ++dropped_;
      return std::nullopt;
    }
    if (auto it = response_cache_.find(mid); it != response_cache_.end()) {
      return it->second;  // retransmitted request
    }
    if (phase_ == Phase::Failed || phase_ == Phase::Established || mid != expected_mid_) {
      ++dropped_;
      return std::nullopt;
    }
    return handle_sealed_request(msg, wire);
  } catch (const ParseError&) {
    ++dropped_;
    return std::nullopt;
  } catch (const IntegrityError&) {
    ++dropped_;
    return std::nullopt;
  }
}

Bytes ResponderSession::refuse_init(uint16_t notify_type, const std::string& why) {
  IkeMessage msg;
  msg.header.initiator_spi = spi_i_;
  msg.header.responder_spi = spi_r_;
  msg.header.exchange = ExchangeType::IkeSaInit;
  msg.header.flags = kFlagResponse;
  msg.header.message_id = 0;
  msg.payloads.push_back(NotifyPayload{ProtocolId::None, {}, notify_type, {}});
  Bytes wire = encode_message(msg);
  response_cache_[0] = wire;
  phase_ = Phase::Failed;
  failure_reason_ = why;
  return wire;
}

Bytes ResponderSession::handle_init_request(const IkeMessage& msg, ByteView wire) {
  spi_i_ = msg.header.initiator_spi;
  init_request_wire_ = Bytes(wire.begin(), wire.end());
  bool qkd = config_.mode == Mode::Qkd;

  const auto* sa = find_payload<SaPayload>(msg);
  const auto* nonce = find_payload<NoncePayload>(msg);
  if (!sa || !nonce) return refuse_init(kNotifyNoProposalChosen, "missing SA or nonce");
  const Proposal* offer = find_proposal(*sa, ProtocolId::Ike);
  if (!offer || !ike_proposal_acceptable(*offer, /*with_dh=*/!qkd)) {
    return refuse_init(kNotifyNoProposalChosen,
                       qkd ? "offer requires a modular exchange this end does not run"
                           : "offer lacks the required algorithms");
  }
  const NotifyPayload* sae_notify = find_notify(msg, kNotifyQkdSaeId);
  if (qkd && (!sae_notify || sae_notify->data.empty())) {
    return refuse_init(kNotifyNoProposalChosen, "peer named no SAE for key retrieval");
  }
  const auto* ke = qkd ? nullptr : find_payload<KePayload>(msg);
  if (!qkd && (!ke || ke->group != kDhGroup14)) {
    return refuse_init(kNotifyNoProposalChosen, "offer lacks a group-14 public value");
  }

  nonce_i_ = nonce->nonce;
  spi_r_ = nonzero_u64(rng_);
  nonce_r_ = rng_.bytes(config_.nonce_len);

  IkeMessage resp;
  resp.header.initiator_spi = spi_i_;
  resp.header.responder_spi = spi_r_;
  resp.header.exchange = ExchangeType::IkeSaInit;
  resp.header.flags = kFlagResponse;
  resp.header.message_id = 0;
  resp.payloads.push_back(make_ike_chosen(/*with_dh=*/!qkd));

  if (qkd) {
    size_t count =
        config_.qkd.key_count_override ? config_.qkd.key_count_override : plan_.slot_count();
    kms::SaeId slave_sae{to_ascii(sae_notify->data)};
    kms::KeyContainer container;
    try {
      kms_stats_.get_keys_calls += 1;
      kms_stats_.keys_requested += count;
      container = kms_->get_keys(slave_sae, count, config_.qkd.key_size_bits);
    } catch (const kms::KmsError& e) {
      return refuse_init(kNotifyQkdKmsUnavailable,
                         std::string("key delivery failed: ") + e.what());
    }
    if (container.size() != count) {
      return refuse_init(kNotifyQkdKmsUnavailable, "KMS returned the wrong number of keys");
    }

    std::vector<Bytes> material;
    material.reserve(plan_.slot_count());
    Bytes id_blob;
    for (size_t i = 0; i < container.size(); ++i) {
      put_bytes(id_blob, container.keys[i].key_id.view());
      if (i < plan_.slot_count()) material.push_back(container.keys[i].material);
    }
    keys::QkdAssignment assignment = keys::assign_qkd_keys(material, plan_);
    keys_.ike = assignment.ike;
    keys_.children = assignment.children;
    keys_.auth_secret = assignment.auth_key;
    id_mac_key_i_ = assignment.auth_key;
    id_mac_key_r_ = assignment.auth_key;

    resp.payloads.push_back(NoncePayload{nonce_r_});
    if (config_.wire_extras) {
      append_init_extras(resp.payloads, spi_i_, spi_r_, /*initiator_side=*/false);
    }
    resp.payloads.push_back(
        NotifyPayload{ProtocolId::None, {}, kNotifyQkdKeyIds, id_blob});
    resp.payloads.push_back(NotifyPayload{
        ProtocolId::None, {}, kNotifyQkdKeyParams,
        encode_qkd_params(config_.qkd, plan_.slot_count())});
  } else {
    auto group = keys::modp2048();
    keys::DhKeyPair pair = keys::dh_keypair(*group, rng_, config_.dh_private_bits);
    dh_private_ = pair.private_key;
    Bytes shared;
    try {
      shared = keys::dh_shared_secret(*group, dh_private_, ke->data);
    } catch (const keys::DhError&) {
      return refuse_init(kNotifyNoProposalChosen, "degenerate public value from the peer");
    }
    keys_.ike = keys::derive_classical_ike_keys(shared, nonce_i_, nonce_r_,
                                                u64_bytes(spi_i_), u64_bytes(spi_r_));
    keys_.auth_secret = config_.mode == Mode::DhPsk ? config_.psk : Bytes{};
    id_mac_key_i_ = keys_.ike.sk_pi;
    id_mac_key_r_ = keys_.ike.sk_pr;

    resp.payloads.push_back(KePayload{kDhGroup14, pair.public_key});
    resp.payloads.push_back(NoncePayload{nonce_r_});
    if (config_.wire_extras) {
      append_init_extras(resp.payloads, spi_i_, spi_r_, /*initiator_side=*/false);
    }
  }

  init_response_wire_ = encode_message(resp);
  response_cache_[0] = init_response_wire_;
  expected_mid_ = 1;
  phase_ = Phase::Auth;
  return init_response_wire_;
}

Bytes ResponderSession::respond_sealed(uint32_t mid, ExchangeType exchange,
                                       const std::vector<Payload>& inner) {
  IkeHeader header;
  header.initiator_spi = spi_i_;
  header.responder_spi = spi_r_;
  header.exchange = exchange;
  header.flags = kFlagResponse;
  header.message_id = mid;
  Bytes wire = seal_message(header, inner, {keys_.ike.sk_er, keys_.ike.sk_ar}, rng_);
  response_cache_[mid] = wire;
  return wire;
}

Bytes ResponderSession::refuse_sealed(uint32_t mid, ExchangeType exchange, uint16_t notify_type,
                                      const std::string& why) {
  phase_ = Phase::Failed;
  failure_reason_ = why;
  return respond_sealed(mid, exchange,
                        {NotifyPayload{ProtocolId::None, {}, notify_type, {}}});
}

Bytes ResponderSession::handle_sealed_request(const IkeMessage& outer, ByteView wire) {
  uint32_t mid = outer.header.message_id;
  OpenedMessage msg = open_message(wire, {keys_.ike.sk_ei, keys_.ike.sk_ai});

  if (mid <= final_auth_mid()) {
    if (msg.header.exchange != ExchangeType::IkeAuth) {
      return refuse_sealed(mid, msg.header.exchange, kNotifyAuthenticationFailed,
                           "wrong exchange type during authentication");
    }
    if (mid == 1) return handle_first_auth(msg.payloads);
    if (mid == final_auth_mid()) return handle_final_auth(msg.payloads);
    return handle_eap_round(mid, msg.payloads);
  }
  if (msg.header.exchange != ExchangeType::CreateChildSa) {
    return refuse_sealed(mid, msg.header.exchange, kNotifyNoProposalChosen,
                         "wrong exchange type during Child SA creation");
  }
  return handle_child_request(msg.payloads);
}

Bytes ResponderSession::handle_first_auth(const std::vector<Payload>& inner) {
  const auto* id_i = find_payload_in<IdIPayload>(inner);
  if (!id_i || id_i->id_type != kIdFqdn ||
      id_i->data != to_bytes(config_.identities.initiator)) {
    return refuse_sealed(1, ExchangeType::IkeAuth, kNotifyAuthenticationFailed,
                         "unexpected initiator identity");
  }
  if (config_.mode == Mode::DhCert) {
    const auto* cert = find_payload_in<CertPayload>(inner);
    if (!cert) {
      return refuse_sealed(1, ExchangeType::IkeAuth, kNotifyAuthenticationFailed,
                           "certificate mode without a certificate");
    }
    try {
      keys::CertInfo info = keys::parse_cert_blob(cert->data);
      if (info.subject != config_.identities.initiator) {
        return refuse_sealed(1, ExchangeType::IkeAuth, kNotifyAuthenticationFailed,
                             "certificate subject does not match the claimed identity");
      }
      initiator_cert_key_ = info.public_key;
    } catch (const keys::AuthError& e) {
      return refuse_sealed(1, ExchangeType::IkeAuth, kNotifyAuthenticationFailed,
                           std::string("unusable certificate: ") + e.what());
    }
  }

  const auto* sa = find_payload_in<SaPayload>(inner);
  const Proposal* esp = sa ? find_proposal(*sa, ProtocolId::Esp) : nullptr;
  if (!esp || !esp_proposal_acceptable(*esp)) {
    return refuse_sealed(1, ExchangeType::IkeAuth, kNotifyNoProposalChosen,
                         "unacceptable Child SA offer");
  }
  const auto* tsi = find_payload_in<TsIPayload>(inner);
  const auto* tsr = find_payload_in<TsRPayload>(inner);
  if (!tsi || !tsr) {
    return refuse_sealed(1, ExchangeType::IkeAuth, kNotifyNoProposalChosen,
                         "missing traffic selectors");
  }
  child_offer_ = *sa;
  ts_i_ = *tsi;
  ts_r_ = *tsr;

  std::vector<Payload> out;
  out.emplace_back(make_id_r(config_));
  out.emplace_back(make_eap_stub(0, /*request=*/true, config_.eap.request_sizes[0]));
  expected_mid_ = 2;
  return respond_sealed(1, ExchangeType::IkeAuth, out);
}

Bytes ResponderSession::handle_eap_round(uint32_t mid, const std::vector<Payload>& inner) {
  size_t round = mid - 2;
  const auto* eap = find_payload_in<EapPayload>(inner);
  bool ok = eap && eap->code == EapCode::Response && eap->identifier == round &&
            eap->data == eap_stub_data(round, /*request=*/false,
                                       config_.eap.response_sizes[round]) &&
            config_.eap.fail_at_round != static_cast<int>(round);
  if (!ok) {
    phase_ = Phase::Failed;
    failure_reason_ = "EAP round " + std::to_string(round) + " rejected";
    EapPayload failure;
    failure.code = EapCode::Failure;
    failure.identifier = static_cast<uint8_t>(round);
    return respond_sealed(mid, ExchangeType::IkeAuth, {Payload{failure}});
  }
  size_t next_round = round + 1;
  expected_mid_ = mid + 1;
  return respond_sealed(
      mid, ExchangeType::IkeAuth,
      {Payload{make_eap_stub(next_round, /*request=*/true,
                             config_.eap.request_sizes[next_round])}});
}

Bytes ResponderSession::handle_final_auth(const std::vector<Payload>& inner) {
  uint32_t mid = final_auth_mid();
  size_t round = mid - 2;
  const auto* eap = find_payload_in<EapPayload>(inner);
  bool eap_ok = eap && eap->code == EapCode::Response && eap->identifier == round &&
                eap->data == eap_stub_data(round, /*request=*/false,
                                           config_.eap.response_sizes[round]) &&
                config_.eap.fail_at_round != static_cast<int>(round);
  if (!eap_ok) {
    phase_ = Phase::Failed;
    failure_reason_ = "EAP round " + std::to_string(round) + " rejected";
    EapPayload failure;
    failure.code = EapCode::Failure;
    failure.identifier = static_cast<uint8_t>(round);
    return respond_sealed(mid, ExchangeType::IkeAuth, {Payload{failure}});
  }

  const auto* auth = find_payload_in<AuthPayload>(inner);
  if (!auth || auth->method != auth_method_for(config_.mode)) {
    return refuse_sealed(mid, ExchangeType::IkeAuth, kNotifyAuthenticationFailed,
                         "missing or wrong-method AUTH");
  }
  Bytes id_body = encode_id_body(make_id_i(config_));
  Bytes octets =
      keys::auth_signed_octets(init_request_wire_, nonce_r_, id_mac_key_i_, id_body);
  bool ok = config_.mode == Mode::DhCert
                ? keys::ed25519_verify(initiator_cert_key_, octets, auth->data)
                : keys::verify_psk_auth(keys_.auth_secret, octets, auth->data);
  if (!ok) {
    return refuse_sealed(mid, ExchangeType::IkeAuth, kNotifyAuthenticationFailed,
                         "initiator authentication check failed");
  }

  if (config_.mode != Mode::Qkd) {
    keys_.children[0] =
        keys::derive_classical_child_keys(keys_.ike.sk_d, nonce_i_, nonce_r_);
  }

  // Choose the offered Child SA, substituting this end's own SPI.
  SaPayload chosen = child_offer_;
  chosen.proposals.resize(1);
  chosen.proposals[0].spi = rng_.bytes(4);

  Bytes own_id_body = encode_id_body(make_id_r(config_));
  Bytes own_octets =
      keys::auth_signed_octets(init_response_wire_, nonce_i_, id_mac_key_r_, own_id_body);
  Bytes auth_data =
      config_.mode == Mode::DhCert
          ? keys::ed25519_sign(config_.responder_cert.private_key, own_octets)
          : keys::compute_psk_auth(keys_.auth_secret, own_octets);

  EapPayload success;
  success.code = EapCode::Success;
  success.identifier = static_cast<uint8_t>(round);

  std::vector<Payload> out;
  out.emplace_back(success);
  out.emplace_back(AuthPayload{auth_method_for(config_.mode), auth_data});
  out.emplace_back(chosen);
  out.emplace_back(ts_i_);
  out.emplace_back(ts_r_);

  next_child_ = 1;
  if (next_child_ >= plan_.child_sa_count) {
    phase_ = Phase::Established;
    expected_mid_ = mid + 1;  // no further requests expected
  } else {
    phase_ = Phase::ChildSa;
    expected_mid_ = mid + 1;
  }
  return respond_sealed(mid, ExchangeType::IkeAuth, out);
}

Bytes ResponderSession::handle_child_request(const std::vector<Payload>& inner) {
  uint32_t mid = expected_mid_;
  const auto* sa = find_payload_in<SaPayload>(inner);
  const Proposal* esp = sa ? find_proposal(*sa, ProtocolId::Esp) : nullptr;
  if (!esp || !esp_proposal_acceptable(*esp)) {
    return refuse_sealed(mid, ExchangeType::CreateChildSa, kNotifyNoProposalChosen,
                         "unacceptable Child SA offer");
  }
  const auto* tsi = find_payload_in<TsIPayload>(inner);
  const auto* tsr = find_payload_in<TsRPayload>(inner);
  if (!tsi || !tsr) {
    return refuse_sealed(mid, ExchangeType::CreateChildSa, kNotifyNoProposalChosen,
                         "missing traffic selectors");
  }

  std::vector<Payload> out;
  SaPayload chosen = *sa;
  chosen.proposals.resize(1);
  chosen.proposals[0].spi = rng_.bytes(4);
  out.emplace_back(chosen);

  if (config_.mode != Mode::Qkd) {
    const auto* nonce = find_payload_in<NoncePayload>(inner);
    if (!nonce) {
      return refuse_sealed(mid, ExchangeType::CreateChildSa, kNotifyNoProposalChosen,
                           "Child SA request lacks a nonce");
    }
    Bytes nonce_r = rng_.bytes(config_.nonce_len);
    keys_.children[next_child_] =
        keys::derive_classical_child_keys(keys_.ike.sk_d, nonce->nonce, nonce_r);
    out.emplace_back(NoncePayload{nonce_r});
  }
  out.emplace_back(*tsi);
  out.emplace_back(*tsr);

  next_child_ += 1;
  expected_mid_ = mid + 1;
  if (next_child_ >= plan_.child_sa_count) phase_ = Phase::Established;
  return respond_sealed(mid, ExchangeType::CreateChildSa, out);
}

}  // namespace nwulab::handshake
