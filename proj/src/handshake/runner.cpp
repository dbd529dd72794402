#include "nwulab/handshake/runner.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <memory>
#include <set>
#include <thread>

#include "nwulab/ike/secure.hpp"
#include "nwulab/keys/dh.hpp"
#include "nwulab/keys/prf.hpp"
#include "nwulab/transport/udp.hpp"

namespace nwulab::handshake {

using namespace std::chrono;
using namespace ike;

std::string wire_label(ByteView wire) {
  if (wire.size() < kHeaderLen) return "short-datagram";
  auto exchange = static_cast<ExchangeType>(wire[18]);
  uint8_t flags = wire[19];
  uint32_t mid = read_u32(wire, 20);
  char mid_part[16];
  std::snprintf(mid_part, sizeof mid_part, " MID=%02u ", mid);
  return std::string(to_string(exchange)) + mid_part +
         ((flags & kFlagResponse) ? "R" : "I");
}

namespace {

int64_t now_ns() { return steady_clock::now().time_since_epoch().count(); }

/// Both ends must be able to seal traffic the other can open, on the
/// IKE SA and on every Child SA, in both directions.
bool run_sa_probes(const SessionKeys& i, const SessionKeys& r, Rng& rng) {
  const Bytes plain = to_bytes("post-handshake traffic probe");
  const Bytes aad = {0x4e, 0x57, 0x75, 0x00};  // arbitrary fixed associated data

  IkeHeader header;
  header.initiator_spi = 0x1111;
  header.responder_spi = 0x2222;
  header.exchange = ExchangeType::Informational;
  header.message_id = 99;

  std::vector<Payload> inner = {NotifyPayload{ProtocolId::None, {}, 0x4000, plain}};

  header.flags = kFlagInitiator;
  Bytes wire = seal_message(header, inner, {i.ike.sk_ei, i.ike.sk_ai}, rng);
  OpenedMessage opened = open_message(wire, {r.ike.sk_ei, r.ike.sk_ai});
  const auto* n = find_payload_in<NotifyPayload>(opened.payloads);
  if (!n || n->data != plain) return false;

  header.flags = kFlagResponse;
  wire = seal_message(header, inner, {r.ike.sk_er, r.ike.sk_ar}, rng);
  opened = open_message(wire, {i.ike.sk_er, i.ike.sk_ar});
  n = find_payload_in<NotifyPayload>(opened.payloads);
  if (!n || n->data != plain) return false;

  if (i.children.size() != r.children.size()) return false;
  for (size_t k = 0; k < i.children.size(); ++k) {
    SkPayload sk =
        seal(plain, PayloadType::Notify, {i.children[k].enc_i, i.children[k].int_i}, aad, rng);
    if (open(sk, {r.children[k].enc_i, r.children[k].int_i}, aad) != plain) return false;
    sk = seal(plain, PayloadType::Notify, {r.children[k].enc_r, r.children[k].int_r}, aad,
              rng);
    if (open(sk, {i.children[k].enc_r, i.children[k].int_r}, aad) != plain) return false;
  }
  return true;
}

std::string fingerprint(const SessionKeys& keys) {
  Bytes all;
  for (const Bytes* part : {&keys.ike.sk_d, &keys.ike.sk_ai, &keys.ike.sk_ar,
                            &keys.ike.sk_ei, &keys.ike.sk_er, &keys.ike.sk_pi,
                            &keys.ike.sk_pr}) {
    put_bytes(all, *part);
  }
  for (const auto& child : keys.children) {
    for (const Bytes* part : {&child.enc_i, &child.int_i, &child.enc_r, &child.int_r}) {
      put_bytes(all, *part);
    }
  }
  put_bytes(all, keys.auth_secret);
  return to_hex(keys::sha256(all));
}

size_t count_distinct_sends(const std::vector<transport::WireRecord>& a,
                            const std::vector<transport::WireRecord>& b) {
  std::set<std::string> labels;
  for (const auto* trace : {&a, &b}) {
    for (const auto& rec : *trace) {
      if (rec.direction == transport::WireRecord::Direction::Send) labels.insert(rec.label);
    }
  }
  return labels.size();
}

}  // namespace

HandshakeResult run_full_handshake(const HandshakeConfig& config, const RunOptions& opts) {
  HandshakeResult result;
  result.mode = config.mode;

  uint64_t modexp_before = keys::modexp_count();
  uint64_t prf_plus_before = keys::prf_plus_count();

  transport::LinkPair link;
  std::unique_ptr<Rng> initiator_rng, responder_rng;
  std::unique_ptr<kms::KmsClient> initiator_kms_owned, responder_kms_owned;
  kms::KmsClient* initiator_kms = opts.initiator_kms;
  kms::KmsClient* responder_kms = opts.responder_kms;

  try {
    link = opts.use_udp ? transport::make_udp_pair() : transport::make_memory_link(opts.link);
    initiator_rng = make_rng(opts.seed);
    responder_rng =
        make_rng(opts.seed ? std::optional<uint64_t>(*opts.seed ^ 0x9e3779b97f4a7c15ull)
                           : std::nullopt);

    if (config.mode == Mode::Qkd && (!initiator_kms || !responder_kms)) {
      if (!opts.kms) {
        result.error = "QKD mode needs a KMS pair or explicit clients";
        return result;
      }
      opts.kms->register_sae(config.qkd.initiator_sae, 'a');
      opts.kms->register_sae(config.qkd.responder_sae, 'b');
      if (!initiator_kms) {
        initiator_kms_owned = std::make_unique<kms::InProcessKmsClient>(
            opts.kms->kme_a(), config.qkd.initiator_sae);
        initiator_kms = initiator_kms_owned.get();
      }
      if (!responder_kms) {
        responder_kms_owned = std::make_unique<kms::InProcessKmsClient>(
            opts.kms->kme_b(), config.qkd.responder_sae);
        responder_kms = responder_kms_owned.get();
      }
    }

    InitiatorSession initiator(config, *initiator_rng, initiator_kms);
    ResponderSession responder(config, *responder_rng, responder_kms);

    std::atomic<bool> stop{false};
    std::string responder_thread_error;
    std::thread responder_thread([&] {
      while (!stop.load(std::memory_order_acquire)) {
        std::optional<Bytes> got = link.b->recv(milliseconds(100));
        if (!got) continue;
        try {
          std::optional<Bytes> out = responder.on_message(*got);
          if (out) link.b->send(*out, wire_label(*out));
        } catch (const std::exception& e) {
          responder_thread_error = e.what();
          break;
        }
      }
    });

    result.t0_ns = now_ns();
    try {
      while (initiator.phase() != Phase::Established && initiator.phase() != Phase::Failed) {
        std::optional<Bytes> request = initiator.next_request();
        if (!request) break;

        bool advanced = false;
        int attempts = 0;
        while (!advanced) {
          link.a->send(*request, wire_label(*request));
          auto deadline = steady_clock::now() + config.retransmit.timeout;
          while (!advanced) {
            auto remaining = duration_cast<milliseconds>(deadline - steady_clock::now());
            if (remaining <= milliseconds(0)) break;
            std::optional<Bytes> response = link.a->recv(remaining);
            if (!response) break;
            uint32_t mid_before = initiator.outstanding_message_id();
            Phase phase_before = initiator.phase();
            if (!initiator.consume_response(*response)) continue;  // stale
            advanced = true;
            int64_t t = now_ns();
            if (mid_before == 0) result.t1_ns = t;
            if (phase_before == Phase::Auth && initiator.phase() != Phase::Auth) {
              result.t2_ns = t;
            }
            if (initiator.phase() == Phase::Established) result.t3_ns = t;
          }
          if (!advanced && ++attempts > config.retransmit.max_retries) {
            throw HandshakeError("timed out waiting for " + wire_label(*request));
          }
        }
      }
      result.success = initiator.phase() == Phase::Established;
      if (!result.success && result.error.empty()) {
        result.error = "initiator stopped in phase " + std::string(to_string(initiator.phase()));
      }
    } catch (const std::exception& e) {
      result.success = false;
      result.error = e.what();
    }

    int64_t t_end = now_ns();
    if (result.t1_ns == 0) result.t1_ns = t_end;
    if (result.t2_ns == 0) result.t2_ns = t_end;
    if (result.t3_ns == 0) result.t3_ns = t_end;

    stop.store(true, std::memory_order_release);
    link.a->close();
    responder_thread.join();

    if (!responder_thread_error.empty() && result.error.empty()) {
      result.error = "responder: " + responder_thread_error;
      result.success = false;
    }
    result.responder_failure = responder.failure_reason();

    result.initiator_trace = link.a->trace();
    result.responder_trace = link.b->trace();
    result.message_count = count_distinct_sends(result.initiator_trace, result.responder_trace);
    result.initiator_kms = initiator.kms_stats();
    result.responder_kms = responder.kms_stats();
    result.keys = initiator.session_keys();

    if (result.success && responder.phase() == Phase::Established) {
      result.keys_match = initiator.session_keys() == responder.session_keys();
      result.key_fingerprint = fingerprint(initiator.session_keys());
      try {
        result.probes_ok = result.keys_match && run_sa_probes(initiator.session_keys(),
                                                              responder.session_keys(),
                                                              *initiator_rng);
      } catch (const std::exception&) {
        result.probes_ok = false;
      }
    } else if (result.success) {
      result.success = false;
      result.error = "initiator established but responder did not";
    }
  } catch (const std::exception& e) {
    result.success = false;
    if (result.error.empty()) result.error = e.what();
    int64_t t_end = now_ns();
    if (result.t0_ns == 0) result.t0_ns = t_end;
    if (result.t1_ns == 0) result.t1_ns = t_end;
    if (result.t2_ns == 0) result.t2_ns = t_end;
    if (result.t3_ns == 0) result.t3_ns = t_end;
  }

  result.modexp_count = keys::modexp_count() - modexp_before;
  result.prf_plus_count = keys::prf_plus_count() - prf_plus_before;
  return result;
}

}  // namespace nwulab::handshake
