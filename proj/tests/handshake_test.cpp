#include <gtest/gtest.h>

#include <memory>
#include <string>
#include <vector>

#include "nwulab/handshake/runner.hpp"
#include "nwulab/handshake/session.hpp"
#include "nwulab/ike/codec.hpp"
#include "nwulab/ike/message.hpp"
#include "nwulab/kms/store.hpp"

using namespace nwulab;
using namespace nwulab::handshake;

namespace {

constexpr size_t kFraming = 42;  // IP + UDP + non-ESP marker per datagram

std::unique_ptr<kms::KmsSystem> make_kms(uint64_t seed, size_t fill) {
  kms::KmsConfig cfg;
  cfg.seed = seed;
  auto system = std::make_unique<kms::KmsSystem>(cfg);
  if (fill > 0) system->replenish(fill);
  return system;
}

HandshakeConfig config_for(Mode mode) {
  HandshakeConfig cfg;
  cfg.mode = mode;
  if (mode == Mode::DhCert) {
    SeededRng rng(99);
    cfg.initiator_cert = keys::make_cert_identity(cfg.identities.initiator, 1250, rng);
    cfg.responder_cert = keys::make_cert_identity(cfg.identities.responder, 1250, rng);
  }
  return cfg;
}

HandshakeResult run_mode(Mode mode, uint64_t seed, kms::KmsSystem* kms,
                         const RunOptions& extra = {}) {
  HandshakeConfig cfg = config_for(mode);
  RunOptions opts = extra;
  opts.seed = seed;
  opts.kms = kms;
  return run_full_handshake(cfg, opts);
}

std::vector<transport::WireRecord> sends_of(const std::vector<transport::WireRecord>& trace) {
  std::vector<transport::WireRecord> out;
  for (const auto& r : trace)
    if (r.direction == transport::WireRecord::Direction::Send) out.push_back(r);
  return out;
}

size_t framed_total(const std::vector<transport::WireRecord>& trace) {
  size_t total = 0;
  for (const auto& r : trace) {
    if (r.direction != transport::WireRecord::Direction::Send) continue;
    total += r.bytes_on_wire + kFraming;
  }
  return total;
}

/// Drives two in-process sessions to completion without a transport.
void pump(InitiatorSession& initiator, ResponderSession& responder) {
  for (int step = 0; step < 64; ++step) {
    auto request = initiator.next_request();
    if (!request) return;
    auto response = responder.on_message(*request);
    ASSERT_TRUE(response.has_value()) << "responder ignored a live request";
    initiator.consume_response(*response);
  }
  FAIL() << "sessions did not converge";
}

// --- Full runs, one per mode --------------------------------------------------

TEST(Handshake, SharedSecretBaselineEstablishes) {
  auto result = run_mode(Mode::DhPsk, 1, nullptr);
  EXPECT_TRUE(result.success) << result.error;
  EXPECT_TRUE(result.keys_match);
  EXPECT_TRUE(result.probes_ok);
  EXPECT_EQ(result.message_count, 14u);
  EXPECT_EQ(result.modexp_count, 4u);  // two keypairs + two shared secrets
  EXPECT_TRUE(result.error.empty());
  ASSERT_EQ(result.keys.children.size(), 2u);
  EXPECT_NE(result.keys.children[0].enc_i, result.keys.children[1].enc_i);
  EXPECT_FALSE(result.keys.ike.sk_d.empty());
}

TEST(Handshake, CertificateBaselineEstablishes) {
  auto result = run_mode(Mode::DhCert, 2, nullptr);
  EXPECT_TRUE(result.success) << result.error;
  EXPECT_TRUE(result.keys_match);
  EXPECT_TRUE(result.probes_ok);
  EXPECT_EQ(result.message_count, 14u);
  EXPECT_EQ(result.modexp_count, 4u);
  EXPECT_TRUE(result.keys.auth_secret.empty());  // signature auth, no shared MAC secret

  // The first IKE_AUTH request carries the credential blob and dwarfs the
  // shared-secret variant of the same message.
  auto sends = sends_of(result.initiator_trace);
  ASSERT_GE(sends.size(), 2u);
  EXPECT_EQ(sends[1].label, "IKE_AUTH MID=01 I");
  EXPECT_EQ(sends[1].bytes_on_wire + kFraming, 1514u);
}

TEST(Handshake, QuantumKeyedModeEstablishes) {
  auto kms = make_kms(404, 64);
  auto result = run_mode(Mode::Qkd, 3, kms.get());
  EXPECT_TRUE(result.success) << result.error;
  EXPECT_TRUE(result.keys_match);
  EXPECT_TRUE(result.probes_ok);
  EXPECT_EQ(result.message_count, 14u);
  // Every key comes from the stores: no public-key math, no key-stream
  // expansion anywhere in the run.
  EXPECT_EQ(result.modexp_count, 0u);
  EXPECT_EQ(result.prf_plus_count, 0u);
  EXPECT_TRUE(result.keys.ike.sk_d.empty());
  EXPECT_FALSE(result.keys.auth_secret.empty());
}

TEST(Handshake, QkdKmsCallDiscipline) {
  auto kms = make_kms(405, 64);
  auto result = run_mode(Mode::Qkd, 4, kms.get());
  ASSERT_TRUE(result.success) << result.error;
  // One enc_keys fetch on the responder, one dec_keys collection on the
  // initiator, 13 keys each (4 IKE + 2x4 child + 1 auth); nothing else.
  EXPECT_EQ(result.responder_kms.get_keys_calls, 1u);
  EXPECT_EQ(result.responder_kms.get_keys_by_id_calls, 0u);
  EXPECT_EQ(result.responder_kms.keys_requested, 13u);
  EXPECT_EQ(result.initiator_kms.get_keys_calls, 0u);
  EXPECT_EQ(result.initiator_kms.get_keys_by_id_calls, 1u);
  EXPECT_EQ(result.initiator_kms.keys_requested, 13u);
}

TEST(Handshake, KeyFingerprintFollowsThePoolNotTheWire) {
  auto kms_a = make_kms(406, 64);
  auto kms_b = make_kms(406, 64);
  auto first = run_mode(Mode::Qkd, 5, kms_a.get());
  auto second = run_mode(Mode::Qkd, 5, kms_b.get());
  ASSERT_TRUE(first.success);
  ASSERT_TRUE(second.success);
  EXPECT_EQ(first.key_fingerprint, second.key_fingerprint);

  // Different wire randomness, same pool: every session key is store
  // material, so the fingerprint is unchanged.
  auto kms_c = make_kms(406, 64);
  auto third = run_mode(Mode::Qkd, 6, kms_c.get());
  ASSERT_TRUE(third.success);
  EXPECT_EQ(first.key_fingerprint, third.key_fingerprint);

  // A differently seeded pool is a different key set.
  auto kms_d = make_kms(416, 64);
  auto fourth = run_mode(Mode::Qkd, 5, kms_d.get());
  ASSERT_TRUE(fourth.success);
  EXPECT_NE(first.key_fingerprint, fourth.key_fingerprint);

  // Classical runs key off the wire exchange instead: a new seed means
  // new exponents and nonces, and with them a new key set.
  auto psk_a = run_mode(Mode::DhPsk, 5, nullptr);
  auto psk_b = run_mode(Mode::DhPsk, 5, nullptr);
  auto psk_c = run_mode(Mode::DhPsk, 6, nullptr);
  ASSERT_TRUE(psk_a.success && psk_b.success && psk_c.success);
  EXPECT_EQ(psk_a.key_fingerprint, psk_b.key_fingerprint);
  EXPECT_NE(psk_a.key_fingerprint, psk_c.key_fingerprint);
}

// --- Wire composition ----------------------------------------------------------

TEST(Handshake, QkdInitCarriesKeyIdsInsteadOfKeyExchange) {
  HandshakeConfig cfg = config_for(Mode::Qkd);
  auto kms = make_kms(407, 64);
  kms->register_sae(cfg.qkd.initiator_sae, 'a');
  kms->register_sae(cfg.qkd.responder_sae, 'b');
  kms::InProcessKmsClient ue_client(kms->kme_a(), cfg.qkd.initiator_sae);
  kms::InProcessKmsClient gw_client(kms->kme_b(), cfg.qkd.responder_sae);

  SeededRng rng_i(70), rng_r(71);
  InitiatorSession initiator(cfg, rng_i, &ue_client);
  ResponderSession responder(cfg, rng_r, &gw_client);

  auto request = initiator.next_request();
  ASSERT_TRUE(request.has_value());
  ike::IkeMessage init = ike::decode_message(*request);
  EXPECT_EQ(ike::find_payload<ike::KePayload>(init), nullptr);
  const auto* sae = ike::find_notify(init, ike::kNotifyQkdSaeId);
  ASSERT_NE(sae, nullptr);
  EXPECT_EQ(to_ascii(sae->data), cfg.qkd.initiator_sae.value);

  auto response = responder.on_message(*request);
  ASSERT_TRUE(response.has_value());
  ike::IkeMessage reply = ike::decode_message(*response);
  EXPECT_EQ(ike::find_payload<ike::KePayload>(reply), nullptr);
  const auto* ids = ike::find_notify(reply, ike::kNotifyQkdKeyIds);
  ASSERT_NE(ids, nullptr);
  EXPECT_EQ(ids->data.size(), 13u * 16u);  // thirteen raw key ids
  const auto* params = ike::find_notify(reply, ike::kNotifyQkdKeyParams);
  ASSERT_NE(params, nullptr);
  ASSERT_FALSE(params->data.empty());
  EXPECT_EQ(params->data[0], 1u);  // parameter format version

  EXPECT_TRUE(initiator.consume_response(*response));
  EXPECT_EQ(initiator.phase(), Phase::Auth);
}

TEST(Handshake, ClassicalInitCarriesGroup14KeyExchange) {
  HandshakeConfig cfg = config_for(Mode::DhPsk);
  SeededRng rng(72);
  InitiatorSession initiator(cfg, rng);
  auto request = initiator.next_request();
  ASSERT_TRUE(request.has_value());
  ike::IkeMessage init = ike::decode_message(*request);
  const auto* ke = ike::find_payload<ike::KePayload>(init);
  ASSERT_NE(ke, nullptr);
  EXPECT_EQ(ke->group, 14u);
  EXPECT_EQ(ke->data.size(), 256u);  // 2048-bit public value
  EXPECT_EQ(ike::find_notify(init, ike::kNotifyQkdSaeId), nullptr);
}

TEST(Handshake, WireByteBudgetMatchesTheKnownShape) {
  auto kms = make_kms(408, 64);
  auto psk = run_mode(Mode::DhPsk, 7, nullptr);
  auto cert = run_mode(Mode::DhCert, 7, nullptr);
  auto qkd = run_mode(Mode::Qkd, 7, kms.get());
  ASSERT_TRUE(psk.success && cert.success && qkd.success);

  auto psk_sends = sends_of(psk.initiator_trace);
  auto qkd_sends = sends_of(qkd.initiator_trace);
  auto psk_recvs_first = psk.initiator_trace;
  // First exchange, datagram-framed: the quantum-keyed request drops the
  // 256-byte public value, the response grows by the key-id material.
  EXPECT_EQ(psk_sends[0].bytes_on_wire + kFraming, 570u);
  EXPECT_EQ(qkd_sends[0].bytes_on_wire + kFraming, 332u);
  size_t psk_init_resp = 0, qkd_init_resp = 0;
  for (const auto& r : psk.initiator_trace)
    if (r.direction == transport::WireRecord::Direction::Recv) {
      psk_init_resp = r.bytes_on_wire + kFraming;
      break;
    }
  for (const auto& r : qkd.initiator_trace)
    if (r.direction == transport::WireRecord::Direction::Recv) {
      qkd_init_resp = r.bytes_on_wire + kFraming;
      break;
    }
  EXPECT_EQ(psk_init_resp, 498u);
  EXPECT_EQ(qkd_init_resp, 536u);
  EXPECT_LT(qkd_sends[0].bytes_on_wire, psk_sends[0].bytes_on_wire);
  EXPECT_GT(qkd_init_resp, psk_init_resp);

  // Whole-handshake totals across both directions, framed.
  size_t psk_total = framed_total(psk.initiator_trace) + framed_total(psk.responder_trace);
  size_t cert_total = framed_total(cert.initiator_trace) + framed_total(cert.responder_trace);
  size_t qkd_total = framed_total(qkd.initiator_trace) + framed_total(qkd.responder_trace);
  EXPECT_EQ(psk_total, 4756u);
  EXPECT_EQ(cert_total, 6068u);
  EXPECT_EQ(qkd_total, 4460u);
  EXPECT_LT(qkd_total, psk_total);
  EXPECT_LT(psk_total, cert_total);
}

TEST(Handshake, InitiatorSendsExactlyTheExpectedSequence) {
  auto result = run_mode(Mode::DhPsk, 8, nullptr);
  ASSERT_TRUE(result.success);
  std::vector<std::string> labels;
  for (const auto& r : sends_of(result.initiator_trace)) labels.push_back(r.label);
  std::vector<std::string> expected = {
      "IKE_SA_INIT MID=00 I",    "IKE_AUTH MID=01 I", "IKE_AUTH MID=02 I",
      "IKE_AUTH MID=03 I",       "IKE_AUTH MID=04 I", "IKE_AUTH MID=05 I",
      "CREATE_CHILD_SA MID=06 I"};
  EXPECT_EQ(labels, expected);

  std::vector<std::string> responder_labels;
  for (const auto& r : sends_of(result.responder_trace)) responder_labels.push_back(r.label);
  std::vector<std::string> expected_r = {
      "IKE_SA_INIT MID=00 R",    "IKE_AUTH MID=01 R", "IKE_AUTH MID=02 R",
      "IKE_AUTH MID=03 R",       "IKE_AUTH MID=04 R", "IKE_AUTH MID=05 R",
      "CREATE_CHILD_SA MID=06 R"};
  EXPECT_EQ(responder_labels, expected_r);
}

TEST(Handshake, ChildSaCountShapesTheFlow) {
  HandshakeConfig one = config_for(Mode::DhPsk);
  one.sa_plan.child_sa_count = 1;
  RunOptions opts;
  opts.seed = 9;
  auto single = run_full_handshake(one, opts);
  ASSERT_TRUE(single.success) << single.error;
  EXPECT_EQ(single.message_count, 12u);  // no CREATE_CHILD_SA exchange at all
  EXPECT_EQ(single.keys.children.size(), 1u);
  for (const auto& r : single.initiator_trace)
    EXPECT_EQ(r.label.find("CREATE_CHILD_SA"), std::string::npos);

  HandshakeConfig three = config_for(Mode::DhPsk);
  three.sa_plan.child_sa_count = 3;
  auto triple = run_full_handshake(three, opts);
  ASSERT_TRUE(triple.success) << triple.error;
  EXPECT_EQ(triple.message_count, 16u);
  ASSERT_EQ(triple.keys.children.size(), 3u);
  EXPECT_TRUE(triple.keys_match);
  EXPECT_TRUE(triple.probes_ok);
  EXPECT_NE(triple.keys.children[1].enc_i, triple.keys.children[2].enc_i);
}

TEST(Handshake, QkdSlotCountFollowsChildSaCount) {
  HandshakeConfig cfg = config_for(Mode::Qkd);
  cfg.sa_plan.child_sa_count = 3;
  auto kms = make_kms(409, 64);
  RunOptions opts;
  opts.seed = 10;
  opts.kms = kms.get();
  auto result = run_full_handshake(cfg, opts);
  ASSERT_TRUE(result.success) << result.error;
  EXPECT_EQ(result.responder_kms.keys_requested, 17u);  // 4 + 4*3 + 1
  EXPECT_EQ(result.initiator_kms.keys_requested, 17u);
  EXPECT_EQ(result.modexp_count, 0u);
  EXPECT_EQ(result.prf_plus_count, 0u);
}

// --- Transports ----------------------------------------------------------------

TEST(Handshake, RunsOverRealUdpSockets) {
  RunOptions opts;
  opts.use_udp = true;
  auto kms = make_kms(410, 64);
  auto psk = run_mode(Mode::DhPsk, 11, nullptr, opts);
  EXPECT_TRUE(psk.success) << psk.error;
  auto qkd = run_mode(Mode::Qkd, 12, kms.get(), opts);
  EXPECT_TRUE(qkd.success) << qkd.error;
  EXPECT_TRUE(qkd.keys_match);
}

TEST(Handshake, LossyLinkRecoversThroughRetransmission) {
  HandshakeConfig cfg = config_for(Mode::DhPsk);
  cfg.retransmit.timeout = std::chrono::milliseconds(60);
  cfg.retransmit.max_retries = 8;
  RunOptions opts;
  opts.seed = 13;
  opts.link.loss_probability = 0.15;
  opts.link.loss_seed = 2718;
  auto result = run_full_handshake(cfg, opts);
  EXPECT_TRUE(result.success) << result.error;
  EXPECT_TRUE(result.keys_match);
  EXPECT_TRUE(result.probes_ok);
  // Distinct messages stay at 14 even though some datagrams went twice.
  EXPECT_EQ(result.message_count, 14u);
  size_t datagrams_sent = sends_of(result.initiator_trace).size() +
                          sends_of(result.responder_trace).size();
  EXPECT_GE(datagrams_sent, 14u);
}

// --- Failure paths ---------------------------------------------------------------

TEST(Handshake, ModeMismatchIsRefusedCleanly) {
  // Classical initiator against a quantum-keyed responder.
  {
    HandshakeConfig ue = config_for(Mode::DhPsk);
    HandshakeConfig gw = config_for(Mode::Qkd);
    auto kms = make_kms(411, 64);
    kms->register_sae(gw.qkd.responder_sae, 'b');
    kms::InProcessKmsClient gw_client(kms->kme_b(), gw.qkd.responder_sae);
    SeededRng rng_i(80), rng_r(81);
    InitiatorSession initiator(ue, rng_i);
    ResponderSession responder(gw, rng_r, &gw_client);
    auto request = initiator.next_request();
    ASSERT_TRUE(request.has_value());
    auto response = responder.on_message(*request);
    ASSERT_TRUE(response.has_value());
    EXPECT_THROW(initiator.consume_response(*response), ProposalRejected);
    EXPECT_EQ(initiator.phase(), Phase::Failed);
    EXPECT_EQ(responder.phase(), Phase::Failed);
    EXPECT_FALSE(responder.failure_reason().empty());
  }
  // Quantum-keyed initiator against a classical responder.
  {
    HandshakeConfig ue = config_for(Mode::Qkd);
    HandshakeConfig gw = config_for(Mode::DhPsk);
    auto kms = make_kms(412, 64);
    kms->register_sae(ue.qkd.initiator_sae, 'a');
    kms::InProcessKmsClient ue_client(kms->kme_a(), ue.qkd.initiator_sae);
    SeededRng rng_i(82), rng_r(83);
    InitiatorSession initiator(ue, rng_i, &ue_client);
    ResponderSession responder(gw, rng_r);
    auto request = initiator.next_request();
    ASSERT_TRUE(request.has_value());
    auto response = responder.on_message(*request);
    ASSERT_TRUE(response.has_value());
    EXPECT_THROW(initiator.consume_response(*response), ProposalRejected);
  }
}

TEST(Handshake, WrongSharedSecretFailsAuthentication) {
  HandshakeConfig ue = config_for(Mode::DhPsk);
  HandshakeConfig gw = config_for(Mode::DhPsk);
  ue.psk = to_bytes("not the secret the gateway knows");
  SeededRng rng_i(84), rng_r(85);
  InitiatorSession initiator(ue, rng_i);
  ResponderSession responder(gw, rng_r);
  EXPECT_THROW(pump(initiator, responder), AuthFailure);
  EXPECT_EQ(initiator.phase(), Phase::Failed);
  EXPECT_EQ(responder.phase(), Phase::Failed);
  EXPECT_NE(responder.failure_reason().find("authentication"), std::string::npos)
      << responder.failure_reason();
}

TEST(Handshake, WrongPinnedKeyFailsResponderVerification) {
  HandshakeConfig gw = config_for(Mode::DhCert);
  HandshakeConfig ue = gw;
  SeededRng key_rng(86);
  // The initiator pins a key that is not the one the gateway signs with.
  ue.responder_cert.public_key = keys::make_cert_identity("imposter", 400, key_rng).public_key;
  SeededRng rng_i(87), rng_r(88);
  InitiatorSession initiator(ue, rng_i);
  ResponderSession responder(gw, rng_r);
  EXPECT_THROW(pump(initiator, responder), AuthFailure);
  EXPECT_EQ(initiator.phase(), Phase::Failed);
}

TEST(Handshake, EmptyKeyPoolSurfacesAsKmsFailure) {
  auto kms = make_kms(413, 0);  // registered KMEs, nothing in the pool
  HandshakeConfig cfg = config_for(Mode::Qkd);
  RunOptions opts;
  opts.seed = 14;
  opts.kms = kms.get();
  auto result = run_full_handshake(cfg, opts);
  EXPECT_FALSE(result.success);
  EXPECT_NE(result.error.find("KMS"), std::string::npos) << result.error;
  EXPECT_FALSE(result.responder_failure.empty());
}

TEST(Handshake, KeyCountDisagreementIsAProtocolError) {
  HandshakeConfig ue = config_for(Mode::Qkd);
  HandshakeConfig gw = config_for(Mode::Qkd);
  ue.qkd.key_count_override = 15;  // gateway will announce only 13
  auto kms = make_kms(414, 64);
  kms->register_sae(ue.qkd.initiator_sae, 'a');
  kms->register_sae(gw.qkd.responder_sae, 'b');
  kms::InProcessKmsClient ue_client(kms->kme_a(), ue.qkd.initiator_sae);
  kms::InProcessKmsClient gw_client(kms->kme_b(), gw.qkd.responder_sae);
  SeededRng rng_i(89), rng_r(90);
  InitiatorSession initiator(ue, rng_i, &ue_client);
  ResponderSession responder(gw, rng_r, &gw_client);
  auto request = initiator.next_request();
  ASSERT_TRUE(request.has_value());
  auto response = responder.on_message(*request);
  ASSERT_TRUE(response.has_value());
  EXPECT_THROW(initiator.consume_response(*response), ProtocolError);
}

TEST(Handshake, EapRoundFailureEndsTheConversation) {
  HandshakeConfig cfg = config_for(Mode::DhPsk);
  cfg.eap.fail_at_round = 2;
  RunOptions opts;
  opts.seed = 15;
  auto result = run_full_handshake(cfg, opts);
  EXPECT_FALSE(result.success);
  EXPECT_NE(result.error.find("EAP"), std::string::npos) << result.error;
  EXPECT_FALSE(result.responder_failure.empty());
}

// --- Retransmission, replay, and drop behavior ----------------------------------

TEST(Handshake, DuplicateRequestsReplayCachedResponsesByteForByte) {
  HandshakeConfig cfg = config_for(Mode::DhPsk);
  SeededRng rng_i(91), rng_r(92);
  InitiatorSession initiator(cfg, rng_i);
  ResponderSession responder(cfg, rng_r);

  auto init_request = initiator.next_request();
  ASSERT_TRUE(init_request.has_value());
  auto first = responder.on_message(*init_request);
  auto replayed = responder.on_message(*init_request);
  ASSERT_TRUE(first.has_value());
  ASSERT_TRUE(replayed.has_value());
  EXPECT_EQ(*first, *replayed);
  EXPECT_EQ(responder.dropped_messages(), 0u);

  ASSERT_TRUE(initiator.consume_response(*first));
  auto auth_request = initiator.next_request();
  ASSERT_TRUE(auth_request.has_value());
  auto sealed_first = responder.on_message(*auth_request);
  auto sealed_replayed = responder.on_message(*auth_request);
  ASSERT_TRUE(sealed_first.has_value());
  ASSERT_TRUE(sealed_replayed.has_value());
  EXPECT_EQ(*sealed_first, *sealed_replayed);
}

TEST(Handshake, StaleResponseIsIgnoredNotFatal) {
  HandshakeConfig cfg = config_for(Mode::DhPsk);
  SeededRng rng_i(93), rng_r(94);
  InitiatorSession initiator(cfg, rng_i);
  ResponderSession responder(cfg, rng_r);

  auto init_request = initiator.next_request();
  auto init_response = responder.on_message(*init_request);
  ASSERT_TRUE(init_response.has_value());
  ASSERT_TRUE(initiator.consume_response(*init_response));
  EXPECT_EQ(initiator.phase(), Phase::Auth);

  auto before = initiator.next_request();
  EXPECT_FALSE(initiator.consume_response(*init_response));  // late duplicate
  EXPECT_EQ(initiator.phase(), Phase::Auth);
  auto after = initiator.next_request();
  ASSERT_TRUE(before.has_value());
  ASSERT_TRUE(after.has_value());
  EXPECT_EQ(*before, *after);  // outstanding request untouched
}

TEST(Handshake, UnreadableDatagramsAreDroppedSilently) {
  HandshakeConfig cfg = config_for(Mode::DhPsk);
  SeededRng rng_i(95), rng_r(96);
  InitiatorSession initiator(cfg, rng_i);
  ResponderSession responder(cfg, rng_r);

  EXPECT_FALSE(responder.on_message(to_bytes("not an exchange at all")).has_value());
  EXPECT_EQ(responder.dropped_messages(), 1u);

  auto init_request = initiator.next_request();
  ASSERT_TRUE(init_request.has_value());
  Bytes truncated(init_request->begin(), init_request->begin() + 40);
  EXPECT_FALSE(responder.on_message(truncated).has_value());
  EXPECT_EQ(responder.dropped_messages(), 2u);

  // The real request still succeeds afterwards.
  auto response = responder.on_message(*init_request);
  EXPECT_TRUE(response.has_value());
  ASSERT_TRUE(initiator.consume_response(*response));

  // A sealed request with a flipped ciphertext byte fails its tag check
  // and is dropped — and the genuine retransmission still gets through.
  auto auth_request = initiator.next_request();
  ASSERT_TRUE(auth_request.has_value());
  Bytes tampered = *auth_request;
  tampered[tampered.size() - 20] ^= 0x01;
  EXPECT_FALSE(responder.on_message(tampered).has_value());
  EXPECT_EQ(responder.dropped_messages(), 3u);
  EXPECT_NE(responder.phase(), Phase::Failed);
  auto auth_response = responder.on_message(*auth_request);
  EXPECT_TRUE(auth_response.has_value());
}

TEST(Handshake, HappyPathDirectSessionsAgreeOnEverything) {
  for (Mode mode : {Mode::DhPsk, Mode::DhCert, Mode::Qkd}) {
    HandshakeConfig cfg = config_for(mode);
    auto kms = make_kms(415, 64);
    std::unique_ptr<kms::InProcessKmsClient> ue_client, gw_client;
    if (mode == Mode::Qkd) {
      kms->register_sae(cfg.qkd.initiator_sae, 'a');
      kms->register_sae(cfg.qkd.responder_sae, 'b');
      ue_client = std::make_unique<kms::InProcessKmsClient>(kms->kme_a(), cfg.qkd.initiator_sae);
      gw_client = std::make_unique<kms::InProcessKmsClient>(kms->kme_b(), cfg.qkd.responder_sae);
    }
    SeededRng rng_i(97), rng_r(98);
    InitiatorSession initiator(cfg, rng_i, ue_client.get());
    ResponderSession responder(cfg, rng_r, gw_client.get());
    pump(initiator, responder);
    ASSERT_EQ(initiator.phase(), Phase::Established) << to_string(mode);
    ASSERT_EQ(responder.phase(), Phase::Established) << to_string(mode);
    EXPECT_EQ(initiator.session_keys(), responder.session_keys()) << to_string(mode);
    EXPECT_EQ(initiator.session_keys().children.size(), 2u);
  }
}

}  // namespace
