#include <gtest/gtest.h>

#include <random>

#include "nwulab/ike/codec.hpp"
#include "nwulab/ike/secure.hpp"
#include "nwulab/rng.hpp"

using namespace nwulab;
using namespace nwulab::ike;

namespace {

IkeMessage header_only_message() {
  IkeMessage msg;
  msg.header.initiator_spi = 0x0102030405060708ull;
  msg.header.responder_spi = 0x1112131415161718ull;
  msg.header.exchange = ExchangeType::Informational;
  msg.header.flags = kFlagInitiator;
  msg.header.message_id = 7;
  return msg;
}

TEST(Codec, HeaderOnlyMessageIsTwentyEightBytes) {
  IkeMessage msg = header_only_message();
  Bytes wire = encode_message(msg);
  ASSERT_EQ(wire.size(), 28u);
  EXPECT_EQ(wire[16], 0u);     // no first payload
  EXPECT_EQ(wire[17], 0x20u);  // version 2.0
  EXPECT_EQ(wire[18], 37u);    // INFORMATIONAL
  IkeMessage back = decode_message(wire);
  EXPECT_EQ(back, msg);
}

TEST(Codec, KeyIdNotifyEncodesToExpectedSize) {
  // Thirteen 16-byte ids in one notify: 4 generic + 4 fixed + 208 data.
  IkeMessage msg = header_only_message();
  Bytes ids(208, 0xAB);
  msg.payloads.push_back(NotifyPayload{ProtocolId::None, {}, kNotifyQkdKeyIds, ids});
  Bytes wire = encode_message(msg);
  EXPECT_EQ(wire.size(), 28u + 216u);
  IkeMessage back = decode_message(wire);
  EXPECT_EQ(back, msg);
}

TEST(Codec, RepresentativeInitMessageRoundTrips) {
  IkeMessage msg;
  msg.header.initiator_spi = 0xAABBCCDDEEFF0011ull;
  msg.header.exchange = ExchangeType::IkeSaInit;
  msg.header.flags = kFlagInitiator;

  Proposal p;
  p.protocol = ProtocolId::Ike;
  p.transforms.push_back(
      Transform{TransformType::Encr, kEncrAesCbc, {{kAttrKeyLength, 256}}});
  p.transforms.push_back(Transform{TransformType::Prf, kPrfHmacSha256, {}});
  p.transforms.push_back(Transform{TransformType::Integ, kIntegHmacSha256_128, {}});
  p.transforms.push_back(Transform{TransformType::Dh, kDhGroup14, {}});
  msg.payloads.push_back(SaPayload{{p}});
  msg.payloads.push_back(KePayload{kDhGroup14, Bytes(256, 0x42)});
  msg.payloads.push_back(NoncePayload{Bytes(32, 0x33)});
  msg.payloads.push_back(
      NotifyPayload{ProtocolId::None, {}, kNotifyFragmentationSupported, {}});

  Bytes wire = encode_message(msg);
  EXPECT_EQ(decode_message(wire), msg);
}

TEST(Codec, EveryPayloadKindRoundTrips) {
  IkeMessage msg = header_only_message();
  msg.header.exchange = ExchangeType::IkeAuth;

  Proposal esp;
  esp.protocol = ProtocolId::Esp;
  esp.spi = {1, 2, 3, 4};
  esp.transforms.push_back(
      Transform{TransformType::Encr, kEncrAesCbc, {{kAttrKeyLength, 256}}});
  esp.transforms.push_back(Transform{TransformType::Esn, kEsnNone, {}});

  IdIPayload idi;
  idi.data = to_bytes("ue.nwu-lab.example");
  IdRPayload idr;
  idr.data = to_bytes("n3iwf.nwu-lab.example");
  TsIPayload tsi;
  tsi.selectors.push_back(TrafficSelector{});
  TsRPayload tsr;
  tsr.selectors.push_back(TrafficSelector{7, 6, 443, 443, {10, 45, 0, 1}, {10, 45, 0, 9}});
  EapPayload eap;
  eap.code = EapCode::Request;
  eap.identifier = 3;
  eap.data = {254, 9, 9, 9};
  DeletePayload del;
  del.protocol = ProtocolId::Esp;
  del.spi_size = 4;
  del.spis = {{9, 9, 9, 9}, {8, 8, 8, 8}};

  msg.payloads = {SaPayload{{esp}},
                  idi,
                  idr,
                  CertPayload{kCertEncodingX509Signature, Bytes(40, 0xC)},
                  CertReqPayload{kCertEncodingX509Signature, Bytes(20, 0xD)},
                  AuthPayload{2, Bytes(32, 0xE)},
                  NoncePayload{Bytes(24, 0xF)},
                  NotifyPayload{ProtocolId::Esp, {1, 2, 3, 4}, kNotifyNoProposalChosen, {}},
                  del,
                  VendorIdPayload{to_bytes("nwu-lab")},
                  tsi,
                  tsr,
                  eap};
  Bytes wire = encode_message(msg);
  EXPECT_EQ(decode_message(wire), msg);
}

TEST(Codec, RejectsTruncationAnywhere) {
  IkeMessage msg = header_only_message();
  msg.payloads.push_back(NoncePayload{Bytes(32, 0x33)});
  Bytes wire = encode_message(msg);
  for (size_t keep = 0; keep < wire.size(); ++keep) {
    Bytes cut(wire.begin(), wire.begin() + keep);
    EXPECT_THROW(decode_message(cut), ParseError) << "kept " << keep << " bytes";
  }
}

TEST(Codec, RejectsBadVersionAndExchange) {
  Bytes wire = encode_message(header_only_message());
  Bytes bad_version = wire;
  bad_version[17] = 0x10;
  try {
    decode_message(bad_version);
    FAIL() << "version 1.0 must be refused";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 17u);
  }
  Bytes bad_exchange = wire;
  bad_exchange[18] = 99;
  try {
    decode_message(bad_exchange);
    FAIL() << "unknown exchange must be refused";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 18u);
  }
}

TEST(Codec, RejectsLengthFieldLies) {
  IkeMessage msg = header_only_message();
  msg.payloads.push_back(NoncePayload{Bytes(32, 0x33)});
  Bytes wire = encode_message(msg);

  Bytes longer = wire;
  longer.push_back(0);  // trailing byte the length field does not cover
  EXPECT_THROW(decode_message(longer), ParseError);

  Bytes lying = wire;
  lying[27] += 1;  // header length beyond the buffer
  EXPECT_THROW(decode_message(lying), ParseError);

  Bytes payload_lies = wire;
  payload_lies[31] += 4;  // nonce payload claims more than the message holds
  EXPECT_THROW(decode_message(payload_lies), ParseError);

  Bytes tiny_payload = wire;
  tiny_payload[31] = 3;  // below the generic header's own size
  EXPECT_THROW(decode_message(tiny_payload), ParseError);
}

TEST(Codec, UnknownPayloadSkippedUnlessCritical) {
  IkeMessage msg = header_only_message();
  msg.payloads.push_back(NoncePayload{Bytes(16, 0x33)});
  Bytes wire = encode_message(msg);

  // Splice an unrecognized payload (type 47) ahead of the nonce.
  Bytes spliced;
  spliced.insert(spliced.end(), wire.begin(), wire.begin() + 28);
  spliced[16] = 47;
  Bytes unknown = {40 /*next: nonce*/, 0x00, 0x00, 0x08, 0xDE, 0xAD, 0xBE, 0xEF};
  spliced.insert(spliced.end(), unknown.begin(), unknown.end());
  spliced.insert(spliced.end(), wire.begin() + 28, wire.end());
  size_t total = spliced.size();
  spliced[24] = uint8_t(total >> 24);
  spliced[25] = uint8_t(total >> 16);
  spliced[26] = uint8_t(total >> 8);
  spliced[27] = uint8_t(total);

  IkeMessage back = decode_message(spliced);
  ASSERT_EQ(back.payloads.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<NoncePayload>(back.payloads[0]));

  spliced[29] = 0x80;  // same payload, critical bit set
  EXPECT_THROW(decode_message(spliced), ParseError);
}

TEST(Codec, NonceLengthBoundsEnforced) {
  IkeMessage msg = header_only_message();
  msg.payloads.push_back(NoncePayload{Bytes(15, 1)});
  EXPECT_THROW(encode_message(msg), EncodeError);
  msg.payloads.back() = NoncePayload{Bytes(257, 1)};
  EXPECT_THROW(encode_message(msg), EncodeError);
}

// --- Randomized structural coverage ----------------------------------------

struct Gen {
  std::mt19937_64 rng;

  explicit Gen(uint64_t seed) : rng(seed) {}

  size_t pick(size_t lo, size_t hi) {  // inclusive
    return std::uniform_int_distribution<size_t>(lo, hi)(rng);
  }
  Bytes blob(size_t lo, size_t hi) {
    Bytes out(pick(lo, hi));
    for (auto& b : out) b = uint8_t(pick(0, 255));
    return out;
  }

  Payload payload() {
    switch (pick(0, 10)) {
      case 0: {
        Proposal p;
        p.number = uint8_t(pick(1, 3));
        bool esp = pick(0, 1) == 1;
        p.protocol = esp ? ProtocolId::Esp : ProtocolId::Ike;
        if (esp) p.spi = blob(4, 4);
        size_t n = pick(1, 4);
        for (size_t i = 0; i < n; ++i) {
          Transform t;
          t.type = static_cast<TransformType>(pick(1, 5));
          t.id = uint16_t(pick(0, 300));
          if (pick(0, 2) == 0) {
            t.attributes.push_back(
                TransformAttribute{uint16_t(pick(0, 0x3fff)), uint16_t(pick(0, 0xffff))});
          }
          p.transforms.push_back(std::move(t));
        }
        return SaPayload{{p}};
      }
      case 1: return KePayload{uint16_t(pick(0, 40)), blob(1, 64)};
      case 2: {
        IdIPayload id;
        id.id_type = kIdFqdn;
        id.data = blob(1, 24);
        return id;
      }
      case 3: return AuthPayload{uint8_t(pick(0, 14)), blob(1, 72)};
      case 4: return NoncePayload{blob(16, 64)};
      case 5: {
        NotifyPayload n;
        n.protocol = pick(0, 1) ? ProtocolId::Esp : ProtocolId::None;
        if (n.protocol == ProtocolId::Esp) n.spi = blob(4, 4);
        n.type = uint16_t(pick(0, 50000));
        n.data = blob(0, 48);
        return n;
      }
      case 6: {
        DeletePayload d;
        d.protocol = ProtocolId::Esp;
        d.spi_size = 4;
        size_t n = pick(0, 3);
        for (size_t i = 0; i < n; ++i) d.spis.push_back(blob(4, 4));
        return d;
      }
      case 7: return VendorIdPayload{blob(0, 32)};
      case 8: {
        TsIPayload ts;
        size_t n = pick(1, 3);
        for (size_t i = 0; i < n; ++i) {
          TrafficSelector sel;
          sel.ip_protocol = uint8_t(pick(0, 255));
          sel.start_port = uint16_t(pick(0, 0xffff));
          sel.end_port = uint16_t(pick(sel.start_port, 0xffff));
          sel.start_addr = blob(4, 4);
          sel.end_addr = blob(4, 4);
          ts.selectors.push_back(sel);
        }
        return ts;
      }
      case 9: {
        EapPayload e;
        switch (pick(0, 3)) {
          case 0: e.code = EapCode::Request; break;
          case 1: e.code = EapCode::Response; break;
          case 2: e.code = EapCode::Success; break;
          default: e.code = EapCode::Failure; break;
        }
        e.identifier = uint8_t(pick(0, 255));
        if (e.code == EapCode::Request || e.code == EapCode::Response) e.data = blob(1, 40);
        return e;
      }
      default: return CertPayload{kCertEncodingX509Signature, blob(1, 64)};
    }
  }

  IkeMessage message() {
    IkeMessage msg;
    msg.header.initiator_spi = rng();
    msg.header.responder_spi = rng();
    msg.header.exchange = static_cast<ExchangeType>(pick(34, 37));
    msg.header.flags = pick(0, 1) ? kFlagInitiator : kFlagResponse;
    msg.header.message_id = uint32_t(rng());
    size_t n = pick(0, 6);
    for (size_t i = 0; i < n; ++i) msg.payloads.push_back(payload());
    return msg;
  }
};

TEST(Codec, TenThousandGeneratedMessagesRoundTrip) {
  Gen gen(2024);
  for (int i = 0; i < 10000; ++i) {
    IkeMessage msg = gen.message();
    Bytes wire = encode_message(msg);
    IkeMessage back = decode_message(wire);
    ASSERT_EQ(back, msg) << "iteration " << i;
  }
}

TEST(Codec, TenThousandMutatedMessagesNeverCrash) {
  Gen gen(4048);
  IkeMessage msg = gen.message();
  while (msg.payloads.empty()) msg = gen.message();
  Bytes base = encode_message(msg);

  size_t parsed = 0, refused = 0;
  for (int i = 0; i < 10000; ++i) {
    Bytes mutated = base;
    switch (gen.pick(0, 3)) {
      case 0:  // flip bits in one byte
        mutated[gen.pick(0, mutated.size() - 1)] ^= uint8_t(gen.pick(1, 255));
        break;
      case 1:  // truncate
        mutated.resize(gen.pick(0, mutated.size()));
        break;
      case 2:  // extend with junk
        for (size_t n = gen.pick(1, 16); n > 0; --n) mutated.push_back(uint8_t(gen.pick(0, 255)));
        break;
      default:  // multiple byte flips
        for (int k = 0; k < 4; ++k) {
          mutated[gen.pick(0, mutated.size() - 1)] ^= uint8_t(gen.pick(1, 255));
        }
        break;
    }
    try {
      IkeMessage back = decode_message(mutated);
      ++parsed;                              // mutation kept it valid
      (void)encode_message(back);            // then it must re-encode
    } catch (const ParseError&) {
      ++refused;                             // rejected cleanly
    }
  }
  EXPECT_EQ(parsed + refused, 10000u);
  EXPECT_GT(refused, 0u);
}

// --- Encrypted container -----------------------------------------------------

TEST(Codec, SealedMessageRoundTripsAndAuthenticates) {
  SeededRng rng(5);
  SaDirectionKeys keys{rng.bytes(32), rng.bytes(32)};

  IkeHeader header;
  header.initiator_spi = 0xA1;
  header.responder_spi = 0xB2;
  header.exchange = ExchangeType::IkeAuth;
  header.flags = kFlagInitiator;
  header.message_id = 1;

  IdIPayload idi;
  idi.data = to_bytes("ue.nwu-lab.example");
  std::vector<Payload> inner = {idi, NoncePayload{Bytes(32, 0x11)}};

  Bytes wire = seal_message(header, inner, keys, rng);
  OpenedMessage opened = open_message(wire, keys);
  EXPECT_EQ(opened.header, header);
  ASSERT_EQ(opened.payloads.size(), 2u);
  EXPECT_EQ(opened.payloads[0], inner[0]);
  EXPECT_EQ(opened.payloads[1], inner[1]);

  // Any flipped bit in header or body must break the integrity check.
  for (size_t off : {size_t(0), size_t(20), wire.size() / 2, wire.size() - 1}) {
    Bytes tampered = wire;
    tampered[off] ^= 0x01;
    EXPECT_ANY_THROW(open_message(tampered, keys)) << "offset " << off;
  }

  SaDirectionKeys wrong{rng.bytes(32), rng.bytes(32)};
  EXPECT_THROW(open_message(wire, wrong), IntegrityError);

  // Right integrity key, wrong cipher key: the tag holds but the
  // decrypted bytes are garbage and must be rejected one way or another.
  SaDirectionKeys wrong_enc{rng.bytes(32), keys.integ};
  EXPECT_ANY_THROW(open_message(wire, wrong_enc));
}

TEST(Codec, SealedPayloadPlacementRules) {
  SeededRng rng(6);
  SaDirectionKeys keys{rng.bytes(32), rng.bytes(32)};
  SkPayload sk = seal(Bytes(16, 1), PayloadType::Nonce, keys, Bytes{}, rng);

  // Nothing may follow the encrypted container in a message.
  IkeMessage msg;
  msg.header.exchange = ExchangeType::IkeAuth;
  msg.header.flags = kFlagInitiator;
  msg.payloads = {Payload{sk}, Payload{NoncePayload{Bytes(16, 1)}}};
  EXPECT_THROW(encode_message(msg), EncodeError);
  msg.payloads = {Payload{sk}};
  EXPECT_NO_THROW(encode_message(msg));

  // And no encrypted container may nest inside another.
  std::vector<Payload> nested = {Payload{sk}};
  EXPECT_THROW(encode_payload_chain(nested), EncodeError);
}

}  // namespace
