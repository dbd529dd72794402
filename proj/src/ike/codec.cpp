#include "nwulab/ike/codec.hpp"

#include <limits>

namespace nwulab::ike {

namespace {

constexpr uint8_t kCriticalBit = 0x80;
constexpr size_t kMaxPayloadLen = 0xffff;

// ---------------------------------------------------------------------------
// Decoding

/// Bounds-checked reader. `base` offsets error positions so failures in a
/// payload body report positions in the whole input.
struct Cursor {
  ByteView in;
  size_t base = 0;
  size_t pos = 0;
  int payload_index = -1;

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what, base + pos, payload_index);
  }
  size_t remaining() const { return in.size() - pos; }
  void need(size_t n, const char* what) const {
    if (remaining() < n) fail(std::string("truncated ") + what);
  }
  uint8_t u8(const char* what) {
    need(1, what);
    return in[pos++];
  }
  uint16_t u16(const char* what) {
    need(2, what);
    uint16_t v = read_u16(in, pos);
    pos += 2;
    return v;
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = read_u32(in, pos);
    pos += 4;
    return v;
  }
  uint64_t u64(const char* what) {
    need(8, what);
    uint64_t v = read_u64(in, pos);
    pos += 8;
    return v;
  }
  ByteView view(size_t n, const char* what) {
    need(n, what);
    ByteView v = in.subspan(pos, n);
    pos += n;
    return v;
  }
  Bytes take(size_t n, const char* what) {
    ByteView v = view(n, what);
    return Bytes(v.begin(), v.end());
  }
  void skip(size_t n, const char* what) {
    need(n, what);
    pos += n;
  }
};

Cursor body_cursor(const Cursor& outer, ByteView body, int payload_index) {
  return Cursor{body, outer.base + outer.pos - body.size(), 0, payload_index};
}

SaPayload decode_sa(Cursor c) {
  SaPayload sa;
  while (true) {
    uint8_t last_more = c.u8("proposal header");
    c.u8("proposal header");  // reserved
    uint16_t plen = c.u16("proposal header");
    if (plen < 8) c.fail("proposal length below its own header");
    size_t proposal_end = c.pos - 4 + plen;
    if (proposal_end > c.in.size()) c.fail("proposal length past the payload");

    Proposal p;
    p.number = c.u8("proposal header");
    uint8_t proto = c.u8("proposal header");
    if (proto < 1 || proto > 3) c.fail("bad protocol id in proposal");
    p.protocol = static_cast<ProtocolId>(proto);
    uint8_t spi_size = c.u8("proposal header");
    uint8_t num_transforms = c.u8("proposal header");
    if (c.pos + spi_size > proposal_end) c.fail("SPI past the proposal");
    p.spi = c.take(spi_size, "proposal SPI");

    for (size_t t = 0; t < num_transforms; ++t) {
      uint8_t t_last = c.u8("transform header");
      bool is_last = t + 1 == num_transforms;
      if (t_last != (is_last ? 0 : 3)) c.fail("bad transform chain marker");
      c.u8("transform header");  // reserved
      uint16_t t_len = c.u16("transform header");
      if (t_len < 8) c.fail("transform length below its own header");
      size_t t_end = c.pos - 4 + t_len;
      if (t_end > proposal_end) c.fail("transform length past the proposal");

      Transform tr;
      tr.type = static_cast<TransformType>(c.u8("transform header"));
      c.u8("transform header");  // reserved
      tr.id = c.u16("transform header");
      while (c.pos < t_end) {
        uint16_t a_type = c.u16("transform attribute");
        if (!(a_type & 0x8000)) c.fail("length-form transform attribute not supported");
        TransformAttribute attr;
        attr.type = a_type & 0x7fff;
        attr.value = c.u16("transform attribute");
        if (c.pos > t_end) c.fail("attribute past the transform");
        tr.attributes.push_back(attr);
      }
      p.transforms.push_back(std::move(tr));
    }
    if (c.pos != proposal_end) c.fail("proposal length does not match its contents");
    sa.proposals.push_back(std::move(p));

    if (last_more == 0) break;
    if (last_more != 2) c.fail("bad proposal chain marker");
  }
  if (c.pos != c.in.size()) c.fail("trailing bytes after the last proposal");
  return sa;
}

KePayload decode_ke(Cursor c) {
  KePayload ke;
  ke.group = c.u16("key exchange header");
  c.u16("key exchange header");  // reserved
  ke.data = c.take(c.remaining(), "key exchange data");
  return ke;
}

IdBody decode_id(Cursor c) {
  IdBody id;
  id.id_type = c.u8("identification header");
  c.skip(3, "identification header");
  id.data = c.take(c.remaining(), "identification data");
  return id;
}

AuthPayload decode_auth(Cursor c) {
  AuthPayload a;
  a.method = c.u8("auth header");
  c.skip(3, "auth header");
  a.data = c.take(c.remaining(), "auth data");
  return a;
}

NoncePayload decode_nonce(Cursor c) {
  if (c.remaining() < 16 || c.remaining() > 256) c.fail("nonce length out of range");
  return NoncePayload{c.take(c.remaining(), "nonce")};
}

NotifyPayload decode_notify(Cursor c) {
  NotifyPayload n;
  uint8_t proto = c.u8("notify header");
  if (proto > 3) c.fail("bad protocol id in notify");
  n.protocol = static_cast<ProtocolId>(proto);
  uint8_t spi_size = c.u8("notify header");
  n.type = c.u16("notify header");
  n.spi = c.take(spi_size, "notify SPI");
  n.data = c.take(c.remaining(), "notify data");
  return n;
}

DeletePayload decode_delete(Cursor c) {
  DeletePayload d;
  uint8_t proto = c.u8("delete header");
  if (proto < 1 || proto > 3) c.fail("bad protocol id in delete");
  d.protocol = static_cast<ProtocolId>(proto);
  d.spi_size = c.u8("delete header");
  uint16_t count = c.u16("delete header");
  if (c.remaining() != static_cast<size_t>(count) * d.spi_size) {
    c.fail("delete SPI list does not match its declared size");
  }
  for (uint16_t i = 0; i < count; ++i) d.spis.push_back(c.take(d.spi_size, "delete SPI"));
  return d;
}

TsBody decode_ts(Cursor c) {
  TsBody ts;
  uint8_t count = c.u8("traffic selector header");
  c.skip(3, "traffic selector header");
  for (uint8_t i = 0; i < count; ++i) {
    TrafficSelector sel;
    sel.ts_type = c.u8("traffic selector");
    if (sel.ts_type != 7) c.fail("only IPv4 range selectors are supported");
    sel.ip_protocol = c.u8("traffic selector");
    uint16_t sel_len = c.u16("traffic selector");
    if (sel_len != 16) c.fail("bad IPv4 selector length");
    sel.start_port = c.u16("traffic selector");
    sel.end_port = c.u16("traffic selector");
    sel.start_addr = c.take(4, "traffic selector");
    sel.end_addr = c.take(4, "traffic selector");
    ts.selectors.push_back(std::move(sel));
  }
  if (c.pos != c.in.size()) c.fail("trailing bytes after the last selector");
  return ts;
}

SkPayload decode_sk(Cursor c, PayloadType first_inner) {
  SkPayload sk;
  sk.first_inner = first_inner;
  if (c.remaining() < 16 + 16 + 16) c.fail("encrypted payload too short");
  size_t ct_len = c.remaining() - 32;
  if (ct_len % 16 != 0) c.fail("ciphertext not a whole number of blocks");
  sk.iv = c.take(16, "IV");
  sk.ciphertext = c.take(ct_len, "ciphertext");
  sk.tag = c.take(16, "integrity tag");
  return sk;
}

EapPayload decode_eap(Cursor c) {
  EapPayload e;
  uint8_t code = c.u8("EAP header");
  if (code < 1 || code > 4) c.fail("bad EAP code");
  e.code = static_cast<EapCode>(code);
  e.identifier = c.u8("EAP header");
  uint16_t len = c.u16("EAP header");
  if (len != c.in.size()) c.fail("EAP length does not match the payload");
  if ((e.code == EapCode::Success || e.code == EapCode::Failure) && len != 4) {
    c.fail("EAP success/failure must be empty");
  }
  e.data = c.take(c.remaining(), "EAP data");
  return e;
}

CertPayload decode_cert(Cursor c) {
  CertPayload p;
  p.encoding = c.u8("certificate header");
  p.data = c.take(c.remaining(), "certificate data");
  return p;
}

CertReqPayload decode_certreq(Cursor c) {
  CertReqPayload p;
  p.encoding = c.u8("certificate request header");
  p.data = c.take(c.remaining(), "certificate request data");
  return p;
}

std::vector<Payload> decode_chain(Cursor& c, PayloadType first) {
  std::vector<Payload> out;
  uint8_t cur = static_cast<uint8_t>(first);
  while (cur != 0) {
    c.payload_index = static_cast<int>(out.size());
    size_t header_pos = c.pos;
    uint8_t next = c.u8("payload header");
    uint8_t flags = c.u8("payload header");
    uint16_t plen = c.u16("payload header");
    if (plen < kGenericHeaderLen) c.fail("payload length below its own header");
    ByteView body = c.view(plen - kGenericHeaderLen, "payload body");
    Cursor bc = body_cursor(c, body, c.payload_index);

    switch (static_cast<PayloadType>(cur)) {
      case PayloadType::Sa: out.emplace_back(decode_sa(bc)); break;
      case PayloadType::Ke: out.emplace_back(decode_ke(bc)); break;
      case PayloadType::IdI: out.emplace_back(IdIPayload{decode_id(bc)}); break;
      case PayloadType::IdR: out.emplace_back(IdRPayload{decode_id(bc)}); break;
      case PayloadType::Cert: out.emplace_back(decode_cert(bc)); break;
      case PayloadType::CertReq: out.emplace_back(decode_certreq(bc)); break;
      case PayloadType::Auth: out.emplace_back(decode_auth(bc)); break;
      case PayloadType::Nonce: out.emplace_back(decode_nonce(bc)); break;
      case PayloadType::Notify: out.emplace_back(decode_notify(bc)); break;
      case PayloadType::Delete: out.emplace_back(decode_delete(bc)); break;
      case PayloadType::VendorId:
        out.emplace_back(VendorIdPayload{bc.take(bc.remaining(), "vendor id")});
        break;
      case PayloadType::TsI: out.emplace_back(TsIPayload{decode_ts(bc)}); break;
      case PayloadType::TsR: out.emplace_back(TsRPayload{decode_ts(bc)}); break;
      case PayloadType::Eap: out.emplace_back(decode_eap(bc)); break;
      case PayloadType::Sk: {
        // The container's next-payload field names the first payload
        // inside it, and nothing may follow the container itself.
        out.emplace_back(decode_sk(bc, static_cast<PayloadType>(next)));
        if (c.pos != c.in.size()) {
          c.payload_index = -1;
          c.fail("payloads after the encrypted container");
        }
        return out;
      }
      default:
        if (flags & kCriticalBit) {
          c.pos = header_pos;
          c.fail("unknown critical payload type " + std::to_string(cur));
        }
        break;  // unknown but not critical: skip the body
    }
    cur = next;
  }
  c.payload_index = -1;
  if (c.pos != c.in.size()) c.fail("trailing bytes after the last payload");
  return out;
}

// ---------------------------------------------------------------------------
// Encoding

void encode_sa(Bytes& out, const SaPayload& sa) {
  if (sa.proposals.empty()) throw EncodeError("SA payload needs at least one proposal");
  for (size_t i = 0; i < sa.proposals.size(); ++i) {
    const Proposal& p = sa.proposals[i];
    if (p.spi.size() > 0xff) throw EncodeError("proposal SPI too long");
    if (p.transforms.size() > 0xff) throw EncodeError("too many transforms in a proposal");

    size_t plen = 8 + p.spi.size();
    for (const Transform& t : p.transforms) plen += 8 + 4 * t.attributes.size();
    if (plen > kMaxPayloadLen) throw EncodeError("proposal too long");

    put_u8(out, i + 1 == sa.proposals.size() ? 0 : 2);
    put_u8(out, 0);
    put_u16(out, static_cast<uint16_t>(plen));
    put_u8(out, p.number);
    put_u8(out, static_cast<uint8_t>(p.protocol));
    put_u8(out, static_cast<uint8_t>(p.spi.size()));
    put_u8(out, static_cast<uint8_t>(p.transforms.size()));
    put_bytes(out, p.spi);

    for (size_t t = 0; t < p.transforms.size(); ++t) {
      const Transform& tr = p.transforms[t];
      put_u8(out, t + 1 == p.transforms.size() ? 0 : 3);
      put_u8(out, 0);
      put_u16(out, static_cast<uint16_t>(8 + 4 * tr.attributes.size()));
      put_u8(out, static_cast<uint8_t>(tr.type));
      put_u8(out, 0);
      put_u16(out, tr.id);
      for (const TransformAttribute& a : tr.attributes) {
        if (a.type & 0x8000) throw EncodeError("attribute type uses the format bit");
        put_u16(out, a.type | 0x8000);
        put_u16(out, a.value);
      }
    }
  }
}

void encode_ts(Bytes& out, const TsBody& ts) {
  if (ts.selectors.empty() || ts.selectors.size() > 0xff) {
    throw EncodeError("traffic selector count out of range");
  }
  put_u8(out, static_cast<uint8_t>(ts.selectors.size()));
  put_u8(out, 0);
  put_u16(out, 0);
  for (const TrafficSelector& sel : ts.selectors) {
    if (sel.ts_type != 7 || sel.start_addr.size() != 4 || sel.end_addr.size() != 4) {
      throw EncodeError("only IPv4 range selectors are supported");
    }
    put_u8(out, sel.ts_type);
    put_u8(out, sel.ip_protocol);
    put_u16(out, 16);
    put_u16(out, sel.start_port);
    put_u16(out, sel.end_port);
    put_bytes(out, sel.start_addr);
    put_bytes(out, sel.end_addr);
  }
}

struct BodyEncoder {
  Bytes& out;

  void operator()(const SaPayload& p) { encode_sa(out, p); }
  void operator()(const KePayload& p) {
    put_u16(out, p.group);
    put_u16(out, 0);
    put_bytes(out, p.data);
  }
  void operator()(const IdIPayload& p) { id(p); }
  void operator()(const IdRPayload& p) { id(p); }
  void operator()(const CertPayload& p) {
    put_u8(out, p.encoding);
    put_bytes(out, p.data);
  }
  void operator()(const CertReqPayload& p) {
    put_u8(out, p.encoding);
    put_bytes(out, p.data);
  }
  void operator()(const AuthPayload& p) {
    put_u8(out, p.method);
    put_u8(out, 0);
    put_u16(out, 0);
    put_bytes(out, p.data);
  }
  void operator()(const NoncePayload& p) {
    if (p.nonce.size() < 16 || p.nonce.size() > 256) throw EncodeError("nonce length out of range");
    put_bytes(out, p.nonce);
  }
  void operator()(const NotifyPayload& p) {
    if (p.spi.size() > 0xff) throw EncodeError("notify SPI too long");
    put_u8(out, static_cast<uint8_t>(p.protocol));
    put_u8(out, static_cast<uint8_t>(p.spi.size()));
    put_u16(out, p.type);
    put_bytes(out, p.spi);
    put_bytes(out, p.data);
  }
  void operator()(const DeletePayload& p) {
    if (p.spis.size() > 0xffff) throw EncodeError("too many SPIs in delete");
    put_u8(out, static_cast<uint8_t>(p.protocol));
    put_u8(out, p.spi_size);
    put_u16(out, static_cast<uint16_t>(p.spis.size()));
    for (const Bytes& spi : p.spis) {
      if (spi.size() != p.spi_size) throw EncodeError("delete SPI size mismatch");
      put_bytes(out, spi);
    }
  }
  void operator()(const VendorIdPayload& p) { put_bytes(out, p.data); }
  void operator()(const TsIPayload& p) { encode_ts(out, p); }
  void operator()(const TsRPayload& p) { encode_ts(out, p); }
  void operator()(const SkPayload& p) {
    if (p.iv.size() != 16 || p.tag.size() != 16) throw EncodeError("bad IV or tag length");
    if (p.ciphertext.empty() || p.ciphertext.size() % 16 != 0) {
      throw EncodeError("ciphertext must be whole blocks");
    }
    put_bytes(out, p.iv);
    put_bytes(out, p.ciphertext);
    put_bytes(out, p.tag);
  }
  void operator()(const EapPayload& p) {
    if ((p.code == EapCode::Success || p.code == EapCode::Failure) && !p.data.empty()) {
      throw EncodeError("EAP success/failure carries no data");
    }
    if (4 + p.data.size() > 0xffff) throw EncodeError("EAP message too long");
    put_u8(out, static_cast<uint8_t>(p.code));
    put_u8(out, p.identifier);
    put_u16(out, static_cast<uint16_t>(4 + p.data.size()));
    put_bytes(out, p.data);
  }

 private:
  void id(const IdBody& body) {
    put_u8(out, body.id_type);
    put_u8(out, 0);
    put_u16(out, 0);
    put_bytes(out, body.data);
  }
};

void encode_chain(Bytes& out, const std::vector<Payload>& payloads) {
  for (size_t i = 0; i < payloads.size(); ++i) {
    const Payload& p = payloads[i];
    uint8_t next;
    if (const auto* sk = std::get_if<SkPayload>(&p)) {
      if (i + 1 != payloads.size()) throw EncodeError("encrypted container must come last");
      next = static_cast<uint8_t>(sk->first_inner);
    } else {
      next = i + 1 < payloads.size() ? static_cast<uint8_t>(payload_type(payloads[i + 1])) : 0;
    }
    Bytes body = encode_payload_body(p);
    if (kGenericHeaderLen + body.size() > kMaxPayloadLen) throw EncodeError("payload too long");
    put_u8(out, next);
    put_u8(out, 0);
    put_u16(out, static_cast<uint16_t>(kGenericHeaderLen + body.size()));
    put_bytes(out, body);
  }
}

}  // namespace

PayloadType payload_type(const Payload& p) {
  struct Visitor {
    PayloadType operator()(const SaPayload&) { return PayloadType::Sa; }
    PayloadType operator()(const KePayload&) { return PayloadType::Ke; }
    PayloadType operator()(const IdIPayload&) { return PayloadType::IdI; }
    PayloadType operator()(const IdRPayload&) { return PayloadType::IdR; }
    PayloadType operator()(const CertPayload&) { return PayloadType::Cert; }
    PayloadType operator()(const CertReqPayload&) { return PayloadType::CertReq; }
    PayloadType operator()(const AuthPayload&) { return PayloadType::Auth; }
    PayloadType operator()(const NoncePayload&) { return PayloadType::Nonce; }
    PayloadType operator()(const NotifyPayload&) { return PayloadType::Notify; }
    PayloadType operator()(const DeletePayload&) { return PayloadType::Delete; }
    PayloadType operator()(const VendorIdPayload&) { return PayloadType::VendorId; }
    PayloadType operator()(const TsIPayload&) { return PayloadType::TsI; }
    PayloadType operator()(const TsRPayload&) { return PayloadType::TsR; }
    PayloadType operator()(const SkPayload&) { return PayloadType::Sk; }
    PayloadType operator()(const EapPayload&) { return PayloadType::Eap; }
  };
  return std::visit(Visitor{}, p);
}

Bytes encode_payload_body(const Payload& p) {
  Bytes out;
  std::visit(BodyEncoder{out}, p);
  return out;
}

Bytes encode_id_body(const IdBody& id) {
  Bytes out;
  put_u8(out, id.id_type);
  put_u8(out, 0);
  put_u16(out, 0);
  put_bytes(out, id.data);
  return out;
}

Bytes encode_payload_chain(const std::vector<Payload>& payloads) {
  for (const Payload& p : payloads) {
    if (std::holds_alternative<SkPayload>(p)) {
      throw EncodeError("encrypted container cannot nest");
    }
  }
  Bytes out;
  encode_chain(out, payloads);
  return out;
}

std::vector<Payload> decode_payload_chain(ByteView data, PayloadType first) {
  Cursor c{data, 0, 0, -1};
  return decode_chain(c, first);
}

Bytes encode_message(const IkeMessage& msg) {
  Bytes out;
  out.reserve(kHeaderLen + 64 * msg.payloads.size());
  put_u64(out, msg.header.initiator_spi);
  put_u64(out, msg.header.responder_spi);
  put_u8(out, msg.payloads.empty()
                  ? 0
                  : static_cast<uint8_t>(payload_type(msg.payloads.front())));
  put_u8(out, kIkeVersion);
  put_u8(out, static_cast<uint8_t>(msg.header.exchange));
  put_u8(out, msg.header.flags);
  put_u32(out, msg.header.message_id);
  put_u32(out, 0);  // patched below
  encode_chain(out, msg.payloads);
  if (out.size() > std::numeric_limits<uint32_t>::max()) throw EncodeError("message too long");
  out[24] = static_cast<uint8_t>(out.size() >> 24);
  out[25] = static_cast<uint8_t>(out.size() >> 16);
  out[26] = static_cast<uint8_t>(out.size() >> 8);
  out[27] = static_cast<uint8_t>(out.size());
  return out;
}

IkeMessage decode_message(ByteView wire) {
  Cursor c{wire, 0, 0, -1};
  c.need(kHeaderLen, "message header");
  IkeMessage msg;
  msg.header.initiator_spi = c.u64("header");
  msg.header.responder_spi = c.u64("header");
  uint8_t first = c.u8("header");
  uint8_t version = c.u8("header");
  if (version != kIkeVersion) {
    throw ParseError("unsupported version " + std::to_string(version), 17);
  }
  uint8_t exchange = c.u8("header");
  if (exchange < static_cast<uint8_t>(ExchangeType::IkeSaInit) ||
      exchange > static_cast<uint8_t>(ExchangeType::Informational)) {
    throw ParseError("unknown exchange type " + std::to_string(exchange), 18);
  }
  msg.header.exchange = static_cast<ExchangeType>(exchange);
  msg.header.flags = c.u8("header");
  msg.header.message_id = c.u32("header");
  uint32_t length = c.u32("header");
  if (length != wire.size()) {
    throw ParseError("header length " + std::to_string(length) + " does not match the buffer",
                     24);
  }
  msg.payloads = decode_chain(c, static_cast<PayloadType>(first));
  return msg;
}

}  // namespace nwulab::ike
