#include "mqtt/packet.hpp"

#include "common/error.hpp"

namespace fieldcam::mqtt {

std::string_view to_string(PacketType type) {
  switch (type) {
    case PacketType::Connect: return "CONNECT";
    case PacketType::Connack: return "CONNACK";
    case PacketType::Publish: return "PUBLISH";
    case PacketType::Puback: return "PUBACK";
    case PacketType::Pubrec: return "PUBREC";
    case PacketType::Pubrel: return "PUBREL";
    case PacketType::Pubcomp: return "PUBCOMP";
    case PacketType::Subscribe: return "SUBSCRIBE";
    case PacketType::Suback: return "SUBACK";
    case PacketType::Pingreq: return "PINGREQ";
    case PacketType::Pingresp: return "PINGRESP";
    case PacketType::Disconnect: return "DISCONNECT";
  }
  return "?";
}

ControlPacket ControlPacket::connect(std::string client_id, std::uint16_t keep_alive) {
  ControlPacket p;
  p.type = PacketType::Connect;
  p.client_id = std::move(client_id);
  p.keep_alive = keep_alive;
  return p;
}

ControlPacket ControlPacket::connack(std::uint8_t return_code, bool session_present) {
  ControlPacket p;
  p.type = PacketType::Connack;
  p.return_code = return_code;
  p.session_present = session_present;
  return p;
}

ControlPacket ControlPacket::publish(std::string topic, Bytes payload, QoS qos,
                                     std::uint16_t packet_id, bool dup, bool retain) {
  ControlPacket p;
  p.type = PacketType::Publish;
  p.topic = std::move(topic);
  p.payload = std::move(payload);
  p.qos = qos;
  p.packet_id = packet_id;
  p.dup = dup;
  p.retain = retain;
  return p;
}

ControlPacket ControlPacket::ack(PacketType type, std::uint16_t packet_id) {
  ControlPacket p;
  p.type = type;
  p.packet_id = packet_id;
  return p;
}

ControlPacket ControlPacket::subscribe(std::uint16_t packet_id, std::vector<TopicRequest> topics) {
  ControlPacket p;
  p.type = PacketType::Subscribe;
  p.packet_id = packet_id;
  p.subscriptions = std::move(topics);
  return p;
}

ControlPacket ControlPacket::suback(std::uint16_t packet_id, std::vector<std::uint8_t> granted) {
  ControlPacket p;
  p.type = PacketType::Suback;
  p.packet_id = packet_id;
  p.granted = std::move(granted);
  return p;
}

ControlPacket ControlPacket::simple(PacketType type) {
  ControlPacket p;
  p.type = type;
  return p;
}

Bytes encode_remaining_length(std::uint32_t n) {
  if (n > kMaxRemainingLength)
    fail(ErrorCode::LengthOverflow, "remaining length " + std::to_string(n) + " exceeds 268435455");
  Bytes out;
  do {
    std::uint8_t digit = n % 128;
    n /= 128;
    if (n > 0) digit |= 0x80;
    out.push_back(digit);
  } while (n > 0);
  return out;
}

std::optional<RemainingLength> decode_remaining_length(ByteView in) {
  std::uint32_t value = 0;
  std::uint32_t multiplier = 1;
  for (std::size_t i = 0; i < 4; ++i) {
    if (i >= in.size()) return std::nullopt;
    const std::uint8_t b = in[i];
    value += (b & 0x7f) * multiplier;
    if ((b & 0x80) == 0) return RemainingLength{value, i + 1};
    multiplier *= 128;
  }
  fail(ErrorCode::MalformedPacket, "remaining length uses more than four bytes");
}

namespace {

[[noreturn]] void malformed(const std::string& why) { fail(ErrorCode::MalformedPacket, why); }

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v & 0xff));
  }
  void binary(ByteView data) {
    if (data.size() > 0xffff) fail(ErrorCode::LengthOverflow, "string field longer than 65535 bytes");
    u16(static_cast<std::uint16_t>(data.size()));
    raw(data);
  }
  void str(std::string_view s) { binary(as_bytes(s)); }
  void raw(ByteView data) { out_.insert(out_.end(), data.begin(), data.end()); }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

class Reader {
 public:
  explicit Reader(ByteView in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    const auto v = static_cast<std::uint16_t>(in_[pos_] << 8 | in_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  Bytes binary() {
    const std::size_t n = u16();
    need(n);
    Bytes out(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
              in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }
  std::string str() {
    const Bytes b = binary();
    return std::string(b.begin(), b.end());
  }
  Bytes rest() {
    Bytes out(in_.begin() + static_cast<std::ptrdiff_t>(pos_), in_.end());
    pos_ = in_.size();
    return out;
  }
  bool done() const { return pos_ == in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) malformed("packet truncated");
  }

  ByteView in_;
  std::size_t pos_ = 0;
};

std::uint8_t fixed_flags(const ControlPacket& p) {
  switch (p.type) {
    case PacketType::Publish:
      return static_cast<std::uint8_t>((p.dup ? 0x08 : 0) | static_cast<std::uint8_t>(p.qos) << 1 |
                                       (p.retain ? 0x01 : 0));
    case PacketType::Pubrel:
    case PacketType::Subscribe:
      return 0x02;
    default:
      return 0x00;
  }
}

Bytes encode_body(const ControlPacket& p) {
  Writer w;
  switch (p.type) {
    case PacketType::Connect: {
      w.str(p.protocol_name);
      w.u8(p.protocol_level);
      std::uint8_t flags = 0;
      if (p.clean_session) flags |= 0x02;
      if (p.will) {
        flags |= 0x04;
        flags |= static_cast<std::uint8_t>(static_cast<std::uint8_t>(p.will->qos) << 3);
        if (p.will->retain) flags |= 0x20;
      }
      if (p.password) flags |= 0x40;
      if (p.username) flags |= 0x80;
      w.u8(flags);
      w.u16(p.keep_alive);
      w.str(p.client_id);
      if (p.will) {
        w.str(p.will->topic);
        w.binary(p.will->message);
      }
      if (p.username) w.str(*p.username);
      if (p.password) w.binary(*p.password);
      break;
    }
    case PacketType::Connack:
      w.u8(p.session_present ? 0x01 : 0x00);
      w.u8(p.return_code);
      break;
    case PacketType::Publish:
      if (p.qos > QoS::ExactlyOnce) fail(ErrorCode::InvalidArgument, "QoS must be 0, 1 or 2");
      w.str(p.topic);
      if (p.qos != QoS::AtMostOnce) w.u16(p.packet_id);
      w.raw(p.payload);
      break;
    case PacketType::Puback:
    case PacketType::Pubrec:
    case PacketType::Pubrel:
    case PacketType::Pubcomp:
      w.u16(p.packet_id);
      break;
    case PacketType::Subscribe:
      w.u16(p.packet_id);
      for (const auto& t : p.subscriptions) {
        w.str(t.topic);
        w.u8(static_cast<std::uint8_t>(t.qos));
      }
      break;
    case PacketType::Suback:
      w.u16(p.packet_id);
      for (auto g : p.granted) w.u8(g);
      break;
    case PacketType::Pingreq:
    case PacketType::Pingresp:
    case PacketType::Disconnect:
      break;
  }
  return w.take();
}

bool valid_type(std::uint8_t t) { return (t >= 1 && t <= 9) || (t >= 12 && t <= 14); }

QoS qos_from(std::uint8_t bits) {
  if (bits > 2) malformed("QoS value 3 is reserved");
  return static_cast<QoS>(bits);
}

void expect_nonzero_id(std::uint16_t id) {
  if (id == 0) malformed("packet identifier must be non-zero");
}

}  // namespace

Bytes encode_packet(const ControlPacket& p) {
  const Bytes body = encode_body(p);
  if (body.size() > kMaxRemainingLength)
    fail(ErrorCode::LengthOverflow, "packet body exceeds 268435455 bytes");
  Bytes out;
  out.reserve(body.size() + 5);
  out.push_back(static_cast<std::uint8_t>(static_cast<std::uint8_t>(p.type) << 4 | fixed_flags(p)));
  const Bytes len = encode_remaining_length(static_cast<std::uint32_t>(body.size()));
  out.insert(out.end(), len.begin(), len.end());
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

std::optional<std::size_t> frame_length(ByteView stream) {
  if (stream.size() < 2) return std::nullopt;
  const auto len = decode_remaining_length(stream.subspan(1));
  if (!len) return std::nullopt;
  const std::size_t total = 1 + len->bytes_used + len->value;
  if (stream.size() < total) return std::nullopt;
  return total;
}

ControlPacket decode_packet(ByteView in) {
  if (in.size() < 2) malformed("packet shorter than the two-byte fixed header");
  const std::uint8_t first = in[0];
  const std::uint8_t type_bits = first >> 4;
  const std::uint8_t flags = first & 0x0f;
  if (!valid_type(type_bits)) malformed("unsupported packet type " + std::to_string(type_bits));

  const auto len = decode_remaining_length(in.subspan(1));
  if (!len) malformed("remaining length truncated");
  if (1 + len->bytes_used + len->value != in.size())
    malformed("remaining length " + std::to_string(len->value) + " does not match input size");

  ControlPacket p;
  p.type = static_cast<PacketType>(type_bits);
  Reader r(in.subspan(1 + len->bytes_used));

  const std::uint8_t expected_flags =
      (p.type == PacketType::Pubrel || p.type == PacketType::Subscribe) ? 0x02 : 0x00;
  if (p.type != PacketType::Publish && flags != expected_flags)
    malformed("reserved fixed-header flags violated for " + std::string(to_string(p.type)));

  switch (p.type) {
    case PacketType::Connect: {
      p.protocol_name = r.str();
      p.protocol_level = r.u8();
      const std::uint8_t cf = r.u8();
      if (cf & 0x01) malformed("CONNECT reserved flag set");
      p.clean_session = (cf & 0x02) != 0;
      const bool will = (cf & 0x04) != 0;
      const std::uint8_t will_qos = (cf >> 3) & 0x03;
      const bool will_retain = (cf & 0x20) != 0;
      if (!will && (will_qos != 0 || will_retain)) malformed("will flags set without a will");
      const bool has_password = (cf & 0x40) != 0;
      const bool has_username = (cf & 0x80) != 0;
      if (has_password && !has_username) malformed("password without username");
      p.keep_alive = r.u16();
      p.client_id = r.str();
      if (will) {
        Will w;
        w.qos = qos_from(will_qos);
        w.retain = will_retain;
        w.topic = r.str();
        w.message = r.binary();
        p.will = std::move(w);
      }
      if (has_username) p.username = r.str();
      if (has_password) p.password = r.binary();
      break;
    }
    case PacketType::Connack: {
      const std::uint8_t ack_flags = r.u8();
      if (ack_flags & 0xfe) malformed("CONNACK reserved flags set");
      p.session_present = ack_flags & 0x01;
      p.return_code = r.u8();
      break;
    }
    case PacketType::Publish: {
      p.dup = (flags & 0x08) != 0;
      p.qos = qos_from((flags >> 1) & 0x03);
      p.retain = (flags & 0x01) != 0;
      if (p.qos == QoS::AtMostOnce && p.dup) malformed("DUP set on a QoS 0 PUBLISH");
      p.topic = r.str();
      if (p.qos != QoS::AtMostOnce) {
        p.packet_id = r.u16();
        expect_nonzero_id(p.packet_id);
      }
      p.payload = r.rest();
      break;
    }
    case PacketType::Puback:
    case PacketType::Pubrec:
    case PacketType::Pubrel:
    case PacketType::Pubcomp:
      p.packet_id = r.u16();
      expect_nonzero_id(p.packet_id);
      break;
    case PacketType::Subscribe:
      p.packet_id = r.u16();
      expect_nonzero_id(p.packet_id);
      while (!r.done()) {
        TopicRequest t;
        t.topic = r.str();
        const std::uint8_t q = r.u8();
        if (q & 0xfc) malformed("SUBSCRIBE requested-QoS reserved bits set");
        t.qos = qos_from(q);
        p.subscriptions.push_back(std::move(t));
      }
      if (p.subscriptions.empty()) malformed("SUBSCRIBE without topics");
      break;
    case PacketType::Suback:
      p.packet_id = r.u16();
      expect_nonzero_id(p.packet_id);
      while (!r.done()) {
        const std::uint8_t g = r.u8();
        if (g > 2 && g != kSubackFailure) malformed("invalid SUBACK return code");
        p.granted.push_back(g);
      }
      if (p.granted.empty()) malformed("SUBACK without return codes");
      break;
    case PacketType::Pingreq:
    case PacketType::Pingresp:
    case PacketType::Disconnect:
      break;
  }
  if (!r.done())
    malformed(std::to_string(r.remaining()) + " trailing bytes after " +
              std::string(to_string(p.type)));
  return p;
}

}  // namespace fieldcam::mqtt
