#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "common/bytes.hpp"

namespace fieldcam::mqtt {

inline constexpr std::uint32_t kMaxRemainingLength = 268'435'455;

enum class PacketType : std::uint8_t {
  Connect = 1,
  Connack = 2,
  Publish = 3,
  Puback = 4,
  Pubrec = 5,
  Pubrel = 6,
  Pubcomp = 7,
  Subscribe = 8,
  Suback = 9,
  Pingreq = 12,
  Pingresp = 13,
  Disconnect = 14,
};

std::string_view to_string(PacketType type);

enum class QoS : std::uint8_t { AtMostOnce = 0, AtLeastOnce = 1, ExactlyOnce = 2 };

inline constexpr std::uint8_t kSubackFailure = 0x80;

struct Will {
  std::string topic;
  Bytes message;
  QoS qos = QoS::AtMostOnce;
  bool retain = false;
  bool operator==(const Will&) const = default;
};

struct TopicRequest {
  std::string topic;
  QoS qos = QoS::AtMostOnce;
  bool operator==(const TopicRequest&) const = default;
};

// One MQTT 3.1.1 control packet. Fields not used by `type` stay at their
// defaults; the codec ignores them on encode and leaves them untouched on
// decode, so decode(encode(p)) == p for any well-formed p.
struct ControlPacket {
  PacketType type = PacketType::Pingreq;

  // PUBLISH fixed-header flags.
  bool dup = false;
  QoS qos = QoS::AtMostOnce;
  bool retain = false;

  std::string topic;                // PUBLISH
  std::uint16_t packet_id = 0;      // PUBLISH (QoS>0), acks, SUBSCRIBE, SUBACK
  Bytes payload;                    // PUBLISH

  // CONNECT
  std::string protocol_name = "MQTT";
  std::uint8_t protocol_level = 4;
  bool clean_session = true;
  std::uint16_t keep_alive = 0;
  std::string client_id;
  std::optional<Will> will;
  std::optional<std::string> username;
  std::optional<Bytes> password;

  // CONNACK
  bool session_present = false;
  std::uint8_t return_code = 0;

  std::vector<TopicRequest> subscriptions;  // SUBSCRIBE
  std::vector<std::uint8_t> granted;        // SUBACK

  bool operator==(const ControlPacket&) const = default;

  static ControlPacket connect(std::string client_id, std::uint16_t keep_alive = 60);
  static ControlPacket connack(std::uint8_t return_code, bool session_present = false);
  static ControlPacket publish(std::string topic, Bytes payload, QoS qos = QoS::AtMostOnce,
                               std::uint16_t packet_id = 0, bool dup = false,
                               bool retain = false);
  static ControlPacket ack(PacketType type, std::uint16_t packet_id);
  static ControlPacket subscribe(std::uint16_t packet_id, std::vector<TopicRequest> topics);
  static ControlPacket suback(std::uint16_t packet_id, std::vector<std::uint8_t> granted);
  static ControlPacket simple(PacketType type);  // PINGREQ, PINGRESP, DISCONNECT
};

Bytes encode_remaining_length(std::uint32_t n);

struct RemainingLength {
  std::uint32_t value = 0;
  std::size_t bytes_used = 0;
};

// Returns nullopt when `in` ends before the length field is complete.
// Throws MalformedPacket on a fifth continuation byte.
std::optional<RemainingLength> decode_remaining_length(ByteView in);

Bytes encode_packet(const ControlPacket& p);

// `in` must hold exactly one packet.
ControlPacket decode_packet(ByteView in);

// Total size of the first packet in a byte stream, or nullopt if more bytes
// are needed. Used to frame packets arriving over a socket.
std::optional<std::size_t> frame_length(ByteView stream);

}  // namespace fieldcam::mqtt
