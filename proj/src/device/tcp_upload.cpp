#include "device/tcp_upload.hpp"

#include "common/error.hpp"
#include "mqtt/tcp.hpp"

namespace fieldcam::device {

UploadResult upload_over_tcp(const Bytes& raw, const DeviceConfig& config, const std::string& host,
                             std::uint16_t port) {
  const auto& fsm = config.fsm;
  if (fsm.segment_size == 0 || fsm.segment_size > pipeline::kModemPublishLimit)
    fail(ErrorCode::ExceedsModemLimit, "segment size out of range");
  if (fsm.qos < 0 || fsm.qos > 2) fail(ErrorCode::InvalidArgument, "qos must be 0, 1 or 2");
  std::string encoded = pipeline::encode_pipeline(pipeline::RawFile::from(raw), config.cipher);
  if (config.newline_terminated) encoded += '\n';

  UploadResult r;
  r.encoded_size = encoded.size();
  r.plan = pipeline::plan_segments(encoded.size(), fsm.segment_size);
  const auto qos = static_cast<mqtt::QoS>(fsm.qos);

  mqtt::TcpMqttClient client(fsm.client_id);
  client.connect(host, port);
  client.publish(fsm.topic, to_bytes(pipeline::render_header(r.plan)), qos);
  ++r.publishes;
  for (std::size_t i = 0; i < r.plan.segment_count; ++i) {
    client.publish(fsm.topic, to_bytes(encoded.substr(i * fsm.segment_size, r.plan.segment_length(i))), qos);
    ++r.publishes;
  }
  client.disconnect();
  return r;
}

}  // namespace fieldcam::device
