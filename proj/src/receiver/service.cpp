#include "receiver/service.hpp"

#include "common/error.hpp"
#include "pipeline/base64.hpp"

namespace fieldcam::receiver {

void ReceiverConfig::validate() const {
  if (password.empty()) fail(ErrorCode::Config, "receiver password must not be empty");
  if (topic.empty()) fail(ErrorCode::Config, "receiver topic must not be empty");
  if (initial_backoff <= 0us || max_backoff < initial_backoff)
    fail(ErrorCode::Config, "invalid subscribe backoff");
}

bool password_matches(std::string_view expected, std::string_view given) {
  // Length leaks, content does not.
  unsigned char diff = expected.size() == given.size() ? 0 : 1;
  for (std::size_t i = 0; i < given.size(); ++i)
    diff |= static_cast<unsigned char>(given[i] ^ (i < expected.size() ? expected[i] : 0));
  return diff == 0;
}

ReceiverService::ReceiverService(ReceiverConfig config, Reassembler::Clock clock)
    : config_((config.validate(), std::move(config))),
      store_(config_.storage_dir),
      reassembler_(store_, std::move(clock)),
      backoff_(config_.initial_backoff) {}

SubscribeRequest ReceiverService::on_connect(SimTime) {
  std::lock_guard lock(mu_);
  subscribed_ = false;
  retry_at_.reset();
  return {config_.topic, mqtt::QoS::AtMostOnce};
}

void ReceiverService::on_suback(const std::vector<std::uint8_t>& granted, SimTime now) {
  std::lock_guard lock(mu_);
  const bool ok = !granted.empty() && granted[0] != mqtt::kSubackFailure;
  if (ok) {
    subscribed_ = true;
    retry_at_.reset();
    backoff_ = config_.initial_backoff;
    return;
  }
  subscribed_ = false;
  retry_at_ = now + backoff_;
  backoff_ = std::min(backoff_ * 2, config_.max_backoff);
}

std::optional<SubscribeRequest> ReceiverService::poll(SimTime now) {
  std::lock_guard lock(mu_);
  if (!retry_at_ || now < *retry_at_) return std::nullopt;
  retry_at_.reset();
  return SubscribeRequest{config_.topic, mqtt::QoS::AtMostOnce};
}

bool ReceiverService::subscribed() const {
  std::lock_guard lock(mu_);
  return subscribed_;
}

Duration ReceiverService::current_backoff() const {
  std::lock_guard lock(mu_);
  return backoff_;
}

MessageResult ReceiverService::on_message(std::string_view topic, ByteView payload) {
  std::lock_guard lock(mu_);
  if (topic != config_.topic) return {};
  return reassembler_.on_message(payload);
}

std::vector<TransmissionRecord> ReceiverService::list() const {
  std::lock_guard lock(mu_);
  return store_.list();
}

std::optional<TransmissionRecord> ReceiverService::find(std::uint64_t id) const {
  std::lock_guard lock(mu_);
  const auto* r = store_.find(id);
  return r ? std::optional(*r) : std::nullopt;
}

TransmissionRecord ReceiverService::decode(std::uint64_t id, std::string_view password) {
  if (!password_matches(config_.password, password)) fail(ErrorCode::AuthFailed, "wrong password");

  TransmissionRecord rec;
  {
    std::lock_guard lock(mu_);
    const auto* r = store_.find(id);
    if (!r) fail(ErrorCode::NotFound, "no transmission " + std::to_string(id));
    if (r->status != RecordStatus::Stored)
      fail(ErrorCode::Conflict, "transmission " + std::to_string(id) + " is " + std::string(to_string(r->status)));
    if (!decoding_.insert(id).second)
      fail(ErrorCode::Conflict, "transmission " + std::to_string(id) + " is already being decoded");
    rec = *r;
  }
  struct Release {
    ReceiverService& s;
    std::uint64_t id;
    ~Release() {
      std::lock_guard lock(s.mu_);
      s.decoding_.erase(id);
    }
  } release{*this, id};

  // File work runs outside the lock so listings stay responsive.
  const Bytes encoded = read_file(rec.encoded_path);
  const Bytes cipher = pipeline::truncate16(pipeline::b64_decode(fieldcam::to_string(encoded)));
  const auto encrypted_path = store_.file_for(id, pipeline::kEncryptedFile);
  write_file(encrypted_path, cipher);
  const Bytes image = pipeline::aes128_decrypt(cipher, config_.cipher);
  const auto image_path = store_.file_for(id, pipeline::kImageFile);
  write_file(image_path, image);

  std::lock_guard lock(mu_);
  rec.status = RecordStatus::Decoded;
  rec.decoded_path = image_path.string();
  store_.save(rec);
  return rec;
}

std::optional<Bytes> ReceiverService::latest_image() const {
  std::string path;
  {
    std::lock_guard lock(mu_);
    const auto* r = store_.latest_decoded();
    if (!r) return std::nullopt;
    path = r->decoded_path;
  }
  return read_file(path);
}

ReassemblyState ReceiverService::reassembly_state() const {
  std::lock_guard lock(mu_);
  return reassembler_.state();
}

}  // namespace fieldcam::receiver
