#include "device/storage.hpp"

#include <filesystem>

#include "common/error.hpp"
#include "pipeline/pipeline.hpp"

namespace fieldcam::device {

const Bytes& VirtualSd::read(const std::string& name) const {
  const auto it = files_.find(name);
  if (it == files_.end()) fail(ErrorCode::NotFound, "no file on SD card: " + name);
  return it->second;
}

Bytes VirtualSd::read_window(const std::string& name, std::size_t offset, std::size_t length) const {
  const Bytes& f = read(name);
  if (offset >= f.size()) return {};
  const auto n = std::min(length, f.size() - offset);
  return Bytes(f.begin() + static_cast<std::ptrdiff_t>(offset),
               f.begin() + static_cast<std::ptrdiff_t>(offset + n));
}

bool looks_like_jpeg(ByteView data) {
  return data.size() >= 4 && data[0] == 0xFF && data[1] == 0xD8 && data[data.size() - 2] == 0xFF &&
         data[data.size() - 1] == 0xD9;
}

CameraStub::CameraStub(CameraConfig config) : config_(std::move(config)) {
  if (config_.quality < 1 || config_.quality > 63)
    fail(ErrorCode::InvalidArgument, "camera quality must be in 1..63");
  if (config_.width <= 0 || config_.height <= 0)
    fail(ErrorCode::InvalidArgument, "camera resolution must be positive");
}

std::string CameraStub::capture(const PowerLatch& latch, VirtualSd& sd) const {
  if (!latch.is_on()) fail(ErrorCode::PoweredOff, "camera capture with the latch off");
  if (config_.fixture_path.empty() || !std::filesystem::is_regular_file(config_.fixture_path))
    fail(ErrorCode::CaptureFailed, "camera fixture missing: " + config_.fixture_path);
  Bytes frame = read_file(config_.fixture_path);
  if (frame.empty()) fail(ErrorCode::CaptureFailed, "camera fixture is empty");
  if (config_.strict_jpeg && !looks_like_jpeg(frame))
    fail(ErrorCode::CaptureFailed, "camera fixture is not a JPEG stream");
  sd.write(std::string(pipeline::kImageFile), std::move(frame));
  return std::string(pipeline::kImageFile);
}

}  // namespace fieldcam::device
