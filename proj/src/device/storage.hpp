#pragma once

#include <map>
#include <string>

#include "common/bytes.hpp"
#include "device/power.hpp"

namespace fieldcam::device {

class VirtualSd {
 public:
  void write(const std::string& name, Bytes data) { files_[name] = std::move(data); }
  bool exists(const std::string& name) const { return files_.contains(name); }
  const Bytes& read(const std::string& name) const;
  std::size_t size(const std::string& name) const { return read(name).size(); }
  // Bytes [offset, offset + length), clipped to the end of the file.
  Bytes read_window(const std::string& name, std::size_t offset, std::size_t length) const;
  void remove(const std::string& name) { files_.erase(name); }
  std::size_t file_count() const { return files_.size(); }

 private:
  std::map<std::string, Bytes> files_;
};

struct CameraConfig {
  std::string fixture_path;
  int width = 640;
  int height = 480;
  int quality = 10;  // 1 (best) .. 63, metadata only
  // Reject fixtures without SOI/EOI markers.
  bool strict_jpeg = true;
};

bool looks_like_jpeg(ByteView data);

// Stands in for the camera: every capture returns the fixture file.
class CameraStub {
 public:
  explicit CameraStub(CameraConfig config);

  // Stores the frame as image.jpg and returns that name.
  std::string capture(const PowerLatch& latch, VirtualSd& sd) const;
  const CameraConfig& config() const { return config_; }

 private:
  CameraConfig config_;
};

}  // namespace fieldcam::device
