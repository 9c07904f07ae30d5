#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace acdnet {

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<T> pixels;  // interleaved, row-major
};

/// 8-bit PNG with 1 or 3 channels.
void write_png8(const std::filesystem::path& path, const Image<std::uint8_t>& image);
/// 16-bit single-channel PNG.
void write_png16(const std::filesystem::path& path, const Image<std::uint16_t>& image);

/// Reads an 8-bit PNG, expanding palette/gray as needed to `channels` (1 or 3).
Image<std::uint8_t> read_png8(const std::filesystem::path& path, std::size_t channels);
/// Reads a 16-bit single-channel PNG.
Image<std::uint16_t> read_png16(const std::filesystem::path& path);

/// Metres to millimetres, rounded and clamped to [0, 65535]; non-positive or
/// non-finite depth encodes as 0 (missing).
std::uint16_t encode_depth_mm(double metres);
inline double decode_depth_mm(std::uint16_t mm) { return static_cast<double>(mm) / 1000.0; }

}  // namespace acdnet
