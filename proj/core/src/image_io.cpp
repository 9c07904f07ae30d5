#include "acdnet/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

namespace acdnet {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) throw ImageIoError("cannot open '" + path.string() + "'");
  return f;
}

[[noreturn]] void png_fail(png_structp png, png_const_charp message) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = message;
  png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

void write_png(const std::filesystem::path& path, std::size_t width, std::size_t height,
               int bit_depth, int color_type, std::size_t row_bytes,
               const std::uint8_t* rows_data) {
  FilePtr f = open_file(path, "wb");
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, png_warn);
  if (!png) throw ImageIoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw ImageIoError("png_create_info_struct failed");
  }
  std::vector<png_bytep> rows(height);
  for (std::size_t y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(rows_data + y * row_bytes);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ImageIoError("writing '" + path.string() + "': " + err);
  }
  png_init_io(png, f.get());
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct Decoded {
  std::size_t width = 0, height = 0, channels = 0, bit_depth = 0;
  std::vector<std::uint8_t> bytes;
};

Decoded read_png(const std::filesystem::path& path, bool want16, std::size_t want_channels) {
  FilePtr f = open_file(path, "rb");
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, png_warn);
  if (!png) throw ImageIoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ImageIoError("png_create_info_struct failed");
  }
  Decoded d;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageIoError("reading '" + path.string() + "': " + err);
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (want16) {
    if (depth != 16 || color != PNG_COLOR_TYPE_GRAY) {
      png_destroy_read_struct(&png, &info, nullptr);
      throw ImageIoError("'" + path.string() + "' is not a 16-bit single-channel PNG");
    }
    png_set_swap(png);  // host little-endian samples
  } else {
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    const bool is_gray = (color & PNG_COLOR_MASK_COLOR) == 0;
    if (want_channels == 3 && is_gray) png_set_gray_to_rgb(png);
    if (want_channels == 1 && !is_gray) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  png_read_update_info(png, info);
  d.width = png_get_image_width(png, info);
  d.height = png_get_image_height(png, info);
  d.channels = png_get_channels(png, info);
  d.bit_depth = png_get_bit_depth(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  d.bytes.resize(row_bytes * d.height);
  rows.resize(d.height);
  for (std::size_t y = 0; y < d.height; ++y) rows[y] = d.bytes.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return d;
}

}  // namespace

void write_png8(const std::filesystem::path& path, const Image<std::uint8_t>& image) {
  if (image.channels != 1 && image.channels != 3)
    throw ImageIoError("write_png8: 1 or 3 channels supported");
  if (image.pixels.size() != image.width * image.height * image.channels)
    throw ImageIoError("write_png8: pixel buffer size mismatch");
  write_png(path, image.width, image.height, 8,
            image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
            image.width * image.channels, image.pixels.data());
}

void write_png16(const std::filesystem::path& path, const Image<std::uint16_t>& image) {
  if (image.channels != 1) throw ImageIoError("write_png16: single channel only");
  if (image.pixels.size() != image.width * image.height)
    throw ImageIoError("write_png16: pixel buffer size mismatch");
  // PNG stores 16-bit samples big-endian.
  std::vector<std::uint8_t> be(image.pixels.size() * 2);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    be[2 * i] = static_cast<std::uint8_t>(image.pixels[i] >> 8);
    be[2 * i + 1] = static_cast<std::uint8_t>(image.pixels[i] & 0xff);
  }
  write_png(path, image.width, image.height, 16, PNG_COLOR_TYPE_GRAY, image.width * 2, be.data());
}

Image<std::uint8_t> read_png8(const std::filesystem::path& path, std::size_t channels) {
  Decoded d = read_png(path, false, channels);
  if (d.channels != channels)
    throw ImageIoError("'" + path.string() + "' has " + std::to_string(d.channels) +
                       " channels, expected " + std::to_string(channels));
  return {d.width, d.height, d.channels, std::move(d.bytes)};
}

Image<std::uint16_t> read_png16(const std::filesystem::path& path) {
  Decoded d = read_png(path, true, 1);
  Image<std::uint16_t> img{d.width, d.height, 1, std::vector<std::uint16_t>(d.width * d.height)};
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    img.pixels[i] = static_cast<std::uint16_t>(d.bytes[2 * i] | (d.bytes[2 * i + 1] << 8));
  return img;
}

std::uint16_t encode_depth_mm(double metres) {
  if (!std::isfinite(metres) || metres <= 0.0) return 0;
  const double mm = std::round(metres * 1000.0);
  if (mm >= 65535.0) return 65535;
  return static_cast<std::uint16_t>(mm);
}

}  // namespace acdnet
