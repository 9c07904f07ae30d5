#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "acdnet/pano_padding.hpp"

namespace acdnet {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
double norm(const Vec3& v);

// Axis convention: y up, z forward; longitude 0 looks down +z and increases
// towards +x. Pixel centres sit at half-integer coordinates, so neither the
// seam nor the poles fall on a sample.

/// Unit viewing ray of pixel (u, v) in a W x H equirectangular image:
/// lon = 2*pi*(u+0.5)/W - pi, lat = pi/2 - pi*(v+0.5)/H,
/// d = (cos lat sin lon, sin lat, cos lat cos lon).
/// Throws std::out_of_range for indices outside the image.
Vec3 pixel_to_direction(std::size_t u, std::size_t v, std::size_t width, std::size_t height);

/// Per-pixel directions in row-major (v, u) order.
struct RayGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<Vec3> directions;

  static RayGrid make(std::size_t width, std::size_t height);
  const Vec3& at(std::size_t u, std::size_t v) const { return directions[v * width + u]; }
};

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
};

/// Axis-aligned box obstacle inside the room.
struct Occluder {
  Vec3 min_corner;
  Vec3 max_corner;
  Rgb albedo;
};

/// Axis-aligned room centred at the origin. Faces are ordered
/// -x, +x, -y (floor), +y (ceiling), -z, +z.
struct BoxRoom {
  Vec3 half_extents{2.0, 2.0, 2.0};
  Vec3 camera{};
  std::array<Rgb, 6> albedo{};
  std::optional<Occluder> occluder;

  /// Throws std::invalid_argument when extents are not positive or the camera
  /// is not strictly inside (and outside the occluder).
  void validate() const;
};

struct RayHit {
  double depth = 0.0;
  Vec3 normal;
  Rgb albedo;
};

/// Nearest positive intersection of camera + t*dir with the room or occluder.
RayHit trace_ray(const BoxRoom& room, const Vec3& dir);

/// Equirectangular RGB-D sample. Depth is the Euclidean range in metres.
struct PanoFrame {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;    // interleaved, row-major, 3 bytes per pixel
  std::vector<double> depth;        // row-major
  std::vector<std::uint8_t> mask;   // nonzero where depth is valid
};

/// Exact slab-intersection depth with albedo * |n . d| shading.
PanoFrame render_box_room(const BoxRoom& room, std::size_t width, std::size_t height);

struct PointRecord {
  double x, y, z;
  std::uint8_t r, g, b;
};

struct PointCloud {
  std::vector<PointRecord> points;
  std::size_t skipped_negative = 0;
};

/// Lifts each valid pixel along its viewing ray: p = depth * direction.
/// Pixels with negative depth are skipped and counted; `rgb` may be empty
/// (points are then white).
PointCloud depth_to_pointcloud(std::span<const double> depth, std::span<const std::uint8_t> rgb,
                               std::span<const std::uint8_t> mask, std::size_t width,
                               std::size_t height);

/// ASCII PLY with x y z as doubles (17 significant digits) and uchar colour.
void write_ply(std::ostream& out, const PointCloud& cloud);
void write_ply(const std::filesystem::path& path, const PointCloud& cloud);
/// Reads back the ASCII layout written above. Throws std::runtime_error when
/// the header count and the body disagree.
PointCloud read_ply(const std::filesystem::path& path);

/// Union of 3x3 tap offsets (row, column) over a set of dilations, with the
/// number of branches sampling each offset.
struct Footprint {
  std::map<std::pair<int, int>, int> multiplicity;
  int min_row = 0, max_row = 0, min_col = 0, max_col = 0;

  std::size_t size() const { return multiplicity.size(); }
  int rows() const { return max_row - min_row + 1; }
  int cols() const { return max_col - min_col + 1; }
};

Footprint receptive_field_footprint(std::span<const Dilation> dilations);

}  // namespace acdnet
