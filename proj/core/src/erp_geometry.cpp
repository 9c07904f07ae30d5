#include "acdnet/erp_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

namespace acdnet {

double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

Vec3 pixel_to_direction(std::size_t u, std::size_t v, std::size_t width, std::size_t height) {
  if (u >= width || v >= height)
    throw std::out_of_range("pixel (" + std::to_string(u) + ", " + std::to_string(v) +
                            ") outside " + std::to_string(width) + "x" + std::to_string(height));
  constexpr double pi = std::numbers::pi;
  const double lon = 2.0 * pi * (static_cast<double>(u) + 0.5) / static_cast<double>(width) - pi;
  const double lat = pi / 2.0 - pi * (static_cast<double>(v) + 0.5) / static_cast<double>(height);
  const double cl = std::cos(lat);
  return {cl * std::sin(lon), std::sin(lat), cl * std::cos(lon)};
}

RayGrid RayGrid::make(std::size_t width, std::size_t height) {
  RayGrid g{width, height, {}};
  g.directions.reserve(width * height);
  for (std::size_t v = 0; v < height; ++v)
    for (std::size_t u = 0; u < width; ++u) g.directions.push_back(pixel_to_direction(u, v, width, height));
  return g;
}

void BoxRoom::validate() const {
  if (!(half_extents.x > 0 && half_extents.y > 0 && half_extents.z > 0))
    throw std::invalid_argument("BoxRoom: half extents must be positive");
  if (!(std::abs(camera.x) < half_extents.x && std::abs(camera.y) < half_extents.y &&
        std::abs(camera.z) < half_extents.z))
    throw std::invalid_argument("BoxRoom: camera must be strictly inside the room");
  if (occluder) {
    const auto& o = *occluder;
    if (!(o.min_corner.x < o.max_corner.x && o.min_corner.y < o.max_corner.y &&
          o.min_corner.z < o.max_corner.z))
      throw std::invalid_argument("BoxRoom: degenerate occluder");
    const bool inside = camera.x >= o.min_corner.x && camera.x <= o.max_corner.x &&
                        camera.y >= o.min_corner.y && camera.y <= o.max_corner.y &&
                        camera.z >= o.min_corner.z && camera.z <= o.max_corner.z;
    if (inside) throw std::invalid_argument("BoxRoom: camera inside the occluder");
  }
}

namespace {

double component(const Vec3& v, int axis) { return axis == 0 ? v.x : (axis == 1 ? v.y : v.z); }

Vec3 axis_normal(int axis, double sign) {
  Vec3 n;
  if (axis == 0) n.x = sign;
  if (axis == 1) n.y = sign;
  if (axis == 2) n.z = sign;
  return n;
}

// Entry distance of a ray into an axis-aligned box (slab method); returns
// +inf when missed or behind the origin.
bool slab_entry(const Vec3& origin, const Vec3& dir, const Vec3& lo, const Vec3& hi, double& t_hit,
                int& axis_hit, double& sign_hit) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double o = component(origin, a);
    const double d = component(dir, a);
    const double l = component(lo, a);
    const double h = component(hi, a);
    if (d == 0.0) {
      if (o < l || o > h) return false;
      continue;
    }
    double t0 = (l - o) / d;
    double t1 = (h - o) / d;
    double s = -1.0;  // entering through the low face: outward normal points -axis
    if (t0 > t1) {
      std::swap(t0, t1);
      s = 1.0;
    }
    if (t0 > t_near) {
      t_near = t0;
      axis_hit = a;
      sign_hit = s;
    }
    t_far = std::min(t_far, t1);
  }
  if (t_near > t_far || t_near <= 0.0) return false;
  t_hit = t_near;
  return true;
}

}  // namespace

RayHit trace_ray(const BoxRoom& room, const Vec3& dir) {
  RayHit hit;
  hit.depth = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double d = component(dir, a);
    if (d == 0.0) continue;
    const double sign = d > 0.0 ? 1.0 : -1.0;
    const double t = (sign * component(room.half_extents, a) - component(room.camera, a)) / d;
    if (t > 0.0 && t < hit.depth) {
      hit.depth = t;
      hit.normal = axis_normal(a, -sign);  // walls face the interior
      hit.albedo = room.albedo[static_cast<std::size_t>(2 * a + (sign > 0.0 ? 1 : 0))];
    }
  }
  if (room.occluder) {
    double t = 0.0, sign = 0.0;
    int axis = 0;
    if (slab_entry(room.camera, dir, room.occluder->min_corner, room.occluder->max_corner, t, axis,
                   sign) &&
        t < hit.depth) {
      hit.depth = t;
      hit.normal = axis_normal(axis, sign);
      hit.albedo = room.occluder->albedo;
    }
  }
  return hit;
}

PanoFrame render_box_room(const BoxRoom& room, std::size_t width, std::size_t height) {
  room.validate();
  PanoFrame f;
  f.width = width;
  f.height = height;
  f.rgb.resize(width * height * 3);
  f.depth.resize(width * height);
  f.mask.assign(width * height, 1);
  auto to_byte = [](double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  };
  for (std::size_t v = 0; v < height; ++v) {
    for (std::size_t u = 0; u < width; ++u) {
      const Vec3 d = pixel_to_direction(u, v, width, height);
      const RayHit hit = trace_ray(room, d);
      const std::size_t i = v * width + u;
      const double shade = std::abs(dot(hit.normal, d));
      f.depth[i] = hit.depth;
      f.rgb[3 * i + 0] = to_byte(hit.albedo.r * shade);
      f.rgb[3 * i + 1] = to_byte(hit.albedo.g * shade);
      f.rgb[3 * i + 2] = to_byte(hit.albedo.b * shade);
    }
  }
  return f;
}

PointCloud depth_to_pointcloud(std::span<const double> depth, std::span<const std::uint8_t> rgb,
                               std::span<const std::uint8_t> mask, std::size_t width,
                               std::size_t height) {
  const std::size_t n = width * height;
  if (depth.size() != n || (!rgb.empty() && rgb.size() != 3 * n) ||
      (!mask.empty() && mask.size() != n))
    throw std::invalid_argument("depth_to_pointcloud: buffer sizes do not match the image");
  PointCloud cloud;
  cloud.points.reserve(n);
  for (std::size_t v = 0; v < height; ++v) {
    for (std::size_t u = 0; u < width; ++u) {
      const std::size_t i = v * width + u;
      if (!mask.empty() && !mask[i]) continue;
      if (depth[i] < 0.0) {
        ++cloud.skipped_negative;
        continue;
      }
      const Vec3 d = pixel_to_direction(u, v, width, height);
      PointRecord p{depth[i] * d.x, depth[i] * d.y, depth[i] * d.z, 255, 255, 255};
      if (!rgb.empty()) {
        p.r = rgb[3 * i];
        p.g = rgb[3 * i + 1];
        p.b = rgb[3 * i + 2];
      }
      cloud.points.push_back(p);
    }
  }
  return cloud;
}

void write_ply(std::ostream& out, const PointCloud& cloud) {
  out << "ply\nformat ascii 1.0\n"
      << "element vertex " << cloud.points.size() << '\n'
      << "property double x\nproperty double y\nproperty double z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "end_header\n";
  char line[160];
  for (const auto& p : cloud.points) {
    std::snprintf(line, sizeof(line), "%.17g %.17g %.17g %u %u %u\n", p.x, p.y, p.z,
                  static_cast<unsigned>(p.r), static_cast<unsigned>(p.g),
                  static_cast<unsigned>(p.b));
    out << line;
  }
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_ply(out, cloud);
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::string line;
  std::size_t count = 0;
  bool saw_count = false;
  while (std::getline(in, line)) {
    if (line.rfind("element vertex ", 0) == 0) {
      count = std::stoull(line.substr(15));
      saw_count = true;
    }
    if (line == "end_header") break;
  }
  if (!saw_count) throw std::runtime_error("PLY header has no vertex count");
  PointCloud cloud;
  cloud.points.reserve(count);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    PointRecord p{};
    unsigned r = 0, g = 0, b = 0;
    if (!(ls >> p.x >> p.y >> p.z >> r >> g >> b))
      throw std::runtime_error("malformed PLY vertex line: " + line);
    p.r = static_cast<std::uint8_t>(r);
    p.g = static_cast<std::uint8_t>(g);
    p.b = static_cast<std::uint8_t>(b);
    cloud.points.push_back(p);
  }
  if (cloud.points.size() != count)
    throw std::runtime_error("PLY header declares " + std::to_string(count) + " vertices, body has " +
                             std::to_string(cloud.points.size()));
  return cloud;
}

Footprint receptive_field_footprint(std::span<const Dilation> dilations) {
  Footprint fp;
  for (const auto& d : dilations) {
    for (int ky = -1; ky <= 1; ++ky)
      for (int kx = -1; kx <= 1; ++kx) ++fp.multiplicity[{ky * d.dy, kx * d.dx}];
  }
  bool first = true;
  for (const auto& [offset, count] : fp.multiplicity) {
    const auto [r, c] = offset;
    if (first) {
      fp.min_row = fp.max_row = r;
      fp.min_col = fp.max_col = c;
      first = false;
    }
    fp.min_row = std::min(fp.min_row, r);
    fp.max_row = std::max(fp.max_row, r);
    fp.min_col = std::min(fp.min_col, c);
    fp.max_col = std::max(fp.max_col, c);
  }
  return fp;
}

}  // namespace acdnet
