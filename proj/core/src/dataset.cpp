#include "acdnet/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "acdnet/image_io.hpp"

namespace fs = std::filesystem;

namespace acdnet {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

DatasetDir DatasetDir::open(const fs::path& root) {
  if (!fs::is_directory(root)) throw std::runtime_error("dataset directory '" + root.string() + "' not found");
  std::map<std::string, FrameFiles> by_id;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    for (const char* kind : {".rgb.png", ".depth.png", ".mask.png"}) {
      if (!ends_with(name, kind)) continue;
      const std::string id = name.substr(0, name.size() - std::string(kind).size());
      FrameFiles& f = by_id[id];
      f.id = id;
      if (std::string(kind) == ".rgb.png") f.rgb = entry.path();
      if (std::string(kind) == ".depth.png") f.depth = entry.path();
      if (std::string(kind) == ".mask.png") f.mask = entry.path();
    }
  }
  DatasetDir d;
  d.root_ = root;
  for (auto& [id, f] : by_id) {
    if (f.rgb.empty() || f.depth.empty())
      throw std::runtime_error("frame '" + id + "' in '" + root.string() +
                               "' needs both .rgb.png and .depth.png");
    d.frames_.push_back(std::move(f));
  }
  return d;
}

std::size_t DatasetDir::find(const std::string& id) const {
  for (std::size_t i = 0; i < frames_.size(); ++i)
    if (frames_[i].id == id) return i;
  throw std::out_of_range("frame '" + id + "' not found in '" + root_.string() + "'");
}

PanoFrame DatasetDir::load(std::size_t i) const {
  const FrameFiles& f = frames_.at(i);
  const auto rgb = read_png8(f.rgb, 3);
  const auto depth = read_png16(f.depth);
  if (rgb.width != depth.width || rgb.height != depth.height)
    throw std::runtime_error("frame '" + f.id + "': rgb and depth sizes differ");
  if (rgb.width != 2 * rgb.height)
    throw std::runtime_error("frame '" + f.id + "': width must be twice the height");
  PanoFrame frame;
  frame.width = rgb.width;
  frame.height = rgb.height;
  frame.rgb = rgb.pixels;
  frame.depth.resize(depth.pixels.size());
  frame.mask.resize(depth.pixels.size());
  for (std::size_t p = 0; p < depth.pixels.size(); ++p) {
    frame.depth[p] = decode_depth_mm(depth.pixels[p]);
    frame.mask[p] = depth.pixels[p] > 0 ? 1 : 0;
  }
  if (f.mask) {
    const auto m = read_png8(*f.mask, 1);
    if (m.width != frame.width || m.height != frame.height)
      throw std::runtime_error("frame '" + f.id + "': mask size differs");
    for (std::size_t p = 0; p < m.pixels.size(); ++p)
      if (m.pixels[p] == 0) frame.mask[p] = 0;
  }
  return frame;
}

std::vector<PanoFrame> DatasetDir::load_all() const {
  std::vector<PanoFrame> out;
  out.reserve(frames_.size());
  for (std::size_t i = 0; i < frames_.size(); ++i) out.push_back(load(i));
  return out;
}

void write_frame(const fs::path& dir, const std::string& id, const PanoFrame& frame) {
  Image<std::uint8_t> rgb{frame.width, frame.height, 3, frame.rgb};
  Image<std::uint16_t> depth{frame.width, frame.height, 1,
                             std::vector<std::uint16_t>(frame.depth.size())};
  for (std::size_t p = 0; p < frame.depth.size(); ++p)
    depth.pixels[p] = frame.mask.empty() || frame.mask[p] ? encode_depth_mm(frame.depth[p]) : 0;
  write_png8(dir / (id + ".rgb.png"), rgb);
  write_png16(dir / (id + ".depth.png"), depth);
}

PanoFrame quantize_depth(PanoFrame frame) {
  for (std::size_t p = 0; p < frame.depth.size(); ++p) {
    const auto mm = encode_depth_mm(frame.depth[p]);
    frame.depth[p] = decode_depth_mm(mm);
    if (mm == 0) frame.mask[p] = 0;
  }
  return frame;
}

namespace {

void check_frames(std::span<const PanoFrame* const> frames) {
  if (frames.empty()) throw std::invalid_argument("empty frame batch");
  for (const auto* f : frames)
    if (f->width != frames[0]->width || f->height != frames[0]->height)
      throw ShapeError("frames in a batch must share one size");
}

}  // namespace

Tensor image_batch(std::span<const PanoFrame* const> frames) {
  check_frames(frames);
  const std::size_t h = frames[0]->height, w = frames[0]->width;
  Tensor t(Shape{frames.size(), 3, h, w});
  auto d = t.mutable_data();
  for (std::size_t b = 0; b < frames.size(); ++b)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t p = 0; p < h * w; ++p)
        d[(b * 3 + c) * h * w + p] = frames[b]->rgb[3 * p + c] / 255.0 - 0.5;
  return t;
}

Tensor depth_batch(std::span<const PanoFrame* const> frames) {
  check_frames(frames);
  const std::size_t n = frames[0]->height * frames[0]->width;
  Tensor t(Shape{frames.size(), 1, frames[0]->height, frames[0]->width});
  auto d = t.mutable_data();
  for (std::size_t b = 0; b < frames.size(); ++b)
    std::copy(frames[b]->depth.begin(), frames[b]->depth.end(), d.begin() + static_cast<std::ptrdiff_t>(b * n));
  return t;
}

ValidMask mask_batch(std::span<const PanoFrame* const> frames) {
  check_frames(frames);
  const std::size_t n = frames[0]->height * frames[0]->width;
  ValidMask m{Shape{frames.size(), 1, frames[0]->height, frames[0]->width},
              std::vector<std::uint8_t>(frames.size() * n)};
  for (std::size_t b = 0; b < frames.size(); ++b)
    for (std::size_t p = 0; p < n; ++p)
      m.valid[b * n + p] = frames[b]->mask[p] && frames[b]->depth[p] > 0.0 ? 1 : 0;
  return m;
}

BoxRoom random_room(Rng& rng, bool with_occluder) {
  BoxRoom room;
  room.half_extents = {rng.uniform(1.5, 3.0), rng.uniform(1.2, 1.6), rng.uniform(1.5, 3.0)};
  room.camera = {rng.uniform(-0.3, 0.3) * room.half_extents.x,
                 rng.uniform(-0.3, 0.3) * room.half_extents.y,
                 rng.uniform(-0.3, 0.3) * room.half_extents.z};
  for (auto& a : room.albedo) a = {rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0)};
  if (with_occluder) {
    // a table-sized box standing on the floor, kept clear of the camera
    const double sx = rng.uniform(0.3, 0.6), sz = rng.uniform(0.3, 0.6);
    const double top = -room.half_extents.y + rng.uniform(0.5, 1.0);
    const double cx = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.55, 0.8) * room.half_extents.x;
    const double cz = rng.uniform(-0.5, 0.5) * room.half_extents.z;
    room.occluder = Occluder{{cx - sx, -room.half_extents.y, cz - sz},
                             {cx + sx, std::min(top, room.camera.y - 0.1), cz + sz},
                             {rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0)}};
  }
  return room;
}

std::vector<PanoFrame> synthesize_frames(std::size_t count, std::uint64_t seed, std::size_t height,
                                         std::size_t width, bool with_occluder) {
  Rng rng(seed);
  std::vector<PanoFrame> frames;
  frames.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    frames.push_back(render_box_room(random_room(rng, with_occluder), width, height));
  return frames;
}

void write_synthetic_dataset(const fs::path& out_dir, std::size_t count, std::uint64_t seed,
                             std::size_t height, std::size_t width, bool with_occluder) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir))
    throw std::runtime_error("cannot create output directory '" + out_dir.string() + "'");
  const auto frames = synthesize_frames(count, seed, height, width, with_occluder);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "%04zu", i);
    write_frame(out_dir, id, frames[i]);
  }
}

}  // namespace acdnet
