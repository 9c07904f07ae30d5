#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acdnet/erp_geometry.hpp"
#include "acdnet/loss_metrics.hpp"
#include "acdnet/tensor.hpp"

namespace acdnet {

/// Files of one frame: NNNN.rgb.png, NNNN.depth.png and optionally
/// NNNN.mask.png (8-bit, nonzero = valid).
struct FrameFiles {
  std::string id;
  std::filesystem::path rgb;
  std::filesystem::path depth;
  std::optional<std::filesystem::path> mask;
};

/// A directory of RGB-D panoramas: 8-bit RGB and 16-bit millimetre depth
/// (0 = missing) with W = 2H.
class DatasetDir {
 public:
  /// Scans `root` for frames, sorted by id. Throws std::runtime_error when
  /// the directory is missing or a depth file lacks its RGB partner.
  static DatasetDir open(const std::filesystem::path& root);

  const std::filesystem::path& root() const { return root_; }
  std::size_t size() const { return frames_.size(); }
  const FrameFiles& files(std::size_t i) const { return frames_.at(i); }
  /// Index of the frame with this id; throws std::out_of_range if absent.
  std::size_t find(const std::string& id) const;

  /// Loads and validates one frame (shared size, W = 2H).
  PanoFrame load(std::size_t i) const;
  std::vector<PanoFrame> load_all() const;

 private:
  std::filesystem::path root_;
  std::vector<FrameFiles> frames_;
};

/// Writes frame `id` as NNNN.rgb.png / NNNN.depth.png (depth in mm).
void write_frame(const std::filesystem::path& dir, const std::string& id, const PanoFrame& frame);

/// Round-trips depth through the millimetre encoding and refreshes the mask.
PanoFrame quantize_depth(PanoFrame frame);

/// Network input (B, 3, H, W) with values rgb / 255 - 0.5.
Tensor image_batch(std::span<const PanoFrame* const> frames);
/// Ground-truth depth (B, 1, H, W).
Tensor depth_batch(std::span<const PanoFrame* const> frames);
ValidMask mask_batch(std::span<const PanoFrame* const> frames);

/// Randomized room drawn from `rng`: half extents 1.5-3 m horizontally and
/// 1.2-1.6 m vertically, camera within 30% of the centre, random albedos.
BoxRoom random_room(Rng& rng, bool with_occluder);

/// `count` rendered frames, deterministic per seed.
std::vector<PanoFrame> synthesize_frames(std::size_t count, std::uint64_t seed,
                                         std::size_t height, std::size_t width,
                                         bool with_occluder = false);

/// Renders and writes `count` frames named 0000, 0001, ... into `out_dir`.
void write_synthetic_dataset(const std::filesystem::path& out_dir, std::size_t count,
                             std::uint64_t seed, std::size_t height, std::size_t width,
                             bool with_occluder = false);

}  // namespace acdnet
