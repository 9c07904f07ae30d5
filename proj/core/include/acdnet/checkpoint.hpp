#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "acdnet/adam.hpp"
#include "acdnet/layers.hpp"

namespace acdnet {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Optimizer progress stored alongside the weights so training can resume.
struct TrainingState {
  std::uint64_t epoch = 0;  // epochs completed
  std::uint64_t step = 0;   // Adam steps completed
  std::vector<AdamState> adam;  // one entry per parameter, same order
};

struct Checkpoint {
  std::string config_text;
  ParameterList params;
  std::optional<TrainingState> state;
};

/// Binary layout (all integers unsigned little-endian, reals IEEE-754
/// binary64 little-endian):
///
///   "ACDNCKPT"                 8-byte magic
///   u32 version                currently 1
///   u64 len, bytes             config echo (key = value text)
///   u64 count                  number of parameter arrays
///   count x { u64 len, name bytes, u64 n, c, h, w, f64 values[n*c*h*w] }
///   u8 has_state
///   if has_state: u64 epoch, u64 step,
///                 count x { f64 m[numel], f64 v[numel] }
///   u64 checksum               FNV-1a 64 over every preceding byte
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);

/// Throws CheckpointError on bad magic, truncation or checksum mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies values by name into `targets`. Every target must be present with an
/// identical shape.
void assign_parameters(const ParameterList& source, ParameterList& targets);

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size,
                      std::uint64_t hash = 0xcbf29ce484222325ULL);

}  // namespace acdnet
