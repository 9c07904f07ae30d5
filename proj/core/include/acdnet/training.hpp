#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "acdnet/checkpoint.hpp"
#include "acdnet/erp_geometry.hpp"
#include "acdnet/network.hpp"
#include "acdnet/run_config.hpp"

namespace acdnet {

/// Raised when a step produces a NaN/Inf loss or gradient; the message names
/// the step.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepRecord {
  std::uint64_t step = 0;  // 1-based
  std::uint64_t epoch = 0;  // 0-based
  double loss = 0.0;
};

struct TrainHooks {
  /// Called after every optimizer step.
  std::function<void(const StepRecord&)> on_step;
  /// Write checkpoint.bin and train.log into config.out_dir.
  bool write_files = true;
};

struct TrainResult {
  Model model;
  std::vector<StepRecord> steps;  // steps run by this call only
  TrainingState state;
};

/// Number of optimizer steps in one pass over `frames`.
std::size_t steps_per_epoch(std::size_t frames, std::size_t batch_size);

/// Frame order of `epoch`; depends only on (seed, epoch, count).
std::vector<std::size_t> epoch_order(std::uint64_t seed, std::uint64_t epoch, std::size_t count);

/// BerHu on the full-resolution prediction for a batch of frames.
Tensor batch_loss(const Model& model, std::span<const PanoFrame* const> frames);

/// Adam training with BerHu on D3. Frames are visited in a per-epoch shuffled
/// order, `batch_size` at a time, for `epochs` epochs or until `max_steps`
/// total steps. With `resume`, weights and optimizer state are restored and
/// training continues at the stored step, reproducing an uninterrupted run.
/// When hooks.write_files is set, out_dir receives train.log (config echo,
/// then `step epoch loss` lines) and checkpoint.bin after every epoch and at
/// the final step.
TrainResult train(const RunConfig& config, const std::vector<PanoFrame>& frames,
                  const TrainHooks& hooks = {}, const std::optional<Checkpoint>& resume = {});

/// Mean BerHu over every frame, evaluated without recording.
double dataset_loss(const Model& model, const std::vector<PanoFrame>& frames);

/// Rebuilds the model described by a checkpoint's config echo and loads its
/// weights.
Model model_from_checkpoint(const Checkpoint& checkpoint, RunConfig* config_out = nullptr);

}  // namespace acdnet
