#include "acdnet/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "acdnet/adam.hpp"
#include "acdnet/dataset.hpp"
#include "acdnet/loss_metrics.hpp"

namespace fs = std::filesystem;

namespace acdnet {

std::size_t steps_per_epoch(std::size_t frames, std::size_t batch_size) {
  return (frames + batch_size - 1) / batch_size;
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, std::uint64_t epoch, std::size_t count) {
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  Rng rng(seed ^ (0x9E3779B97F4A7C15ULL * (epoch + 1)));
  for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

Tensor batch_loss(const Model& model, std::span<const PanoFrame* const> frames) {
  const Tensor image = image_batch(frames);
  const Tensor gt = depth_batch(frames);
  const DepthPyramid out = model.forward(image);
  return berhu_loss(out.d3, gt, mask_batch(frames));
}

double dataset_loss(const Model& model, const std::vector<PanoFrame>& frames) {
  NoGradGuard no_grad;
  double total = 0.0;
  double pixels = 0.0;
  for (const auto& f : frames) {
    const PanoFrame* one[] = {&f};
    const ValidMask mask = mask_batch(one);
    double n = 0.0;
    for (auto v : mask.valid) n += v ? 1.0 : 0.0;
    total += batch_loss(model, one).item() * n;
    pixels += n;
  }
  return total / pixels;
}

Model model_from_checkpoint(const Checkpoint& checkpoint, RunConfig* config_out) {
  const RunConfig config = parse_run_config(checkpoint.config_text);
  Model model = Model::build(config.net, config.seed);
  ParameterList targets = model.named_parameters();
  assign_parameters(checkpoint.params, targets);
  if (config_out) *config_out = config;
  return model;
}

namespace {

void write_checkpoint(const fs::path& path, const std::string& config_text, const Model& model,
                      const Adam& adam, std::uint64_t epoch) {
  Checkpoint ck;
  ck.config_text = config_text;
  ck.params = model.named_parameters();
  ck.state = TrainingState{epoch, adam.steps_taken(), adam.states()};
  // write then rename so an interrupted save never leaves a torn file
  const fs::path tmp = path.string() + ".tmp";
  save_checkpoint(tmp, ck);
  fs::rename(tmp, path);
}

}  // namespace

TrainResult train(const RunConfig& config, const std::vector<PanoFrame>& frames,
                  const TrainHooks& hooks, const std::optional<Checkpoint>& resume) {
  config.validate();
  if (frames.empty()) throw std::invalid_argument("train: no frames");
  for (const auto& f : frames)
    if (f.height != config.net.height || f.width != config.net.width)
      throw ShapeError("train: frame size " + std::to_string(f.height) + "x" + std::to_string(f.width) +
                       " does not match the configured " + std::to_string(config.net.height) + "x" +
                       std::to_string(config.net.width));

  const std::string config_text = to_config_text(config);
  TrainResult result{Model::build(config.net, config.seed), {}, {}};
  std::vector<Tensor> params = result.model.parameters();
  Adam adam(params, AdamOptions{config.lr});

  std::uint64_t start_step = 0;
  if (resume) {
    ParameterList targets = result.model.named_parameters();
    assign_parameters(resume->params, targets);
    if (resume->state) {
      adam.restore(resume->state->step, resume->state->adam);
      start_step = resume->state->step;
    }
  }

  const std::size_t per_epoch = steps_per_epoch(frames.size(), config.batch_size);
  std::uint64_t total = config.epochs * per_epoch;
  if (config.max_steps > 0) total = std::min<std::uint64_t>(total, config.max_steps);

  std::ofstream log;
  fs::path ckpt_path;
  if (hooks.write_files) {
    const fs::path out(config.out_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (!fs::is_directory(out)) throw std::runtime_error("cannot create output directory '" + out.string() + "'");
    ckpt_path = out / "checkpoint.bin";
    const fs::path log_path = out / "train.log";
    if (start_step == 0) {
      log.open(log_path, std::ios::trunc);
      std::string line;
      for (char ch : config_text) {
        if (line.empty()) line = "# ";
        line.push_back(ch);
        if (ch == '\n') {
          log << line;
          line.clear();
        }
      }
      log << "# step epoch loss\n";
    } else {
      log.open(log_path, std::ios::app);
    }
    if (!log) throw std::runtime_error("cannot write '" + log_path.string() + "'");
  }

  std::vector<std::size_t> order;
  std::uint64_t order_epoch = ~0ULL;
  for (std::uint64_t step = start_step; step < total; ++step) {
    const std::uint64_t epoch = step / per_epoch;
    const std::size_t slot = step % per_epoch;
    if (epoch != order_epoch) {
      order = epoch_order(config.seed, epoch, frames.size());
      order_epoch = epoch;
    }
    std::vector<const PanoFrame*> batch;
    for (std::size_t i = slot * config.batch_size;
         i < std::min(frames.size(), (slot + 1) * config.batch_size); ++i)
      batch.push_back(&frames[order[i]]);

    adam.zero_grad();
    const Tensor loss = batch_loss(result.model, batch);
    const double value = loss.item();
    if (!std::isfinite(value))
      throw TrainingError("non-finite loss at step " + std::to_string(step + 1) + " (epoch " +
                          std::to_string(epoch) + ")");
    backward(loss);
    try {
      adam.step();
    } catch (const NonFiniteGradient& e) {
      throw TrainingError("non-finite gradient at step " + std::to_string(step + 1) + ": " + e.what());
    }

    const StepRecord rec{step + 1, epoch, value};
    result.steps.push_back(rec);
    if (hooks.on_step) hooks.on_step(rec);
    if (log.is_open()) {
      char line[96];
      std::snprintf(line, sizeof(line), "%llu %llu %.17g\n", static_cast<unsigned long long>(rec.step),
                    static_cast<unsigned long long>(epoch), value);
      log << line << std::flush;
    }
    const bool epoch_end = slot + 1 == per_epoch;
    if (hooks.write_files && (epoch_end || step + 1 == total))
      write_checkpoint(ckpt_path, config_text, result.model, adam, epoch_end ? epoch + 1 : epoch);
  }
  adam.zero_grad();
  result.state = TrainingState{total / per_epoch, adam.steps_taken(), adam.states()};
  return result;
}

}  // namespace acdnet
