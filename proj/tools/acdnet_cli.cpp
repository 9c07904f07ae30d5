// acdnet command-line tool: synth, train, eval, gradcheck, export-pcd, ablate.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "acdnet/ablation.hpp"
#include "acdnet/checkpoint.hpp"
#include "acdnet/dataset.hpp"
#include "acdnet/evaluation.hpp"
#include "acdnet/gradcheck.hpp"
#include "acdnet/run_config.hpp"
#include "acdnet/training.hpp"

namespace fs = std::filesystem;
using namespace acdnet;

namespace {

// --config FILE, then one flag per config key (underscores become dashes),
// then repeated --set key=value. Later sources win.
struct ConfigFlags {
  std::string file;
  std::map<std::string, std::string> values;
  std::vector<std::string> overrides;

  void attach(CLI::App& app) {
    app.add_option("--config", file, "Config file (key = value lines)")->check(CLI::ExistingFile);
    for (const auto& key : config_keys()) {
      std::string flag = "--" + key;
      for (auto& ch : flag)
        if (ch == '_') ch = '-';
      app.add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; },
                                           "Config key '" + key + "'");
    }
    app.add_option("--set", overrides, "Extra key=value override (repeatable)");
  }

  RunConfig resolve() const {
    RunConfig c;
    if (!file.empty()) c = load_run_config(file);
    for (const auto& [k, v] : values) set_config_value(c, k, v);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      set_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (c.net.width != 2 * c.net.height && values.count("width") == 0) c.net.width = 2 * c.net.height;
    c.validate();
    return c;
  }
};

std::vector<std::string> frame_ids(const DatasetDir& d) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < d.size(); ++i) ids.push_back(d.files(i).id);
  return ids;
}

int cmd_synth(const std::string& out, std::size_t count, std::uint64_t seed, std::size_t height,
              bool occluder) {
  write_synthetic_dataset(out, count, seed, height, 2 * height, occluder);
  std::cout << "wrote " << count << " frames (" << height << "x" << 2 * height << ", seed " << seed << ") to "
            << out << '\n';
  return 0;
}

int cmd_train(const RunConfig& config, const std::string& resume_path, bool quiet) {
  if (config.train_dir.empty()) throw ConfigError("train: train_dir is not set");
  const auto frames = DatasetDir::open(config.train_dir).load_all();
  std::optional<Checkpoint> resume;
  if (!resume_path.empty()) resume = load_checkpoint(resume_path);
  TrainHooks hooks;
  if (!quiet)
    hooks.on_step = [](const StepRecord& r) {
      std::printf("step %llu  epoch %llu  loss %.6f\n", static_cast<unsigned long long>(r.step),
                  static_cast<unsigned long long>(r.epoch), r.loss);
      std::fflush(stdout);
    };
  const TrainResult result = train(config, frames, hooks, resume);
  std::cout << "trained " << result.steps.size() << " steps; checkpoint "
            << (fs::path(config.out_dir) / "checkpoint.bin").string() << '\n';
  return 0;
}

int cmd_eval(const std::string& ckpt_path, std::string data_dir, const std::string& csv_path, bool gt_only) {
  RunConfig config;
  std::optional<Model> model;
  if (!gt_only) {
    model = model_from_checkpoint(load_checkpoint(ckpt_path), &config);
    if (data_dir.empty()) data_dir = config.eval_dir.empty() ? config.train_dir : config.eval_dir;
  }
  if (data_dir.empty()) throw ConfigError("eval: no dataset directory given");
  const DatasetDir dir = DatasetDir::open(data_dir);
  const auto frames = dir.load_all();
  if (model)
    for (const auto& f : frames)
      if (f.height != config.net.height || f.width != config.net.width)
        throw ShapeError("eval: dataset frames are " + std::to_string(f.height) + "x" + std::to_string(f.width) +
                         " but the checkpoint expects " + std::to_string(config.net.height) + "x" +
                         std::to_string(config.net.width));
  const DepthPredictor predictor = model ? model_predictor(*model) : ground_truth_predictor();
  const EvalReport report = evaluate(predictor, frames, frame_ids(dir));
  std::cout << format_table(report);
  if (!csv_path.empty()) {
    std::string echo = model ? to_config_text(config) : "predictor = ground_truth\n";
    echo += "dataset = " + data_dir + "\n";
    write_csv(csv_path, report, echo);
  }
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, std::size_t seeds, const std::string& fault, const std::string& filter) {
  if (!fault.empty()) {
    if (fault != "conv2d") throw std::invalid_argument("unknown fault '" + fault + "' (supported: conv2d)");
    fault::set_conv2d_backward_fault(true);
  }
  GradcheckOptions opts;
  opts.seed = seed;
  opts.seeds = seeds;
  std::vector<GradcheckCase> cases;
  for (auto& c : default_gradcheck_cases())
    if (filter.empty() || c.name.find(filter) != std::string::npos) cases.push_back(std::move(c));
  if (cases.empty()) throw std::invalid_argument("no gradcheck case matches '" + filter + "'");
  const auto results = run_gradcheck(cases, opts);
  std::cout << format_gradcheck_report(results, opts);
  bool ok = true;
  for (const auto& r : results) ok = ok && r.passed;
  if (!ok) {
    std::cerr << "gradcheck failed:";
    for (const auto& r : results)
      if (!r.passed) std::cerr << ' ' << r.name;
    std::cerr << '\n';
  }
  return ok ? 0 : 1;
}

int cmd_export_pcd(const std::string& data_dir, const std::string& frame_id, const std::string& out,
                   const std::string& ckpt_path) {
  const DatasetDir dir = DatasetDir::open(data_dir);
  const PanoFrame frame = dir.load(dir.find(frame_id));
  std::vector<double> depth = frame.depth;
  if (!ckpt_path.empty()) {
    RunConfig config;
    const Model model = model_from_checkpoint(load_checkpoint(ckpt_path), &config);
    if (frame.height != config.net.height || frame.width != config.net.width)
      throw ShapeError("export-pcd: frame size does not match the checkpoint");
    depth = predict_depth(model, frame);
    for (auto& d : depth) d = std::min(d, kMaxEvalDepth);
  }
  const PointCloud cloud = depth_to_pointcloud(depth, frame.rgb, frame.mask, frame.width, frame.height);
  write_ply(fs::path(out), cloud);
  std::cout << "wrote " << cloud.points.size() << " points to " << out;
  if (cloud.skipped_negative) std::cout << " (" << cloud.skipped_negative << " negative depths skipped)";
  std::cout << '\n';
  return 0;
}

int cmd_ablate(const std::string& axis_name, const RunConfig& config, const std::string& csv_path) {
  const AblationAxis axis = parse_ablation_axis(axis_name);
  if (config.train_dir.empty()) throw ConfigError("ablate: train_dir is not set");
  const auto train_frames = DatasetDir::open(config.train_dir).load_all();
  const auto eval_frames =
      config.eval_dir.empty() ? train_frames : DatasetDir::open(config.eval_dir).load_all();
  const auto rows = run_ablation(axis, config, train_frames, eval_frames, [](const AblationRow& r) {
    std::printf("finished %s: final_loss %.6f  MAE %.4f\n", r.label.c_str(), r.final_loss, r.metrics.mae);
    std::fflush(stdout);
  });
  std::cout << format_ablation_table(axis, rows);
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot open '" + csv_path + "' for writing");
    write_ablation_csv(out, axis, rows, to_config_text(config));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ACDNet panoramic depth estimation toolkit"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Render synthetic box-room RGB-D panoramas");
  std::string synth_out;
  std::size_t synth_count = 8, synth_height = 64;
  std::uint64_t synth_seed = 7;
  bool synth_occluder = false;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--count", synth_count, "Number of frames")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "Random seed");
  synth->add_option("--height", synth_height, "Image height (width is twice this)")->check(CLI::PositiveNumber);
  synth->add_flag("--occluder", synth_occluder, "Place a box obstacle in each room");

  auto* train_cmd = app.add_subcommand("train", "Train on a dataset directory");
  ConfigFlags train_flags;
  train_flags.attach(*train_cmd);
  std::string resume_path;
  bool quiet = false;
  train_cmd->add_option("--resume", resume_path, "Continue from this checkpoint")->check(CLI::ExistingFile);
  train_cmd->add_flag("--quiet", quiet, "Do not print per-step losses");

  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a dataset");
  std::string eval_ckpt, eval_data, eval_csv;
  bool eval_gt = false;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", eval_data, "Dataset directory (default: the checkpoint's eval_dir)");
  eval_cmd->add_option("--csv", eval_csv, "Also write a comma separated table here");
  eval_cmd->add_flag("--ground-truth", eval_gt, "Score the ground truth against itself");

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every backward pass");
  std::uint64_t grad_seed = GradcheckOptions{}.seed;
  std::size_t grad_seeds = GradcheckOptions{}.seeds;
  std::string grad_fault, grad_filter;
  grad_cmd->add_option("--seed", grad_seed, "First seed");
  grad_cmd->add_option("--seeds", grad_seeds, "Seeds per check")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--inject-fault", grad_fault, "Corrupt a backward pass on purpose (conv2d)");
  grad_cmd->add_option("--filter", grad_filter, "Only run checks whose name contains this");

  auto* pcd_cmd = app.add_subcommand("export-pcd", "Write a frame as an ASCII PLY point cloud");
  std::string pcd_data, pcd_frame, pcd_out, pcd_ckpt;
  pcd_cmd->add_option("--data", pcd_data, "Dataset directory")->required();
  pcd_cmd->add_option("--frame", pcd_frame, "Frame id, e.g. 0003")->required();
  pcd_cmd->add_option("--out", pcd_out, "Output .ply path")->required();
  pcd_cmd->add_option("--checkpoint", pcd_ckpt, "Use this model's prediction instead of ground truth")
      ->check(CLI::ExistingFile);

  auto* ablate_cmd = app.add_subcommand("ablate", "Train and compare the variants of one ablation axis");
  ConfigFlags ablate_flags;
  ablate_flags.attach(*ablate_cmd);
  std::string axis, ablate_csv;
  ablate_cmd->add_option("--axis", axis,
                         "fusion, dilation-direction, dilation-count, padding, iterative or backbone")
      ->required();
  ablate_cmd->add_option("--csv", ablate_csv, "Also write a comma separated table here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return cmd_synth(synth_out, synth_count, synth_seed, synth_height, synth_occluder);
    if (*train_cmd) return cmd_train(train_flags.resolve(), resume_path, quiet);
    if (*eval_cmd) {
      if (eval_ckpt.empty() && !eval_gt) throw std::invalid_argument("eval: pass --checkpoint or --ground-truth");
      return cmd_eval(eval_ckpt, eval_data, eval_csv, eval_gt);
    }
    if (*grad_cmd) return cmd_gradcheck(grad_seed, grad_seeds, grad_fault, grad_filter);
    if (*pcd_cmd) return cmd_export_pcd(pcd_data, pcd_frame, pcd_out, pcd_ckpt);
    if (*ablate_cmd) return cmd_ablate(axis, ablate_flags.resolve(), ablate_csv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
