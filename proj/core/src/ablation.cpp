#include "acdnet/ablation.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "acdnet/evaluation.hpp"
#include "acdnet/training.hpp"

namespace acdnet {

std::string_view to_string(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::Fusion: return "fusion";
    case AblationAxis::DilationDirection: return "dilation-direction";
    case AblationAxis::DilationCount: return "dilation-count";
    case AblationAxis::Padding: return "padding";
    case AblationAxis::Iterative: return "iterative";
    case AblationAxis::Backbone: return "backbone";
  }
  return "?";
}

AblationAxis parse_ablation_axis(std::string_view text) {
  for (auto a : {AblationAxis::Fusion, AblationAxis::DilationDirection, AblationAxis::DilationCount,
                 AblationAxis::Padding, AblationAxis::Iterative, AblationAxis::Backbone})
    if (to_string(a) == text) return a;
  throw std::invalid_argument("unknown ablation axis '" + std::string(text) +
                              "' (expected fusion, dilation-direction, dilation-count, padding, "
                              "iterative or backbone)");
}

std::vector<AblationVariant> ablation_variants(AblationAxis axis, const RunConfig& base) {
  std::vector<AblationVariant> out;
  auto add = [&](std::string label, auto&& edit) {
    RunConfig c = base;
    edit(c);
    out.push_back({std::move(label), std::move(c)});
  };
  switch (axis) {
    case AblationAxis::Fusion:
      for (auto s : {FusionStrategy::ChannelWise, FusionStrategy::SimpleAverage, FusionStrategy::RowWise,
                     FusionStrategy::PixelWise})
        add(std::string(to_string(s)), [s](RunConfig& c) { c.net.fusion = s; });
      break;
    case AblationAxis::DilationDirection:
      add("X-axis", [](RunConfig& c) { c.net.dilations = {{1, 1}, {1, 2}, {1, 3}, {1, 4}}; });
      add("Y-axis", [](RunConfig& c) { c.net.dilations = {{1, 1}, {2, 1}, {3, 1}, {4, 1}}; });
      add("Both", [](RunConfig& c) { c.net.dilations = default_dilations(); });
      break;
    case AblationAxis::DilationCount: {
      const auto& d = default_dilations();
      add("Two", [&](RunConfig& c) { c.net.dilations.assign(d.begin(), d.begin() + 2); });
      add("Three", [&](RunConfig& c) { c.net.dilations.assign(d.begin(), d.begin() + 3); });
      add("Four", [&](RunConfig& c) { c.net.dilations = d; });
      add("Five", [&](RunConfig& c) {
        c.net.dilations = d;
        c.net.dilations.push_back({1, 8});
      });
      break;
    }
    case AblationAxis::Padding:
      for (auto m : {PadMode::Zero, PadMode::LeftRight, PadMode::Circular})
        add(std::string(table_label(m)), [m](RunConfig& c) { c.net.padding = m; });
      break;
    case AblationAxis::Iterative:
      add("w/ iter", [](RunConfig& c) { c.net.iterative = true; });
      add("w/o iter", [](RunConfig& c) { c.net.iterative = false; });
      break;
    case AblationAxis::Backbone:
      add("[1,1,1,1]", [](RunConfig& c) { c.net.blocks = {1, 1, 1, 1}; });
      add("[2,2,2,2]", [](RunConfig& c) { c.net.blocks = {2, 2, 2, 2}; });
      add("[3,4,6,3]", [](RunConfig& c) { c.net.blocks = {3, 4, 6, 3}; });
      break;
  }
  return out;
}

std::vector<AblationRow> run_ablation(AblationAxis axis, const RunConfig& base,
                                      const std::vector<PanoFrame>& train_frames,
                                      const std::vector<PanoFrame>& eval_frames,
                                      const std::function<void(const AblationRow&)>& progress) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < eval_frames.size(); ++i) ids.push_back(std::to_string(i));
  const auto variants = ablation_variants(axis, base);
  // fail before any training if one variant cannot run at this size
  for (const auto& v : variants) {
    try {
      v.config.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("ablation variant '" + v.label + "': " + e.what());
    }
  }
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    TrainHooks hooks;
    hooks.write_files = false;
    const TrainResult result = train(v.config, train_frames, hooks);
    AblationRow row;
    row.label = v.label;
    row.steps = result.steps.size();
    row.parameters = result.model.parameter_count();
    row.final_loss = dataset_loss(result.model, train_frames);
    row.metrics = evaluate(model_predictor(result.model), eval_frames, ids).total;
    if (progress) progress(row);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_ablation_table(AblationAxis axis, const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  char line[256];
  std::size_t w = to_string(axis).size();
  for (const auto& r : rows) w = std::max(w, r.label.size());
  std::snprintf(line, sizeof(line), "%-*s  %8s  %8s  %8s  %8s  %11s  %10s\n", static_cast<int>(w),
                std::string(to_string(axis)).c_str(), "MAE", "RMSE", "RMSElog", "AbsRel", "final_loss", "params");
  os << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-*s  %8.4f  %8.4f  %8.4f  %8.4f  %11.6f  %10zu\n", static_cast<int>(w),
                  r.label.c_str(), r.metrics.mae, r.metrics.rmse, r.metrics.rmse_log, r.metrics.abs_rel,
                  r.final_loss, r.parameters);
    os << line;
  }
  return os.str();
}

void write_ablation_csv(std::ostream& out, AblationAxis axis, const std::vector<AblationRow>& rows,
                        const std::string& config_text) {
  std::istringstream cfg(config_text);
  for (std::string line; std::getline(cfg, line);) out << "# " << line << '\n';
  out << "# axis = " << to_string(axis) << '\n';
  out << "variant,MAE,RMSE,RMSElog,AbsRel,d1,d2,d3,final_loss,params,steps\n";
  char line[384];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%zu,%zu\n",
                  r.label.c_str(), r.metrics.mae, r.metrics.rmse, r.metrics.rmse_log, r.metrics.abs_rel,
                  r.metrics.delta1, r.metrics.delta2, r.metrics.delta3, r.final_loss, r.parameters, r.steps);
    out << line;
  }
}

}  // namespace acdnet
