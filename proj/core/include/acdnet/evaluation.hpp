#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "acdnet/erp_geometry.hpp"
#include "acdnet/loss_metrics.hpp"
#include "acdnet/network.hpp"

namespace acdnet {

/// Maps a frame to a row-major depth prediction of the same size.
using DepthPredictor = std::function<std::vector<double>(const PanoFrame&)>;

/// Full-resolution D3 of `model` for one frame, without recording.
std::vector<double> predict_depth(const Model& model, const PanoFrame& frame);
DepthPredictor model_predictor(const Model& model);
/// Returns the frame's own ground truth (a sanity baseline).
DepthPredictor ground_truth_predictor();

struct EvalReport {
  std::vector<std::string> ids;
  std::vector<MetricsRecord> frames;
  MetricsRecord total;  // pixel-weighted over frames
};

/// Scores every frame in order. Throws ShapeError when a prediction has the
/// wrong size.
EvalReport evaluate(const DepthPredictor& predictor, const std::vector<PanoFrame>& frames,
                    const std::vector<std::string>& ids);

/// Column-aligned text table, one row per frame plus an "all" row.
std::string format_table(const EvalReport& report);
/// Comma separated table with the same columns; `config_text` lines are
/// echoed first as '#' comments.
void write_csv(std::ostream& out, const EvalReport& report, const std::string& config_text);
void write_csv(const std::filesystem::path& path, const EvalReport& report,
               const std::string& config_text);

}  // namespace acdnet
