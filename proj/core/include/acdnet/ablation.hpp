#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "acdnet/erp_geometry.hpp"
#include "acdnet/loss_metrics.hpp"
#include "acdnet/run_config.hpp"

namespace acdnet {

enum class AblationAxis { Fusion, DilationDirection, DilationCount, Padding, Iterative, Backbone };

std::string_view to_string(AblationAxis axis);
/// Accepts fusion, dilation-direction, dilation-count, padding, iterative,
/// backbone. Throws std::invalid_argument otherwise.
AblationAxis parse_ablation_axis(std::string_view text);

struct AblationVariant {
  std::string label;
  RunConfig config;
};

/// The variants of one axis, each a copy of `base` with one field changed.
std::vector<AblationVariant> ablation_variants(AblationAxis axis, const RunConfig& base);

struct AblationRow {
  std::string label;
  MetricsRecord metrics;
  double final_loss = 0.0;  // mean BerHu over the training set after the last step
  std::size_t parameters = 0;
  std::size_t steps = 0;
};

/// Trains every variant from the same seed on `train`, then scores it on
/// `eval`. `progress` receives one message per finished variant.
std::vector<AblationRow> run_ablation(AblationAxis axis, const RunConfig& base,
                                      const std::vector<PanoFrame>& train,
                                      const std::vector<PanoFrame>& eval,
                                      const std::function<void(const AblationRow&)>& progress = {});

/// Aligned table with MAE, RMSE, RMSElog, AbsRel, final loss and parameters.
std::string format_ablation_table(AblationAxis axis, const std::vector<AblationRow>& rows);
void write_ablation_csv(std::ostream& out, AblationAxis axis, const std::vector<AblationRow>& rows,
                        const std::string& config_text);

}  // namespace acdnet
