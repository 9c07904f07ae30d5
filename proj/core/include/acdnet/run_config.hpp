#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "acdnet/network.hpp"

namespace acdnet {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Everything a run depends on. The text form is one `key = value` per line;
/// '#' starts a comment. Lists are comma separated and dilations are written
/// as `dy x dx`, e.g. `dilations = 1x1, 1x2, 1x4, 2x1`.
struct RunConfig {
  NetConfig net;
  std::size_t epochs = 10;
  std::size_t batch_size = 2;
  double lr = 1e-4;
  std::uint64_t seed = 1;
  /// Stop after this many optimizer steps in total (0 = no cap).
  std::size_t max_steps = 0;
  std::string train_dir;
  std::string eval_dir;
  std::string out_dir = "runs/default";

  /// Throws ConfigError when lr is negative or NaN, batch_size == 0 or the
  /// network is invalid. lr = 0 is allowed (a frozen run).
  void validate() const;
};

/// Sets one key from its text value. Throws ConfigError on unknown keys or
/// unparsable values.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

/// Applies a whole config text on top of `base`.
RunConfig parse_run_config(std::string_view text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

/// Canonical echo of every key; parse_run_config(to_config_text(c)) == c.
std::string to_config_text(const RunConfig& config);

/// Keys accepted by set_config_value, in echo order.
const std::vector<std::string>& config_keys();

std::string format_dilations(const std::vector<Dilation>& dilations);
std::vector<Dilation> parse_dilations(std::string_view text);

}  // namespace acdnet
