#include "acdnet/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace acdnet {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

template <typename T>
T parse_uint(std::string_view key, std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
    throw ConfigError("config: '" + std::string(key) + "' expects a non-negative integer, got '" +
                      std::string(v) + "'");
  return out;
}

double parse_real(std::string_view key, std::string_view v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(std::string(v), &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("config: '" + std::string(key) + "' expects a number, got '" + std::string(v) + "'");
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("config: '" + std::string(key) + "' expects true/false, got '" + std::string(v) + "'");
}

std::vector<std::size_t> parse_list(std::string_view key, std::string_view v) {
  std::vector<std::size_t> out;
  for (auto part : split(v, ',')) out.push_back(parse_uint<std::size_t>(key, part));
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string format_dilations(const std::vector<Dilation>& dilations) {
  std::string s;
  for (std::size_t i = 0; i < dilations.size(); ++i)
    s += (i ? "," : "") + std::to_string(dilations[i].dy) + "x" + std::to_string(dilations[i].dx);
  return s;
}

std::vector<Dilation> parse_dilations(std::string_view text) {
  std::vector<Dilation> out;
  for (auto part : split(text, ',')) {
    const auto x = part.find('x');
    if (x == std::string_view::npos)
      throw ConfigError("config: dilation '" + std::string(part) + "' is not of the form DYxDX");
    const int dy = parse_uint<int>("dilations", trim(part.substr(0, x)));
    const int dx = parse_uint<int>("dilations", trim(part.substr(x + 1)));
    if (dy < 1 || dx < 1) throw ConfigError("config: dilation components must be >= 1");
    out.push_back({dy, dx});
  }
  return out;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> kKeys{
      "height",     "width", "stem_channels", "blocks",    "widths",    "fusion",
      "padding",    "iterative", "dilations", "reduction", "epochs",    "batch_size",
      "lr",         "seed",  "max_steps",     "train_dir", "eval_dir",  "out_dir"};
  return kKeys;
}

void set_config_value(RunConfig& c, std::string_view key, std::string_view raw) {
  const std::string_view v = trim(raw);
  try {
    if (key == "height") c.net.height = parse_uint<std::size_t>(key, v);
    else if (key == "width") c.net.width = parse_uint<std::size_t>(key, v);
    else if (key == "stem_channels") c.net.stem_channels = parse_uint<std::size_t>(key, v);
    else if (key == "blocks") c.net.blocks = parse_list(key, v);
    else if (key == "widths") c.net.widths = parse_list(key, v);
    else if (key == "fusion") c.net.fusion = parse_fusion_strategy(v);
    else if (key == "padding") c.net.padding = parse_pad_mode(v);
    else if (key == "iterative") c.net.iterative = parse_bool(key, v);
    else if (key == "dilations") c.net.dilations = parse_dilations(v);
    else if (key == "reduction") c.net.reduction = parse_uint<std::size_t>(key, v);
    else if (key == "epochs") c.epochs = parse_uint<std::size_t>(key, v);
    else if (key == "batch_size") c.batch_size = parse_uint<std::size_t>(key, v);
    else if (key == "lr") c.lr = parse_real(key, v);
    else if (key == "seed") c.seed = parse_uint<std::uint64_t>(key, v);
    else if (key == "max_steps") c.max_steps = parse_uint<std::size_t>(key, v);
    else if (key == "train_dir") c.train_dir = std::string(v);
    else if (key == "eval_dir") c.eval_dir = std::string(v);
    else if (key == "out_dir") c.out_dir = std::string(v);
    else throw ConfigError("config: unknown key '" + std::string(key) + "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

RunConfig parse_run_config(std::string_view text, RunConfig base) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    set_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), std::move(base));
}

std::string to_config_text(const RunConfig& c) {
  std::ostringstream os;
  os << "height = " << c.net.height << '\n'
     << "width = " << c.net.width << '\n'
     << "stem_channels = " << c.net.stem_channels << '\n'
     << "blocks = " << join(c.net.blocks) << '\n'
     << "widths = " << join(c.net.widths) << '\n'
     << "fusion = " << to_string(c.net.fusion) << '\n'
     << "padding = " << to_string(c.net.padding) << '\n'
     << "iterative = " << (c.net.iterative ? "true" : "false") << '\n'
     << "dilations = " << format_dilations(c.net.dilations) << '\n'
     << "reduction = " << c.net.reduction << '\n'
     << "epochs = " << c.epochs << '\n'
     << "batch_size = " << c.batch_size << '\n'
     << "lr = " << format_real(c.lr) << '\n'
     << "seed = " << c.seed << '\n'
     << "max_steps = " << c.max_steps << '\n'
     << "train_dir = " << c.train_dir << '\n'
     << "eval_dir = " << c.eval_dir << '\n'
     << "out_dir = " << c.out_dir << '\n';
  return os.str();
}

void RunConfig::validate() const {
  if (!(lr > 0.0) && lr != 0.0) throw ConfigError("config: lr must be >= 0");
  if (batch_size == 0) throw ConfigError("config: batch_size must be >= 1");
  try {
    net.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace acdnet
