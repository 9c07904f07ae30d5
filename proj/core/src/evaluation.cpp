#include "acdnet/evaluation.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "acdnet/dataset.hpp"

namespace acdnet {

std::vector<double> predict_depth(const Model& model, const PanoFrame& frame) {
  NoGradGuard no_grad;
  const PanoFrame* one[] = {&frame};
  const DepthPyramid out = model.forward(image_batch(one));
  return {out.d3.data().begin(), out.d3.data().end()};
}

DepthPredictor model_predictor(const Model& model) {
  return [&model](const PanoFrame& f) { return predict_depth(model, f); };
}

DepthPredictor ground_truth_predictor() {
  return [](const PanoFrame& f) { return f.depth; };
}

EvalReport evaluate(const DepthPredictor& predictor, const std::vector<PanoFrame>& frames,
                    const std::vector<std::string>& ids) {
  if (ids.size() != frames.size()) throw std::invalid_argument("evaluate: one id per frame required");
  EvalReport report;
  report.ids = ids;
  for (const auto& f : frames) {
    const auto pred = predictor(f);
    if (pred.size() != f.depth.size())
      throw ShapeError("evaluate: prediction has " + std::to_string(pred.size()) + " values, frame has " +
                       std::to_string(f.depth.size()));
    report.frames.push_back(compute_metrics(pred, f.depth, f.mask));
  }
  report.total = aggregate(report.frames);
  return report;
}

namespace {

const char* kColumns[] = {"frame", "MAE", "RMSE", "RMSElog", "AbsRel", "d1", "d2", "d3", "pixels"};

std::vector<std::string> cells(const std::string& id, const MetricsRecord& m) {
  auto num = [](double v, const char* fmt) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return std::string(buf);
  };
  return {id,
          num(m.mae, "%.4f"),
          num(m.rmse, "%.4f"),
          num(m.rmse_log, "%.4f"),
          num(m.abs_rel, "%.4f"),
          num(m.delta1, "%.2f"),
          num(m.delta2, "%.2f"),
          num(m.delta3, "%.2f"),
          std::to_string(m.pixel_count)};
}

}  // namespace

std::string format_table(const EvalReport& report) {
  std::vector<std::vector<std::string>> rows;
  rows.emplace_back(std::begin(kColumns), std::end(kColumns));
  for (std::size_t i = 0; i < report.frames.size(); ++i) rows.push_back(cells(report.ids[i], report.frames[i]));
  rows.push_back(cells("all", report.total));
  std::vector<std::size_t> width(rows[0].size(), 0);
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  std::ostringstream os;
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c) os << "  ";
      const std::string pad(width[c] - r[c].size(), ' ');
      os << (c == 0 ? r[c] + pad : pad + r[c]);
    }
    os << '\n';
  }
  return os.str();
}

void write_csv(std::ostream& out, const EvalReport& report, const std::string& config_text) {
  std::istringstream cfg(config_text);
  for (std::string line; std::getline(cfg, line);) out << "# " << line << '\n';
  for (std::size_t c = 0; c < std::size(kColumns); ++c) out << (c ? "," : "") << kColumns[c];
  out << '\n';
  auto row = [&out](const std::string& id, const MetricsRecord& m) {
    char buf[320];
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%llu\n", id.c_str(),
                  m.mae, m.rmse, m.rmse_log, m.abs_rel, m.delta1, m.delta2, m.delta3,
                  static_cast<unsigned long long>(m.pixel_count));
    out << buf;
  };
  for (std::size_t i = 0; i < report.frames.size(); ++i) row(report.ids[i], report.frames[i]);
  row("all", report.total);
}

void write_csv(const std::filesystem::path& path, const EvalReport& report, const std::string& config_text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_csv(out, report, config_text);
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace acdnet
