#include "gesture/io.hpp"

#include "gesture/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace gesture {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

bool get_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

template <typename Int = long long>
Int parse_integer(std::string_view text, const std::string& field) {
  Int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(field, "expected an integer, got '" + std::string(text) + "'");
  }
  return value;
}

void check_text_field(const std::string& value, const std::string& field) {
  if (value.find_first_of(",\n\r") != std::string::npos) {
    throw DataError(field + " '" + value + "' must not contain commas or line breaks");
  }
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
  return in;
}

void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

}  // namespace

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

double parse_real(std::string_view text, const std::string& field) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ParseError(field, "expected a number, got '" + std::string(text) + "'");
  }
  return value;
}

// ---------------------------------------------------------------------------
// Landmark videos

void write_landmark_video(const GestureVideo& video, std::ostream& out) {
  check_text_field(video.source_id(), "source_id");
  out << kLandmarkHeader << '\n' << "source_id=" << video.source_id() << '\n';
  if (video.label()) {
    check_text_field(*video.label(), "label");
    out << "label=" << *video.label() << '\n';
  }
  for (const LandmarkFrame& frame : video.frames()) {
    for (int i = 0; i < kLandmarkCount; ++i) {
      for (int c = 0; c < kAxisCount; ++c) {
        if (i || c) out << ',';
        out << format_real(frame(i, c));
      }
    }
    out << '\n';
  }
}

void write_landmark_video(const GestureVideo& video, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  write_landmark_video(video, out);
  finish_write(out, path);
}

GestureVideo read_landmark_video(std::istream& in, const std::string& name) {
  std::string line;
  if (!get_line(in, line) || line != kLandmarkHeader) {
    throw ParseError(name + ": header", "expected '" + std::string(kLandmarkHeader) + "'");
  }
  if (!get_line(in, line) || line.rfind("source_id=", 0) != 0) {
    throw ParseError(name + ": source_id", "missing source_id line");
  }
  std::string source_id = line.substr(10);
  std::optional<std::string> label;
  std::vector<LandmarkFrame> frames;
  bool first = true;
  while (get_line(in, line)) {
    if (line.empty()) continue;
    if (first && line.rfind("label=", 0) == 0) {
      label = line.substr(6);
      first = false;
      continue;
    }
    first = false;
    const std::string where = name + ": frame " + std::to_string(frames.size());
    const auto cells = split(line, ',');
    if (cells.size() != static_cast<std::size_t>(kLandmarkCount * kAxisCount)) {
      throw ParseError(where, "expected 63 values, got " + std::to_string(cells.size()));
    }
    LandmarkFrame frame;
    for (int i = 0; i < kLandmarkCount; ++i) {
      for (int c = 0; c < kAxisCount; ++c) {
        const double v = parse_real(cells[static_cast<std::size_t>(i * kAxisCount + c)], where);
        if (!std::isfinite(v)) throw ParseError(where, "non-finite coordinate");
        frame(i, c) = v;
      }
    }
    frames.push_back(frame);
  }
  return GestureVideo(std::move(frames), std::move(source_id), std::move(label));
}

GestureVideo read_landmark_video(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  return read_landmark_video(in, path.string());
}

// ---------------------------------------------------------------------------
// Feature CSV

void write_feature_csv(std::span<const FeatureMatrix> features, std::ostream& out) {
  out << kFeatureCsvHeader << '\n';
  for (const FeatureMatrix& f : features) {
    check_text_field(f.source_id(), "source_id");
    const std::string label = f.label().value_or("");
    check_text_field(label, "label");
    for (int i = 0; i < kLandmarkCount; ++i) {
      out << i;
      for (int c = 0; c < kAxisCount; ++c) out << ',' << format_real(f.values()(i, c));
      out << ',' << f.source_id() << ',' << label << '\n';
    }
  }
}

void write_feature_csv(std::span<const FeatureMatrix> features, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  write_feature_csv(features, out);
  finish_write(out, path);
}

std::vector<FeatureMatrix> read_feature_csv(std::istream& in, const std::string& name) {
  std::string line;
  if (!get_line(in, line) || line != kFeatureCsvHeader) {
    throw ParseError(name + ": header", "expected '" + std::string(kFeatureCsvHeader) + "'");
  }
  std::vector<FeatureMatrix> out;
  LandmarkTable values;
  std::string source_id;
  std::string label;
  int row = 0;
  std::size_t line_no = 1;
  while (get_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = name + ": line " + std::to_string(line_no);
    const auto cells = split(line, ',');
    if (cells.size() != 6) throw ParseError(where, "expected 6 cells, got " + std::to_string(cells.size()));
    if (parse_integer(cells[0], where + " lm") != row) {
      throw ParseError(where + " lm", "expected landmark index " + std::to_string(row));
    }
    static constexpr const char* kColumns[] = {"var_x", "var_y", "var_z"};
    for (int c = 0; c < kAxisCount; ++c) {
      const std::string field = where + " " + kColumns[c];
      const double v = parse_real(cells[static_cast<std::size_t>(c + 1)], field);
      if (!std::isfinite(v) || v < 0.0) throw ParseError(field, "variance must be finite and >= 0");
      values(row, c) = v;
    }
    if (row == 0) {
      source_id = std::string(cells[4]);
      label = std::string(cells[5]);
    } else if (cells[4] != source_id || cells[5] != label) {
      throw ParseError(where, "source_id/label changed inside a 21-row block");
    }
    if (++row == kLandmarkCount) {
      out.emplace_back(values, source_id,
                       label.empty() ? std::nullopt : std::optional<std::string>(label));
      row = 0;
    }
  }
  if (row != 0) {
    throw ParseError(name + ": rows", "data row count is not a multiple of 21 (" +
                                          std::to_string(out.size() * kLandmarkCount + row) + ")");
  }
  return out;
}

std::vector<FeatureMatrix> read_feature_csv(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  return read_feature_csv(in, path.string());
}

// ---------------------------------------------------------------------------
// Model file

void save_model(const ModelFile& model, std::ostream& out) {
  const int k_count = model.params.size();
  model.labels.validate(k_count);
  const TrainingMetadata& t = model.training;
  out << kModelHeader << '\n';
  out << "k=" << k_count << '\n';
  out << "covariance_mode=" << to_string(model.covariance_mode) << '\n';
  out << "[training]\n";
  out << "seed=" << t.seed << '\n';
  out << "tol=" << format_real(t.tol) << '\n';
  out << "max_iters=" << t.max_iters << '\n';
  out << "reg_eps=" << format_real(t.reg_eps) << '\n';
  out << "iterations=" << t.iterations << '\n';
  out << "converged=" << (t.converged ? 1 : 0) << '\n';
  out << "final_log_likelihood=" << format_real(t.final_log_likelihood) << '\n';
  out << "silhouette=" << format_real(t.silhouette) << '\n';
  out << "[normalization]\n";
  const auto triple = [](const Eigen::Vector3d& v) {
    return format_real(v(0)) + "," + format_real(v(1)) + "," + format_real(v(2));
  };
  out << "mean=" << triple(model.normalization.mean) << '\n';
  out << "stddev=" << triple(model.normalization.stddev) << '\n';
  out << "[components]\n";
  for (int k = 0; k < k_count; ++k) {
    const auto& comp = model.params.component(k);
    out << "component=" << k << ',' << format_real(model.params.weights()(k));
    for (int i = 0; i < kFeatureDim; ++i) out << ',' << format_real(comp.mean()(i));
    for (int r = 0; r < kFeatureDim; ++r) {
      for (int c = 0; c < kFeatureDim; ++c) out << ',' << format_real(comp.covariance()(r, c));
    }
    out << '\n';
  }
  out << "[labels]\n";
  for (int k = 0; k < k_count; ++k) {
    check_text_field(model.labels.label(k), "label");
    out << "cluster=" << k << ',' << format_real(model.labels.confidence[static_cast<std::size_t>(k)])
        << ',' << model.labels.label(k) << '\n';
  }
  out << "[end]\n";
}

void save_model(const ModelFile& model, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  save_model(model, out);
  finish_write(out, path);
}

namespace {

/// Sequential reader over the model file's lines.
class ModelReader {
 public:
  explicit ModelReader(std::istream& in) {
    std::string line;
    while (get_line(in, line)) {
      if (!line.empty()) lines_.push_back(line);
    }
  }

  bool at_end() const { return pos_ >= lines_.size(); }

  void section(const std::string& name) {
    if (at_end()) throw ParseError(name, "missing section [" + name + "]");
    if (lines_[pos_] != "[" + name + "]") {
      throw ParseError(name, "expected section [" + name + "], found '" + lines_[pos_] + "'");
    }
    ++pos_;
  }

  std::string value(const std::string& key, const std::string& section) {
    if (at_end()) throw ParseError(section, "truncated: missing key '" + key + "'");
    const std::string& line = lines_[pos_];
    if (line.rfind(key + "=", 0) != 0) {
      throw ParseError(key, "expected '" + key + "=...', found '" + line + "'");
    }
    ++pos_;
    return line.substr(key.size() + 1);
  }

  const std::string& header() {
    if (at_end()) throw ParseError("header", "empty model file");
    return lines_[pos_++];
  }

 private:
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
};

Eigen::Vector3d parse_triple(const std::string& text, const std::string& field) {
  const auto cells = split(text, ',');
  if (cells.size() != 3) throw ParseError(field, "expected 3 values");
  return {parse_real(cells[0], field), parse_real(cells[1], field), parse_real(cells[2], field)};
}

}  // namespace

ModelFile load_model(std::istream& in) {
  ModelReader reader(in);
  const std::string header = reader.header();
  if (header != kModelHeader) {
    throw ParseError("version", "unsupported model format '" + header + "', expected '" +
                                    kModelHeader + "'");
  }
  const long long k_raw = parse_integer(reader.value("k", "header"), "k");
  if (k_raw < 1 || k_raw > 1'000'000) throw ParseError("k", "component count out of range");
  const int k_count = static_cast<int>(k_raw);
  CovarianceMode mode;
  const std::string mode_text = reader.value("covariance_mode", "header");
  try {
    mode = parse_covariance_mode(mode_text);
  } catch (const UsageError&) {
    throw ParseError("covariance_mode", "unknown value '" + mode_text + "'");
  }

  reader.section("training");
  TrainingMetadata t;
  t.seed = parse_integer<std::uint64_t>(reader.value("seed", "training"), "seed");
  t.tol = parse_real(reader.value("tol", "training"), "tol");
  t.max_iters = static_cast<int>(parse_integer(reader.value("max_iters", "training"), "max_iters"));
  t.reg_eps = parse_real(reader.value("reg_eps", "training"), "reg_eps");
  t.iterations = static_cast<int>(parse_integer(reader.value("iterations", "training"), "iterations"));
  t.converged = parse_integer(reader.value("converged", "training"), "converged") != 0;
  t.final_log_likelihood =
      parse_real(reader.value("final_log_likelihood", "training"), "final_log_likelihood");
  t.silhouette = parse_real(reader.value("silhouette", "training"), "silhouette");

  reader.section("normalization");
  NormalizationStats stats;
  stats.mean = parse_triple(reader.value("mean", "normalization"), "normalization.mean");
  stats.stddev = parse_triple(reader.value("stddev", "normalization"), "normalization.stddev");
  try {
    stats.validate();
  } catch (const DataError& e) {
    throw ParseError("normalization", e.what());
  }

  reader.section("components");
  std::vector<GaussianComponent<double>> comps;
  Eigen::VectorXd weights(k_count);
  for (int k = 0; k < k_count; ++k) {
    const std::string field = "component " + std::to_string(k);
    const std::string line = reader.value("component", "components");
    const auto cells = split(line, ',');
    if (cells.size() != 14) throw ParseError(field, "expected 14 values");
    if (parse_integer(cells[0], field) != k) throw ParseError(field, "components out of order");
    weights(k) = parse_real(cells[1], field + " weight");
    Eigen::Vector3d mean;
    Eigen::Matrix3d cov;
    for (int i = 0; i < 3; ++i) mean(i) = parse_real(cells[static_cast<std::size_t>(2 + i)], field + " mean");
    for (int i = 0; i < 9; ++i) {
      cov(i / 3, i % 3) = parse_real(cells[static_cast<std::size_t>(5 + i)], field + " covariance");
    }
    try {
      comps.emplace_back(mean, cov);
    } catch (const NumericalError& e) {
      throw ParseError(field, e.what());
    }
  }
  if (!weights.allFinite() || (weights.array() < 0.0).any() || (weights.array() > 1.0).any()) {
    throw ParseError("weights", "every weight must lie in [0, 1]");
  }
  if (std::abs(weights.sum() - 1.0) > 1e-9) {
    throw ParseError("weights", "weights sum to " + format_real(weights.sum()) + ", expected 1");
  }

  reader.section("labels");
  ClusterLabelMap labels;
  for (int k = 0; k < k_count; ++k) {
    const std::string field = "label " + std::to_string(k);
    const std::string text = reader.value("cluster", "labels");
    const auto first = text.find(',');
    const auto second = first == std::string::npos ? first : text.find(',', first + 1);
    if (second == std::string::npos) throw ParseError(field, "expected cluster,confidence,label");
    if (parse_integer(std::string_view(text).substr(0, first), field) != k) {
      throw ParseError(field, "labels out of order");
    }
    labels.confidence.push_back(parse_real(std::string_view(text).substr(first + 1, second - first - 1), field));
    labels.labels.push_back(text.substr(second + 1));
  }
  try {
    labels.validate(k_count);
  } catch (const DataError& e) {
    throw ParseError("labels", e.what());
  }
  reader.section("end");

  // Weights within 1e-9 of summing to one are accepted; only those outside
  // the mixture's own 1e-12 tolerance get renormalized.
  if (std::abs(weights.sum() - 1.0) > Mixture::kWeightSumTolerance) weights /= weights.sum();
  try {
    return ModelFile{Mixture(std::move(comps), weights), mode, stats, std::move(labels), t};
  } catch (const NumericalError& e) {
    throw ParseError("weights", e.what());
  }
}

ModelFile load_model(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  return load_model(in);
}

// ---------------------------------------------------------------------------
// Exports

void export_plot_data(const Eigen::Ref<const FeatureRows>& rows, std::span<const std::string> groups,
                      std::ostream& out) {
  if (static_cast<std::size_t>(rows.rows()) != groups.size()) {
    throw DataError("export_plot_data: " + std::to_string(rows.rows()) + " rows but " +
                    std::to_string(groups.size()) + " groups");
  }
  out << "var_x,var_y,var_z,group\n";
  for (Eigen::Index n = 0; n < rows.rows(); ++n) {
    check_text_field(groups[static_cast<std::size_t>(n)], "group");
    out << format_real(rows(n, 0)) << ',' << format_real(rows(n, 1)) << ','
        << format_real(rows(n, 2)) << ',' << groups[static_cast<std::size_t>(n)] << '\n';
  }
}

void export_plot_data(const Eigen::Ref<const FeatureRows>& rows, std::span<const std::string> groups,
                      const std::filesystem::path& path) {
  auto out = open_for_write(path);
  export_plot_data(rows, groups, out);
  finish_write(out, path);
}

std::string format_record(const ClassificationResult& result) {
  std::string line = result.source_id + "," + result.winner + "," + std::to_string(result.margin);
  for (int count : result.cluster_counts) line += "," + std::to_string(count);
  return line;
}

std::string format_silhouette_report(const SilhouetteReport& report, const ClusterLabelMap* labels) {
  std::ostringstream out;
  out << "points=" << report.per_point.size() << '\n';
  out << "clusters=" << report.per_cluster.size() << '\n';
  out << "overall=" << format_real(report.overall) << '\n';
  for (const ClusterSilhouette& c : report.per_cluster) {
    const std::string prefix = "cluster." + std::to_string(c.cluster) + ".";
    if (labels && c.cluster < labels->size()) out << prefix << "label=" << labels->label(c.cluster) << '\n';
    out << prefix << "size=" << c.size << '\n';
    out << prefix << "mean=" << format_real(c.mean) << '\n';
  }
  return out.str();
}

}  // namespace gesture
