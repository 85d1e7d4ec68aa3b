#include "gesture/cli.hpp"

#include "gesture/classifier.hpp"
#include "gesture/error.hpp"
#include "gesture/gmm.hpp"
#include "gesture/io.hpp"
#include "gesture/landmarks.hpp"
#include "gesture/metrics.hpp"
#include "gesture/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>

namespace gesture::cli {

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string input;
  std::string output;
  std::string model;
  int k = 0;
  std::uint64_t seed = 0;
  double tol = 1e-6;
  int max_iters = 500;
  double reg_eps = 1e-6;
  std::string cov_mode = "full";
  int videos_per_profile = 20;
  int frames = 150;
};

struct Corpus {
  std::vector<FeatureMatrix> features;
  long long frames = 0;  // 0 when read from a feature CSV
};

Corpus load_corpus(const fs::path& input) {
  Corpus corpus;
  std::error_code ec;
  if (fs::is_directory(input, ec)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(input)) {
      if (entry.is_regular_file() && entry.path().extension() == ".lmk") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .lmk landmark files in '" + input.string() + "'");
    for (const fs::path& file : files) {
      const GestureVideo video = read_landmark_video(file);
      corpus.frames += video.frame_count();
      corpus.features.push_back(compute_variances(video));
    }
  } else if (fs::is_regular_file(input, ec) && input.extension() == ".lmk") {
    const GestureVideo video = read_landmark_video(input);
    corpus.frames = video.frame_count();
    corpus.features.push_back(compute_variances(video));
  } else if (fs::is_regular_file(input, ec)) {
    corpus.features = read_feature_csv(input);
    if (corpus.features.empty()) throw DataError("feature file '" + input.string() + "' has no rows");
  } else {
    throw DataError("input '" + input.string() + "' does not exist");
  }
  return corpus;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw DataError("cannot create output directory '" + dir.string() + "'");
  }
}

int cmd_synth(const Flags& f, std::ostream& out) {
  if (f.output.empty()) throw UsageError("synth: --output is required");
  if (f.videos_per_profile < 1) throw UsageError("synth: --videos-per-profile must be >= 1");
  if (f.frames < 2) throw UsageError("synth: --frames must be >= 2");

  const fs::path dir(f.output);
  ensure_directory(dir);
  const auto profiles = default_profiles();
  const auto videos = generate_dataset(profiles, f.videos_per_profile, f.frames, f.seed);

  std::ofstream manifest(dir / "manifest.csv", std::ios::binary);
  if (!manifest) throw DataError("cannot write manifest in '" + dir.string() + "'");
  manifest << "file,source_id,label,frames\n";
  for (const GestureVideo& video : videos) {
    const std::string file = video.source_id() + ".lmk";
    write_landmark_video(video, dir / file);
    manifest << file << ',' << video.source_id() << ',' << video.label().value_or("") << ','
             << video.frame_count() << '\n';
  }
  manifest.flush();
  if (!manifest) throw DataError("failed writing manifest in '" + dir.string() + "'");

  out << "videos=" << videos.size() << '\n';
  out << "profiles=" << profiles.size() << '\n';
  out << "frames=" << f.frames << '\n';
  out << "seed=" << f.seed << '\n';
  return 0;
}

void validate_training_flags(const Flags& f, bool k_given) {
  if (f.input.empty()) throw UsageError("train: --input is required");
  if (f.model.empty()) throw UsageError("train: --model is required");
  if (k_given && f.k < 1) throw UsageError("train: --k must be >= 1");
  if (!(f.tol > 0)) throw UsageError("train: --tol must be > 0");
  if (f.max_iters < 1) throw UsageError("train: --max-iters must be >= 1");
  if (!(f.reg_eps >= 0) || !std::isfinite(f.reg_eps)) throw UsageError("train: --reg-eps must be >= 0");
  parse_covariance_mode(f.cov_mode);
}

int cmd_train(const Flags& f, bool k_given, std::ostream& out, std::ostream& err) {
  validate_training_flags(f, k_given);
  const Corpus corpus = load_corpus(f.input);

  std::set<std::string> distinct;
  for (const FeatureMatrix& m : corpus.features) {
    if (!m.label()) throw DataError("training video '" + m.source_id() + "' is unlabeled");
    distinct.insert(*m.label());
  }
  const int k_count = k_given ? f.k : static_cast<int>(distinct.size());
  if (k_given && k_count != static_cast<int>(distinct.size())) {
    err << "warning: --k " << k_count << " differs from the " << distinct.size()
        << " distinct training labels; proceeding\n";
  }

  const NormalizationStats stats = fit_normalization(corpus.features);
  std::vector<NormalizedFeatures> normalized;
  normalized.reserve(corpus.features.size());
  for (const FeatureMatrix& m : corpus.features) normalized.push_back(apply_normalization(m, stats));
  const FeatureRows rows = stack_rows(std::span<const NormalizedFeatures>(normalized));

  EmConfig config;
  config.components = k_count;
  config.max_iters = f.max_iters;
  config.tol = f.tol;
  config.reg_eps = f.reg_eps;
  config.seed = f.seed;
  config.covariance_mode = parse_covariance_mode(f.cov_mode);
  if (rows.rows() < k_count) {
    throw DataError("train: " + std::to_string(rows.rows()) + " feature rows for " +
                    std::to_string(k_count) + " components");
  }
  FitResult<double> result = fit(rows, config);
  const ClusterLabelMap labels = build_label_map(corpus.features, result.params, stats);

  const std::vector<int> assignment = result.responsibilities.hard_assignment();
  double score = std::numeric_limits<double>::quiet_NaN();
  if (std::set<int>(assignment.begin(), assignment.end()).size() >= 2) {
    score = silhouette(rows, assignment).overall;
  }

  TrainingMetadata meta;
  meta.seed = f.seed;
  meta.tol = f.tol;
  meta.max_iters = f.max_iters;
  meta.reg_eps = f.reg_eps;
  meta.iterations = result.trace.iterations;
  meta.converged = result.trace.converged;
  meta.final_log_likelihood = result.trace.log_likelihood.back();
  meta.silhouette = score;
  const ModelFile model{result.params, config.covariance_mode, stats, labels, meta};
  save_model(model, fs::path(f.model));

  if (!f.output.empty()) {
    const fs::path dir(f.output);
    ensure_directory(dir);
    write_feature_csv(corpus.features, dir / "features.csv");
    const FeatureRows raw = stack_rows(std::span<const FeatureMatrix>(corpus.features));
    std::vector<std::string> before;
    std::vector<std::string> after;
    for (const FeatureMatrix& m : corpus.features) before.insert(before.end(), kLandmarkCount, *m.label());
    for (int cluster : assignment) after.push_back(std::to_string(cluster));
    export_plot_data(raw, before, dir / "plot_before.csv");
    export_plot_data(raw, after, dir / "plot_after.csv");
  }

  out << "videos=" << corpus.features.size() << '\n';
  out << "rows=" << rows.rows() << '\n';
  out << "k=" << k_count << '\n';
  out << "iterations=" << meta.iterations << '\n';
  out << "converged=" << (meta.converged ? "true" : "false") << '\n';
  out << "log_likelihood=" << format_real(meta.final_log_likelihood) << '\n';
  out << "silhouette=" << format_real(score) << '\n';
  for (int k = 0; k < k_count; ++k) {
    out << "cluster." << k << ".label=" << labels.label(k) << '\n';
    out << "cluster." << k << ".confidence=" << format_real(labels.confidence[static_cast<std::size_t>(k)])
        << '\n';
  }
  if (!result.trace.reinitializations.empty()) {
    err << "note: " << result.trace.reinitializations.size()
        << " empty-component reinitialization(s) during fit\n";
  }
  return 0;
}

int cmd_classify(const Flags& f, std::ostream& out, std::ostream& err) {
  if (f.input.empty()) throw UsageError("classify: --input is required");
  if (f.model.empty()) throw UsageError("classify: --model is required");
  const ModelFile model = load_model(fs::path(f.model));
  const Corpus corpus = load_corpus(f.input);

  const auto start = std::chrono::steady_clock::now();
  std::vector<ClassificationResult> results;
  results.reserve(corpus.features.size());
  for (const FeatureMatrix& m : corpus.features) {
    results.push_back(classify_video(m, model.params, model.labels, model.normalization));
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

  std::optional<std::ofstream> record_file;
  if (!f.output.empty()) {
    record_file.emplace(f.output, std::ios::binary);
    if (!*record_file) throw DataError("cannot open '" + f.output + "' for writing");
  }
  for (const ClassificationResult& r : results) {
    out << format_record(r) << '\n';
    if (record_file) *record_file << format_record(r) << '\n';
  }

  const bool labeled = std::all_of(corpus.features.begin(), corpus.features.end(),
                                   [](const FeatureMatrix& m) { return m.label().has_value(); });
  if (labeled) {
    std::size_t correct = 0;
    for (std::size_t v = 0; v < results.size(); ++v) {
      if (results[v].winner == *corpus.features[v].label()) ++correct;
    }
    out << "# accuracy=" << format_real(static_cast<double>(correct) / static_cast<double>(results.size()))
        << " (" << correct << "/" << results.size() << ")\n";
    // Fraction of rows voting for a cluster whose video carries that cluster's label.
    const int k_count = model.params.size();
    std::vector<int> votes(static_cast<std::size_t>(k_count), 0);
    std::vector<int> agree(static_cast<std::size_t>(k_count), 0);
    for (std::size_t v = 0; v < results.size(); ++v) {
      for (const RowVote& vote : results[v].votes) {
        ++votes[static_cast<std::size_t>(vote.cluster)];
        if (model.labels.label(vote.cluster) == *corpus.features[v].label()) {
          ++agree[static_cast<std::size_t>(vote.cluster)];
        }
      }
    }
    for (int k = 0; k < k_count; ++k) {
      const auto idx = static_cast<std::size_t>(k);
      out << "# cluster." << k << ".agreement="
          << (votes[idx] ? format_real(static_cast<double>(agree[idx]) / votes[idx]) : "n/a") << '\n';
    }
  }

  std::vector<NormalizedFeatures> normalized;
  for (const FeatureMatrix& m : corpus.features) normalized.push_back(apply_normalization(m, model.normalization));
  const FeatureRows rows = stack_rows(std::span<const NormalizedFeatures>(normalized));
  std::vector<int> assignment;
  for (const ClassificationResult& r : results) {
    for (const RowVote& vote : r.votes) assignment.push_back(vote.cluster);
  }
  if (rows.rows() >= 3 && std::set<int>(assignment.begin(), assignment.end()).size() >= 2) {
    out << "# silhouette=" << format_real(silhouette(rows, assignment).overall) << '\n';
  } else {
    out << "# silhouette=n/a\n";
  }
  for (const ClassificationResult& r : results) {
    out << "# task " << r.source_id << " -> " << task_action(r.winner) << '\n';
  }

  if (corpus.frames > 0) {
    err << "timing: " << elapsed.count() / static_cast<double>(corpus.frames) << " s/frame over "
        << corpus.frames << " frames\n";
  } else {
    err << "timing: " << elapsed.count() / static_cast<double>(results.size()) << " s/video over "
        << results.size() << " videos\n";
  }
  return 0;
}

int cmd_score(const Flags& f, std::ostream& out) {
  if (f.input.empty()) throw UsageError("score: --input is required");
  if (f.model.empty()) throw UsageError("score: --model is required");
  const ModelFile model = load_model(fs::path(f.model));
  const Corpus corpus = load_corpus(f.input);
  std::vector<NormalizedFeatures> normalized;
  for (const FeatureMatrix& m : corpus.features) normalized.push_back(apply_normalization(m, model.normalization));
  const FeatureRows rows = stack_rows(std::span<const NormalizedFeatures>(normalized));
  const std::vector<int> assignment = e_step(rows, model.params).hard_assignment();
  out << format_silhouette_report(silhouette(rows, assignment), &model.labels);
  return 0;
}

}  // namespace

std::string task_action(const std::string& gesture) {
  static const std::map<std::string, std::string> kActions = {
      {"pick", "robot: pick object"},
      {"push", "robot: push object"},
      {"stack", "robot: stack objects"},
      {"wave", "robot: wave greeting"},
  };
  const auto it = kActions.find(gesture);
  return it != kActions.end() ? it->second : "robot: task '" + gesture + "'";
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamic hand-gesture recognition with Gaussian mixtures"};
  app.require_subcommand(1);
  Flags f;

  auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic landmark corpus");
  synth->add_option("--output", f.output, "Output directory")->required();
  synth->add_option("--seed", f.seed, "Master seed");
  synth->add_option("--videos-per-profile", f.videos_per_profile, "Videos per gesture");
  synth->add_option("--frames", f.frames, "Frames per video");

  auto* train = app.add_subcommand("train", "Fit normalization, mixture and label map");
  train->add_option("--input", f.input, "Directory of .lmk files or a feature CSV")->required();
  train->add_option("--model", f.model, "Model file to write")->required();
  train->add_option("--output", f.output, "Directory for feature CSV and plot data");
  auto* k_opt = train->add_option("--k", f.k, "Component count (default: number of labels)");
  train->add_option("--seed", f.seed, "Initialization seed");
  train->add_option("--tol", f.tol, "Log-likelihood convergence threshold");
  train->add_option("--max-iters", f.max_iters, "EM iteration cap");
  train->add_option("--reg-eps", f.reg_eps, "Covariance ridge");
  train->add_option("--cov-mode", f.cov_mode, "full or diag")->check(CLI::IsMember({"full", "diag"}));

  auto* classify = app.add_subcommand("classify", "Classify videos with a trained model");
  classify->add_option("--input", f.input, "Directory of .lmk files, one .lmk file or a feature CSV")->required();
  classify->add_option("--model", f.model, "Trained model file")->required();
  classify->add_option("--output", f.output, "Also write result records to this file");

  auto* score = app.add_subcommand("score", "Silhouette score of a model's clustering");
  score->add_option("--input", f.input, "Directory of .lmk files or a feature CSV")->required();
  score->add_option("--model", f.model, "Trained model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::kUsage);
  }

  try {
    if (synth->parsed()) return cmd_synth(f, out);
    if (train->parsed()) return cmd_train(f, k_opt->count() > 0, out, err);
    if (classify->parsed()) return cmd_classify(f, out, err);
    if (score->parsed()) return cmd_score(f, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::kData);
  }
  return static_cast<int>(ErrorKind::kUsage);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"gesture"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace gesture::cli
