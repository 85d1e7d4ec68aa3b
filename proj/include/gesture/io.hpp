#pragma once

// Text file formats. Every real number is written with 17 significant
// digits, so a write/read cycle reproduces doubles bit for bit.
//
// Landmark video (one file per video):
//   gesture-landmarks v1
//   source_id=<string>
//   label=<string>                      (optional)
//   x0,y0,z0,...,x20,y20,z20            (one line per frame)
//
// Feature CSV:
//   lm,var_x,var_y,var_z,source_id,label
//   21 rows per video, lm = 0..20 in order.
//
// Model file: see save_model.

#include "gesture/classifier.hpp"
#include "gesture/landmarks.hpp"
#include "gesture/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gesture {

inline constexpr const char* kLandmarkHeader = "gesture-landmarks v1";
inline constexpr const char* kFeatureCsvHeader = "lm,var_x,var_y,var_z,source_id,label";
inline constexpr const char* kModelHeader = "gesture-gmm-model v1";

/// Decimal text with 17 significant digits.
std::string format_real(double value);
/// Strict parse of a whole string as a double; `field` names the value in errors.
double parse_real(std::string_view text, const std::string& field);

void write_landmark_video(const GestureVideo& video, std::ostream& out);
void write_landmark_video(const GestureVideo& video, const std::filesystem::path& path);
GestureVideo read_landmark_video(std::istream& in, const std::string& name);
GestureVideo read_landmark_video(const std::filesystem::path& path);

void write_feature_csv(std::span<const FeatureMatrix> features, std::ostream& out);
void write_feature_csv(std::span<const FeatureMatrix> features, const std::filesystem::path& path);
std::vector<FeatureMatrix> read_feature_csv(std::istream& in, const std::string& name);
std::vector<FeatureMatrix> read_feature_csv(const std::filesystem::path& path);

struct TrainingMetadata {
  std::uint64_t seed = 0;
  double tol = 0.0;
  int max_iters = 0;
  double reg_eps = 0.0;
  int iterations = 0;
  bool converged = false;
  double final_log_likelihood = 0.0;
  /// NaN when undefined (a single cluster).
  double silhouette = 0.0;
};

struct ModelFile {
  Mixture params;
  CovarianceMode covariance_mode = CovarianceMode::kFull;
  NormalizationStats normalization;
  ClusterLabelMap labels;
  TrainingMetadata training;
};

/// Sectioned key=value text:
///   gesture-gmm-model v1
///   k=<K>
///   covariance_mode=full|diag
///   [training]      seed, tol, max_iters, reg_eps, iterations, converged,
///                   final_log_likelihood, silhouette
///   [normalization] mean=a,b,c  stddev=a,b,c
///   [components]    component=k,weight,mx,my,mz,c00,c01,...,c22   (K lines)
///   [labels]        cluster=k,confidence,label                    (K lines)
///   [end]
void save_model(const ModelFile& model, std::ostream& out);
void save_model(const ModelFile& model, const std::filesystem::path& path);

/// Rejects version mismatches, missing sections and invariant violations
/// with a ParseError naming the offending field.
ModelFile load_model(std::istream& in);
ModelFile load_model(const std::filesystem::path& path);

/// Columnar scatter data `var_x,var_y,var_z,group`, one line per row.
void export_plot_data(const Eigen::Ref<const FeatureRows>& rows, std::span<const std::string> groups,
                      std::ostream& out);
void export_plot_data(const Eigen::Ref<const FeatureRows>& rows, std::span<const std::string> groups,
                      const std::filesystem::path& path);

/// `source_id,winner,margin,count_g1,...,count_gK` with counts per cluster index.
std::string format_record(const ClassificationResult& result);

/// key=value block; cluster labels are included when `labels` is non-null.
std::string format_silhouette_report(const SilhouetteReport& report,
                                     const ClusterLabelMap* labels = nullptr);

}  // namespace gesture
