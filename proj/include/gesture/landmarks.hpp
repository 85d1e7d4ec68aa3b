#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gesture {

inline constexpr int kLandmarkCount = 21;
inline constexpr int kAxisCount = 3;

/// One frame: row i holds the (x, y, z) position of landmark l_{i+1}.
using LandmarkFrame = Eigen::Matrix<double, kLandmarkCount, kAxisCount>;

/// Per-landmark (var_x, var_y, var_z); same shape as a frame.
using LandmarkTable = Eigen::Matrix<double, kLandmarkCount, kAxisCount>;

/// Feature rows stacked vertically, one 3-vector per row.
using FeatureRows = Eigen::Matrix<double, Eigen::Dynamic, kAxisCount>;

class GestureVideo {
 public:
  /// Throws DataError on fewer than two frames or non-finite coordinates.
  GestureVideo(std::vector<LandmarkFrame> frames, std::string source_id,
               std::optional<std::string> label = std::nullopt);

  const std::vector<LandmarkFrame>& frames() const { return frames_; }
  int frame_count() const { return static_cast<int>(frames_.size()); }
  const std::string& source_id() const { return source_id_; }
  const std::optional<std::string>& label() const { return label_; }

 private:
  std::vector<LandmarkFrame> frames_;
  std::string source_id_;
  std::optional<std::string> label_;
};

/// Per-landmark coordinate variances of one video. Entries are finite and >= 0.
class FeatureMatrix {
 public:
  FeatureMatrix(const LandmarkTable& values, std::string source_id,
                std::optional<std::string> label = std::nullopt);

  const LandmarkTable& values() const { return values_; }
  const std::string& source_id() const { return source_id_; }
  const std::optional<std::string>& label() const { return label_; }

 private:
  LandmarkTable values_;
  std::string source_id_;
  std::optional<std::string> label_;
};

/// Z-scored features. Unlike FeatureMatrix, entries may be negative.
struct NormalizedFeatures {
  LandmarkTable values;
  std::string source_id;
  std::optional<std::string> label;
};

struct NormalizationStats {
  static constexpr double kStdFloor = 1e-12;

  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d stddev = Eigen::Vector3d::Ones();

  static NormalizationStats identity() { return {}; }

  /// Throws DataError unless means are finite and stddevs finite and positive.
  void validate() const;
};

/// Population variance (divisor = frame count) of every landmark coordinate.
FeatureMatrix compute_variances(const GestureVideo& video);

/// Column-wise mean and population std over all stacked rows; std floored at 1e-12.
NormalizationStats fit_normalization(std::span<const FeatureMatrix> features);

NormalizedFeatures apply_normalization(const FeatureMatrix& features,
                                       const NormalizationStats& stats);

/// Inverse of apply_normalization. Returns raw values; tiny negative
/// rounding residue is left untouched.
LandmarkTable invert_normalization(const NormalizedFeatures& normalized,
                                   const NormalizationStats& stats);

FeatureRows stack_rows(std::span<const FeatureMatrix> features);
FeatureRows stack_rows(std::span<const NormalizedFeatures> features);

}  // namespace gesture
