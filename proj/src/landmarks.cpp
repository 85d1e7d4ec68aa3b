#include "gesture/landmarks.hpp"

#include "gesture/error.hpp"

#include <algorithm>
#include <cmath>

namespace gesture {

GestureVideo::GestureVideo(std::vector<LandmarkFrame> frames, std::string source_id,
                           std::optional<std::string> label)
    : frames_(std::move(frames)), source_id_(std::move(source_id)), label_(std::move(label)) {
  if (frames_.size() < 2) {
    throw DataError("video '" + source_id_ + "': need at least 2 frames, got " +
                    std::to_string(frames_.size()));
  }
  for (std::size_t t = 0; t < frames_.size(); ++t) {
    if (!frames_[t].allFinite()) {
      throw DataError("video '" + source_id_ + "': non-finite coordinate in frame " +
                      std::to_string(t));
    }
  }
}

FeatureMatrix::FeatureMatrix(const LandmarkTable& values, std::string source_id,
                             std::optional<std::string> label)
    : values_(values), source_id_(std::move(source_id)), label_(std::move(label)) {
  if (!values_.allFinite() || (values_.array() < 0.0).any()) {
    throw DataError("features '" + source_id_ + "': entries must be finite and non-negative");
  }
}

void NormalizationStats::validate() const {
  if (!mean.allFinite()) throw DataError("normalization: non-finite mean");
  if (!stddev.allFinite() || (stddev.array() <= 0.0).any()) {
    throw DataError("normalization: standard deviations must be finite and positive");
  }
}

FeatureMatrix compute_variances(const GestureVideo& video) {
  // Welford accumulation over frames, all 63 coordinates at once.
  LandmarkTable mean = LandmarkTable::Zero();
  LandmarkTable m2 = LandmarkTable::Zero();
  double count = 0.0;
  for (const LandmarkFrame& frame : video.frames()) {
    count += 1.0;
    const LandmarkTable delta = frame - mean;
    mean += delta / count;
    m2.array() += delta.array() * (frame - mean).array();
  }
  LandmarkTable variance = (m2 / count).cwiseMax(0.0);
  return FeatureMatrix(variance, video.source_id(), video.label());
}

NormalizationStats fit_normalization(std::span<const FeatureMatrix> features) {
  if (features.empty()) throw DataError("fit_normalization: empty feature list");
  const FeatureRows rows = stack_rows(features);
  NormalizationStats stats;
  stats.mean = rows.colwise().mean().transpose();
  const FeatureRows centered = rows.rowwise() - stats.mean.transpose();
  const Eigen::Vector3d var =
      (centered.array().square().colwise().sum() / static_cast<double>(rows.rows()))
          .transpose();
  stats.stddev = var.cwiseSqrt().cwiseMax(NormalizationStats::kStdFloor);
  return stats;
}

NormalizedFeatures apply_normalization(const FeatureMatrix& features,
                                       const NormalizationStats& stats) {
  stats.validate();
  NormalizedFeatures out;
  out.values = (features.values().rowwise() - stats.mean.transpose()).array().rowwise() /
               stats.stddev.transpose().array();
  out.source_id = features.source_id();
  out.label = features.label();
  return out;
}

LandmarkTable invert_normalization(const NormalizedFeatures& normalized,
                                   const NormalizationStats& stats) {
  stats.validate();
  LandmarkTable raw =
      normalized.values.array().rowwise() * stats.stddev.transpose().array();
  raw.rowwise() += stats.mean.transpose();
  return raw;
}

namespace {

template <typename Item, typename Get>
FeatureRows stack(std::span<const Item> items, Get get) {
  FeatureRows rows(static_cast<Eigen::Index>(items.size()) * kLandmarkCount, kAxisCount);
  for (std::size_t v = 0; v < items.size(); ++v) {
    rows.middleRows(static_cast<Eigen::Index>(v) * kLandmarkCount, kLandmarkCount) =
        get(items[v]);
  }
  return rows;
}

}  // namespace

FeatureRows stack_rows(std::span<const FeatureMatrix> features) {
  return stack(features, [](const FeatureMatrix& f) -> const LandmarkTable& { return f.values(); });
}

FeatureRows stack_rows(std::span<const NormalizedFeatures> features) {
  return stack(features, [](const NormalizedFeatures& f) -> const LandmarkTable& { return f.values; });
}

}  // namespace gesture
