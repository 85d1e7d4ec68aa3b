#pragma once

#include "gesture/gmm.hpp"
#include "gesture/landmarks.hpp"

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace gesture {

using Mixture = MixtureParams<double>;

/// Cluster index -> gesture label, with the fraction of training rows in the
/// cluster that carry that label.
struct ClusterLabelMap {
  std::vector<std::string> labels;
  std::vector<double> confidence;

  int size() const { return static_cast<int>(labels.size()); }
  const std::string& label(int cluster) const { return labels.at(static_cast<std::size_t>(cluster)); }

  /// Throws DataError unless there is exactly one entry per cluster.
  void validate(int cluster_count) const;
};

struct RowVote {
  int cluster = 0;
  double posterior = 0.0;
};

struct ClassificationResult {
  std::string source_id;
  std::array<RowVote, kLandmarkCount> votes{};
  /// Votes per cluster index, length K.
  std::vector<int> cluster_counts;
  /// Votes per mapped gesture label; sums to 21.
  std::map<std::string, int> label_counts;
  std::string winner;
  int margin = 0;
};

/// Assign every stacked training row to its argmax cluster and give each
/// cluster the majority label of its rows (ties: lexicographically smallest).
/// Features are raw; `stats` maps them into the space the mixture was fit in.
ClusterLabelMap build_label_map(std::span<const FeatureMatrix> train_features,
                                const Mixture& params, const NormalizationStats& stats);

/// Argmax of one posterior row; ties go to the lowest index.
RowVote vote_from_posteriors(const Eigen::Ref<const Eigen::VectorXd>& posteriors);

/// Cluster with the largest responsibility for one normalized feature row.
RowVote classify_row(const Eigen::Vector3d& row, const Mixture& params);

/// Tally row votes through the label map. The label with the most votes
/// wins; equal counts go to the lexicographically smallest label.
ClassificationResult tally_votes(std::span<const RowVote> votes, const ClusterLabelMap& map,
                                 std::string source_id = {});

/// Normalize, classify all 21 rows and vote.
ClassificationResult classify_video(const FeatureMatrix& features, const Mixture& params,
                                    const ClusterLabelMap& map, const NormalizationStats& stats);

}  // namespace gesture
