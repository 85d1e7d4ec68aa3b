#include "gesture/classifier.hpp"

#include "gesture/error.hpp"

#include <algorithm>

namespace gesture {

void ClusterLabelMap::validate(int cluster_count) const {
  if (static_cast<int>(labels.size()) != cluster_count ||
      static_cast<int>(confidence.size()) != cluster_count) {
    throw DataError("label map: expected " + std::to_string(cluster_count) + " clusters, got " +
                    std::to_string(labels.size()));
  }
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k].empty()) throw DataError("label map: cluster " + std::to_string(k) + " has no label");
    if (!(confidence[k] >= 0.0 && confidence[k] <= 1.0)) {
      throw DataError("label map: confidence of cluster " + std::to_string(k) + " outside [0, 1]");
    }
  }
}

ClusterLabelMap build_label_map(std::span<const FeatureMatrix> train_features,
                                const Mixture& params, const NormalizationStats& stats) {
  const int k_count = params.size();
  std::vector<std::map<std::string, int>> per_cluster(static_cast<std::size_t>(k_count));
  for (const FeatureMatrix& video : train_features) {
    if (!video.label()) {
      throw DataError("label map: training video '" + video.source_id() + "' has no label");
    }
    const NormalizedFeatures normalized = apply_normalization(video, stats);
    const auto resp = e_step(normalized.values, params);
    for (int cluster : resp.hard_assignment()) {
      ++per_cluster[static_cast<std::size_t>(cluster)][*video.label()];
    }
  }

  ClusterLabelMap map;
  for (int k = 0; k < k_count; ++k) {
    const auto& counts = per_cluster[static_cast<std::size_t>(k)];
    if (counts.empty()) {
      throw DataError("label map: cluster " + std::to_string(k) + " received no training rows");
    }
    // std::map iterates in label order, so max_element keeps the smallest on ties.
    const auto best = std::max_element(counts.begin(), counts.end(),
                                       [](const auto& a, const auto& b) { return a.second < b.second; });
    int total = 0;
    for (const auto& [label, n] : counts) total += n;
    map.labels.push_back(best->first);
    map.confidence.push_back(static_cast<double>(best->second) / static_cast<double>(total));
  }
  return map;
}

RowVote vote_from_posteriors(const Eigen::Ref<const Eigen::VectorXd>& posteriors) {
  if (posteriors.size() < 1) throw DataError("vote: empty posterior row");
  Eigen::Index best = 0;
  const double value = posteriors.maxCoeff(&best);
  return {static_cast<int>(best), value};
}

RowVote classify_row(const Eigen::Vector3d& row, const Mixture& params) {
  const auto resp = e_step(row.transpose(), params);
  return vote_from_posteriors(resp.entries.row(0).transpose());
}

ClassificationResult tally_votes(std::span<const RowVote> votes, const ClusterLabelMap& map,
                                 std::string source_id) {
  if (votes.size() != static_cast<std::size_t>(kLandmarkCount)) {
    throw DataError("tally: expected 21 votes, got " + std::to_string(votes.size()));
  }
  ClassificationResult result;
  result.source_id = std::move(source_id);
  result.cluster_counts.assign(static_cast<std::size_t>(map.size()), 0);
  for (std::size_t i = 0; i < votes.size(); ++i) {
    const RowVote& vote = votes[i];
    if (vote.cluster < 0 || vote.cluster >= map.size()) {
      throw DataError("tally: vote for unknown cluster " + std::to_string(vote.cluster));
    }
    result.votes[i] = vote;
    ++result.cluster_counts[static_cast<std::size_t>(vote.cluster)];
    ++result.label_counts[map.label(vote.cluster)];
  }

  int best = -1;
  int runner_up = 0;
  for (const auto& [label, count] : result.label_counts) {
    if (count > best) {
      runner_up = std::max(runner_up, best);
      best = count;
      result.winner = label;
    } else {
      runner_up = std::max(runner_up, count);
    }
  }
  result.margin = best - runner_up;
  return result;
}

ClassificationResult classify_video(const FeatureMatrix& features, const Mixture& params,
                                    const ClusterLabelMap& map, const NormalizationStats& stats) {
  map.validate(params.size());
  const NormalizedFeatures normalized = apply_normalization(features, stats);
  const auto resp = e_step(normalized.values, params);
  std::array<RowVote, kLandmarkCount> votes{};
  for (int i = 0; i < kLandmarkCount; ++i) {
    votes[static_cast<std::size_t>(i)] = vote_from_posteriors(resp.entries.row(i).transpose());
  }
  return tally_votes(votes, map, features.source_id());
}

}  // namespace gesture
