#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace gesture {

struct ClusterSilhouette {
  int cluster = 0;
  std::size_t size = 0;
  double mean = 0.0;
};

struct SilhouetteReport {
  double overall = 0.0;
  std::vector<double> per_point;
  /// One entry per cluster index present in the assignment, ascending.
  std::vector<ClusterSilhouette> per_cluster;
};

/// Mean silhouette with Euclidean distances. a(i) is the mean distance to
/// the rest of i's cluster, b(i) the smallest mean distance to another
/// cluster, s(i) = (b - a) / max(a, b). Singleton clusters and a = b = 0
/// give s(i) = 0.
///
/// Throws DataError for fewer than 3 points, fewer than 2 distinct
/// clusters, negative cluster ids or a length mismatch.
SilhouetteReport silhouette(const Eigen::Ref<const Eigen::MatrixXd>& data,
                            std::span<const int> assignment);

}  // namespace gesture
