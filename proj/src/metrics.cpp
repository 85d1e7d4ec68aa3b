#include "gesture/metrics.hpp"

#include "gesture/error.hpp"

#include <algorithm>
#include <limits>

namespace gesture {

SilhouetteReport silhouette(const Eigen::Ref<const Eigen::MatrixXd>& data,
                            std::span<const int> assignment) {
  const Eigen::Index n_points = data.rows();
  if (static_cast<std::size_t>(n_points) != assignment.size()) {
    throw DataError("silhouette: " + std::to_string(assignment.size()) + " labels for " +
                    std::to_string(n_points) + " points");
  }
  if (n_points < 3) throw DataError("silhouette: need at least 3 points");
  if (!data.allFinite()) throw DataError("silhouette: non-finite data");

  // Compact cluster ids to 0..C-1.
  std::vector<int> ids(assignment.begin(), assignment.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.front() < 0) throw DataError("silhouette: negative cluster id");
  if (ids.size() < 2) throw DataError("silhouette: need at least 2 distinct clusters");
  const auto n_clusters = static_cast<Eigen::Index>(ids.size());
  std::vector<Eigen::Index> slot(assignment.size());
  Eigen::VectorXd sizes = Eigen::VectorXd::Zero(n_clusters);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    slot[i] = std::lower_bound(ids.begin(), ids.end(), assignment[i]) - ids.begin();
    sizes(slot[i]) += 1.0;
  }

  SilhouetteReport report;
  report.per_point.resize(static_cast<std::size_t>(n_points));
  Eigen::VectorXd cluster_sum = Eigen::VectorXd::Zero(n_clusters);
  Eigen::VectorXd distance_sum(n_clusters);
  for (Eigen::Index i = 0; i < n_points; ++i) {
    const Eigen::VectorXd dist = (data.rowwise() - data.row(i)).rowwise().norm();
    distance_sum.setZero();
    for (Eigen::Index j = 0; j < n_points; ++j) distance_sum(slot[static_cast<std::size_t>(j)]) += dist(j);

    const Eigen::Index own = slot[static_cast<std::size_t>(i)];
    double s = 0.0;
    if (sizes(own) > 1.0) {
      const double a = distance_sum(own) / (sizes(own) - 1.0);
      double b = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < n_clusters; ++c) {
        if (c != own) b = std::min(b, distance_sum(c) / sizes(c));
      }
      const double scale = std::max(a, b);
      s = scale > 0.0 ? (b - a) / scale : 0.0;
    }
    report.per_point[static_cast<std::size_t>(i)] = s;
    cluster_sum(own) += s;
  }

  double total = 0.0;
  for (double s : report.per_point) total += s;
  report.overall = total / static_cast<double>(n_points);
  for (Eigen::Index c = 0; c < n_clusters; ++c) {
    report.per_cluster.push_back({ids[static_cast<std::size_t>(c)],
                                  static_cast<std::size_t>(sizes(c)), cluster_sum(c) / sizes(c)});
  }
  return report;
}

}  // namespace gesture
