#pragma once

// Shared helpers and independent reference implementations for the tests.

#include "gesture/gmm.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace gesture::testing {

using Rows = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Isotropic Gaussian blobs, `per` points each, concatenated in order.
inline Rows sample_blobs(const std::vector<Eigen::Vector3d>& means, double sigma, int per,
                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  Rows out(static_cast<Eigen::Index>(means.size()) * per, 3);
  Eigen::Index r = 0;
  for (const auto& mu : means) {
    for (int i = 0; i < per; ++i, ++r) {
      for (int c = 0; c < 3; ++c) out(r, c) = mu(c) + noise(rng);
    }
  }
  return out;
}

/// Random blob problem: K centers in a box, anisotropic-ish noise.
inline Rows random_problem(int n, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(-5.0, 5.0);
  std::uniform_real_distribution<double> scale(0.3, 1.5);
  std::vector<Eigen::Vector3d> centers(static_cast<std::size_t>(k));
  std::vector<Eigen::Vector3d> spreads(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    centers[static_cast<std::size_t>(j)] = Eigen::Vector3d(box(rng), box(rng), box(rng));
    spreads[static_cast<std::size_t>(j)] = Eigen::Vector3d(scale(rng), scale(rng), scale(rng));
  }
  std::uniform_int_distribution<int> which(0, k - 1);
  std::normal_distribution<double> z(0.0, 1.0);
  Rows out(n, 3);
  for (int i = 0; i < n; ++i) {
    const auto j = static_cast<std::size_t>(which(rng));
    for (int c = 0; c < 3; ++c) out(i, c) = centers[j](c) + spreads[j](c) * z(rng);
  }
  return out;
}

/// Textbook multivariate normal density through an explicit inverse and determinant.
inline double normal_pdf(const Eigen::Vector3d& x, const Eigen::Vector3d& mu, const Eigen::Matrix3d& cov) {
  const Eigen::Vector3d d = x - mu;
  const double q = d.dot(cov.inverse() * d);
  return std::exp(-0.5 * q) / std::sqrt(std::pow(2.0 * std::numbers::pi, 3) * cov.determinant());
}

/// Sum over points of log sum_k pi_k N(x | mu_k, Sigma_k), with plain loops.
inline double naive_log_likelihood(const Rows& data, const MixtureParams<double>& p) {
  double total = 0.0;
  for (Eigen::Index n = 0; n < data.rows(); ++n) {
    double mix = 0.0;
    for (int k = 0; k < p.size(); ++k) {
      mix += p.weights()(k) * normal_pdf(data.row(n).transpose(), p.component(k).mean(),
                                        p.component(k).covariance());
    }
    total += std::log(mix);
  }
  return total;
}

/// Copy of `p` with one mean coordinate shifted.
inline MixtureParams<double> shift_mean(const MixtureParams<double>& p, int k, int c, double h) {
  std::vector<GaussianComponent<double>> comps;
  for (int j = 0; j < p.size(); ++j) {
    Eigen::Vector3d mu = p.component(j).mean();
    if (j == k) mu(c) += h;
    comps.emplace_back(mu, p.component(j).covariance());
  }
  return MixtureParams<double>(std::move(comps), p.weights());
}

inline MixtureParams<double> with_weights(const MixtureParams<double>& p, const Eigen::VectorXd& w) {
  return MixtureParams<double>(p.components(), w);
}

/// Smallest over all label permutations of the largest mean distance.
inline double best_permutation_error(const MixtureParams<double>& p,
                                     const std::vector<Eigen::Vector3d>& truth) {
  std::vector<int> perm(truth.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  double best = std::numeric_limits<double>::infinity();
  do {
    double worst = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      worst = std::max(worst, (p.component(perm[i]).mean() - truth[i]).norm());
    }
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// O(N^2) silhouette straight from the definition.
inline double brute_silhouette(const Eigen::MatrixXd& x, const std::vector<int>& label) {
  const auto n = static_cast<int>(label.size());
  int k_max = 0;
  for (int l : label) k_max = std::max(k_max, l);
  std::vector<int> size(static_cast<std::size_t>(k_max + 1), 0);
  for (int l : label) ++size[static_cast<std::size_t>(l)];
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const int own = label[static_cast<std::size_t>(i)];
    if (size[static_cast<std::size_t>(own)] == 1) continue;
    std::vector<double> sum(size.size(), 0.0);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double d2 = 0.0;
      for (Eigen::Index c = 0; c < x.cols(); ++c) d2 += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
      sum[static_cast<std::size_t>(label[static_cast<std::size_t>(j)])] += std::sqrt(d2);
    }
    const double a = sum[static_cast<std::size_t>(own)] / (size[static_cast<std::size_t>(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < size.size(); ++k) {
      if (static_cast<int>(k) == own || size[k] == 0) continue;
      b = std::min(b, sum[k] / size[k]);
    }
    const double m = std::max(a, b);
    total += m > 0.0 ? (b - a) / m : 0.0;
  }
  return total / n;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("gesture_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace gesture::testing
