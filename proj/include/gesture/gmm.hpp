#pragma once

// Gaussian mixture over 3-dimensional feature rows, trained by
// Expectation-Maximization.
//
// Everything here is templated on the scalar type and takes data as any
// Eigen expression with three columns (one point per row). Densities are
// evaluated in log space through a Cholesky factor of each covariance; the
// E-step normalizes with log-sum-exp so that far-away points never
// underflow to an all-zero row.

#include "gesture/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace gesture {

inline constexpr int kFeatureDim = 3;

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, kFeatureDim, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, kFeatureDim, kFeatureDim>;
template <typename Scalar>
using DataMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, kFeatureDim>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class CovarianceMode { kFull, kDiagonal };

inline const char* to_string(CovarianceMode mode) {
  return mode == CovarianceMode::kFull ? "full" : "diag";
}

/// Accepts "full", "diag" or "diagonal".
inline CovarianceMode parse_covariance_mode(const std::string& text) {
  if (text == "full") return CovarianceMode::kFull;
  if (text == "diag" || text == "diagonal") return CovarianceMode::kDiagonal;
  throw UsageError("unknown covariance mode '" + text + "' (expected full or diag)");
}

/// One multivariate normal. The constructor factorizes the covariance and
/// rejects anything that is not symmetric positive-definite.
template <typename Scalar>
class GaussianComponent {
 public:
  GaussianComponent(const Vector3<Scalar>& mean, const Matrix3<Scalar>& covariance)
      : mean_(mean), covariance_(covariance) {
    if (!mean_.allFinite() || !covariance_.allFinite()) {
      throw NumericalError("gaussian component: non-finite mean or covariance");
    }
    const Scalar scale = std::max(Scalar(1), covariance_.cwiseAbs().maxCoeff());
    if ((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale) {
      throw NumericalError("gaussian component: covariance is not symmetric");
    }
    llt_.compute(covariance_);
    const Vector3<Scalar> diag = llt_.matrixLLT().diagonal();
    if (llt_.info() != Eigen::Success || !(diag.array() > Scalar(0)).all() || !diag.allFinite()) {
      std::ostringstream msg;
      msg << "gaussian component: covariance is not positive-definite\n" << covariance_;
      throw NumericalError(msg.str());
    }
    log_det_ = Scalar(2) * diag.array().log().sum();
  }

  const Vector3<Scalar>& mean() const { return mean_; }
  const Matrix3<Scalar>& covariance() const { return covariance_; }
  Scalar log_determinant() const { return log_det_; }

  /// Squared Mahalanobis distance (x - mu)^T Sigma^-1 (x - mu).
  Scalar mahalanobis_squared(const Vector3<Scalar>& x) const {
    const Vector3<Scalar> z = llt_.matrixL().solve(x - mean_);
    return z.squaredNorm();
  }

  /// Log density without input validation.
  Scalar log_density(const Vector3<Scalar>& x) const {
    const Scalar log_two_pi = std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
    return Scalar(-0.5) * (Scalar(kFeatureDim) * log_two_pi + log_det_ + mahalanobis_squared(x));
  }

 private:
  Vector3<Scalar> mean_;
  Matrix3<Scalar> covariance_;
  Eigen::LLT<Matrix3<Scalar>> llt_;
  Scalar log_det_ = 0;
};

/// Mixture weights and components. Weights lie in [0, 1] and sum to one.
template <typename Scalar>
class MixtureParams {
 public:
  static constexpr double kWeightSumTolerance = 1e-12;

  MixtureParams(std::vector<GaussianComponent<Scalar>> components, VectorX<Scalar> weights)
      : components_(std::move(components)), weights_(std::move(weights)) {
    if (components_.empty()) throw NumericalError("mixture: need at least one component");
    if (static_cast<std::size_t>(weights_.size()) != components_.size()) {
      throw NumericalError("mixture: weight count does not match component count");
    }
    if (!weights_.allFinite() || (weights_.array() < Scalar(0)).any() ||
        (weights_.array() > Scalar(1)).any()) {
      throw NumericalError("mixture: weights must lie in [0, 1]");
    }
    const Scalar sum = weights_.sum();
    // Single precision cannot hold the double tolerance.
    const Scalar tolerance = std::max(Scalar(kWeightSumTolerance),
                                      Scalar(64) * std::numeric_limits<Scalar>::epsilon());
    if (std::abs(sum - Scalar(1)) > tolerance) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "mixture: weights sum to " << sum << ", expected 1";
      throw NumericalError(msg.str());
    }
  }

  int size() const { return static_cast<int>(components_.size()); }
  const std::vector<GaussianComponent<Scalar>>& components() const { return components_; }
  const GaussianComponent<Scalar>& component(int k) const { return components_[static_cast<std::size_t>(k)]; }
  const VectorX<Scalar>& weights() const { return weights_; }

 private:
  std::vector<GaussianComponent<Scalar>> components_;
  VectorX<Scalar> weights_;
};

/// N x K posteriors r_nk; every row sums to one.
template <typename Scalar>
struct ResponsibilityMatrix {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> entries;

  Eigen::Index points() const { return entries.rows(); }
  Eigen::Index components() const { return entries.cols(); }

  /// Row-wise argmax; ties go to the lowest component index.
  std::vector<int> hard_assignment() const {
    std::vector<int> out(static_cast<std::size_t>(entries.rows()));
    for (Eigen::Index n = 0; n < entries.rows(); ++n) {
      Eigen::Index best = 0;
      entries.row(n).maxCoeff(&best);
      out[static_cast<std::size_t>(n)] = static_cast<int>(best);
    }
    return out;
  }
};

struct EmConfig {
  int components = 4;
  int max_iters = 500;
  double tol = 1e-6;
  double reg_eps = 1e-6;
  std::uint64_t seed = 0;
  CovarianceMode covariance_mode = CovarianceMode::kFull;

  void validate() const {
    if (components < 1) throw UsageError("em config: component count must be >= 1");
    if (max_iters < 1) throw UsageError("em config: max_iters must be >= 1");
    if (!(tol > 0)) throw UsageError("em config: tol must be > 0");
    if (!(reg_eps >= 0) || !std::isfinite(reg_eps)) {
      throw UsageError("em config: reg_eps must be finite and >= 0");
    }
  }
};

struct ReinitEvent {
  int iteration = 0;
  std::vector<int> components;
};

struct EmTrace {
  /// L of the initial parameters followed by L after every iteration.
  std::vector<double> log_likelihood;
  int iterations = 0;
  bool converged = false;
  std::vector<ReinitEvent> reinitializations;
};

template <typename Scalar>
struct FitResult {
  MixtureParams<Scalar> params;
  ResponsibilityMatrix<Scalar> responsibilities;
  EmTrace trace;
};

/// Raised by m_step when a component's responsibility mass N_k drops below
/// kEmptyComponentMass.
class EmptyComponentError : public NumericalError {
 public:
  explicit EmptyComponentError(std::vector<int> components)
      : NumericalError(describe(components)), components_(std::move(components)) {}

  const std::vector<int>& components() const { return components_; }

 private:
  static std::string describe(const std::vector<int>& components) {
    std::string text = "m-step: empty component(s)";
    for (int k : components) text += " " + std::to_string(k);
    return text;
  }
  std::vector<int> components_;
};

inline constexpr double kEmptyComponentMass = 1e-10;
inline constexpr int kMaxReinitializations = 3;

namespace detail {

template <typename Derived>
void check_data(const Eigen::MatrixBase<Derived>& data, const char* where) {
  if (data.cols() != kFeatureDim) {
    throw DataError(std::string(where) + ": data must have 3 columns");
  }
  if (data.rows() < 1) throw DataError(std::string(where) + ": empty data");
  if (!data.allFinite()) throw DataError(std::string(where) + ": non-finite data");
}

/// log(pi_k) + log N(x_n | mu_k, Sigma_k) for every point and component.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> weighted_log_densities(
    const Eigen::MatrixBase<Derived>& data, const MixtureParams<typename Derived::Scalar>& params) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(data.rows(), params.size());
  for (int k = 0; k < params.size(); ++k) {
    const Scalar log_weight = std::log(params.weights()(k));
    const auto& comp = params.component(k);
    for (Eigen::Index n = 0; n < data.rows(); ++n) {
      out(n, k) = log_weight + comp.log_density(data.row(n).transpose());
    }
  }
  return out;
}

/// Row-wise log-sum-exp of `terms`, overwriting `terms` with the normalized
/// posteriors. Sequential reduction order per row.
template <typename Scalar>
VectorX<Scalar> normalize_rows(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& terms) {
  VectorX<Scalar> log_norm(terms.rows());
  for (Eigen::Index n = 0; n < terms.rows(); ++n) {
    const Scalar peak = terms.row(n).maxCoeff();
    if (!std::isfinite(peak)) {
      throw NumericalError("e-step: every component density vanishes at point " +
                           std::to_string(n));
    }
    Scalar sum = 0;
    for (Eigen::Index k = 0; k < terms.cols(); ++k) {
      terms(n, k) = std::exp(terms(n, k) - peak);
      sum += terms(n, k);
    }
    terms.row(n) /= sum;
    log_norm(n) = peak + std::log(sum);
  }
  return log_norm;
}

template <typename Derived>
std::pair<ResponsibilityMatrix<typename Derived::Scalar>, typename Derived::Scalar> expectation(
    const Eigen::MatrixBase<Derived>& data, const MixtureParams<typename Derived::Scalar>& params) {
  using Scalar = typename Derived::Scalar;
  ResponsibilityMatrix<Scalar> resp{weighted_log_densities(data, params)};
  const VectorX<Scalar> log_norm = normalize_rows(resp.entries);
  return {std::move(resp), log_norm.sum()};
}

/// Population covariance of all rows, plus ridge.
template <typename Derived>
Matrix3<typename Derived::Scalar> global_covariance(const Eigen::MatrixBase<Derived>& data,
                                                    double reg_eps, CovarianceMode mode) {
  using Scalar = typename Derived::Scalar;
  const Vector3<Scalar> centroid = data.colwise().mean().transpose();
  const DataMatrix<Scalar> centered = data.rowwise() - centroid.transpose();
  Matrix3<Scalar> cov = (centered.transpose() * centered) / Scalar(data.rows());
  cov = Scalar(0.5) * (cov + cov.transpose()).eval();
  if (mode == CovarianceMode::kDiagonal) cov = Matrix3<Scalar>(cov.diagonal().asDiagonal());
  cov.diagonal().array() += Scalar(reg_eps);
  return cov;
}

template <typename Scalar>
struct WeightedStats {
  Scalar mass = 0;
  Vector3<Scalar> mean = Vector3<Scalar>::Zero();
  Matrix3<Scalar> covariance = Matrix3<Scalar>::Zero();
};

/// Responsibility-weighted mean and covariance of one column of `resp`.
template <typename Derived, typename RespDerived>
WeightedStats<typename Derived::Scalar> weighted_stats(const Eigen::MatrixBase<Derived>& data,
                                                       const Eigen::MatrixBase<RespDerived>& r,
                                                       double reg_eps, CovarianceMode mode) {
  using Scalar = typename Derived::Scalar;
  WeightedStats<Scalar> s;
  s.mass = r.sum();
  if (!(s.mass >= Scalar(kEmptyComponentMass))) return s;
  s.mean = (r.transpose() * data).transpose() / s.mass;
  const DataMatrix<Scalar> centered = data.rowwise() - s.mean.transpose();
  s.covariance = (centered.transpose() * (centered.array().colwise() * r.array()).matrix()) / s.mass;
  s.covariance = Scalar(0.5) * (s.covariance + s.covariance.transpose()).eval();
  if (mode == CovarianceMode::kDiagonal) {
    s.covariance = Matrix3<Scalar>(s.covariance.diagonal().asDiagonal());
  }
  s.covariance.diagonal().array() += Scalar(reg_eps);
  return s;
}

}  // namespace detail

/// Multivariate normal density N(x | mu, Sigma), evaluated in log space.
template <typename Derived>
typename Derived::Scalar gaussian_log_pdf(const Eigen::MatrixBase<Derived>& x,
                                          const GaussianComponent<typename Derived::Scalar>& comp) {
  if (x.size() != kFeatureDim) throw DataError("gaussian_pdf: point must have 3 coordinates");
  if (!x.allFinite()) throw DataError("gaussian_pdf: non-finite point");
  return comp.log_density(Vector3<typename Derived::Scalar>(x.reshaped()));
}

template <typename Derived>
typename Derived::Scalar gaussian_pdf(const Eigen::MatrixBase<Derived>& x,
                                      const GaussianComponent<typename Derived::Scalar>& comp) {
  return std::exp(gaussian_log_pdf(x, comp));
}

/// L = sum_n log sum_k pi_k N(x_n | mu_k, Sigma_k).
template <typename Derived>
typename Derived::Scalar log_likelihood(const Eigen::MatrixBase<Derived>& data,
                                        const MixtureParams<typename Derived::Scalar>& params) {
  detail::check_data(data, "log_likelihood");
  auto terms = detail::weighted_log_densities(data, params);
  return detail::normalize_rows(terms).sum();
}

/// Posterior responsibilities r_nk = pi_k N_k(x_n) / sum_j pi_j N_j(x_n).
template <typename Derived>
ResponsibilityMatrix<typename Derived::Scalar> e_step(
    const Eigen::MatrixBase<Derived>& data, const MixtureParams<typename Derived::Scalar>& params) {
  detail::check_data(data, "e_step");
  return detail::expectation(data, params).first;
}

/// Closed-form re-estimation from responsibilities:
///   mu_k = sum_n r_nk x_n / N_k
///   Sigma_k = sum_n r_nk (x_n - mu_k)(x_n - mu_k)^T / N_k + reg_eps I
///   pi_k = N_k / N
/// Throws EmptyComponentError when some N_k < kEmptyComponentMass.
template <typename Derived>
MixtureParams<typename Derived::Scalar> m_step(
    const Eigen::MatrixBase<Derived>& data, const ResponsibilityMatrix<typename Derived::Scalar>& resp,
    double reg_eps = 1e-6, CovarianceMode mode = CovarianceMode::kFull) {
  using Scalar = typename Derived::Scalar;
  detail::check_data(data, "m_step");
  if (resp.points() != data.rows() || resp.components() < 1) {
    throw DataError("m_step: responsibility matrix shape does not match data");
  }
  std::vector<GaussianComponent<Scalar>> comps;
  VectorX<Scalar> mass(resp.components());
  std::vector<int> empty;
  for (Eigen::Index k = 0; k < resp.components(); ++k) {
    auto s = detail::weighted_stats(data, resp.entries.col(k), reg_eps, mode);
    mass(k) = s.mass;
    if (!(s.mass >= Scalar(kEmptyComponentMass))) {
      empty.push_back(static_cast<int>(k));
      continue;
    }
    comps.emplace_back(s.mean, s.covariance);
  }
  if (!empty.empty()) throw EmptyComponentError(std::move(empty));
  return MixtureParams<Scalar>(std::move(comps), mass / mass.sum());
}

/// Starting parameters: means by greedy k-means++ seeding (centroid when K = 1),
/// every covariance the global data covariance plus ridge, uniform weights.
template <typename Derived>
MixtureParams<typename Derived::Scalar> initialize(const Eigen::MatrixBase<Derived>& data,
                                                   const EmConfig& config) {
  using Scalar = typename Derived::Scalar;
  config.validate();
  detail::check_data(data, "initialize");
  const Eigen::Index n_points = data.rows();
  const int k_count = config.components;
  if (n_points < k_count) {
    throw DataError("initialize: " + std::to_string(n_points) + " points cannot seed " +
                    std::to_string(k_count) + " components");
  }

  const Matrix3<Scalar> cov = detail::global_covariance(data, config.reg_eps, config.covariance_mode);
  std::vector<Vector3<Scalar>> means;
  if (k_count == 1) {
    means.push_back(data.colwise().mean().transpose());
  } else {
    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<Eigen::Index> pick_any(0, n_points - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Greedy k-means++: draw a few D^2-weighted candidates per step and keep
    // the one that leaves the smallest total squared distance.
    const int candidates = 2 + static_cast<int>(std::log(static_cast<double>(k_count)));
    means.push_back(data.row(pick_any(rng)).transpose());
    VectorX<Scalar> nearest = (data.rowwise() - means.back().transpose()).rowwise().squaredNorm();
    while (static_cast<int>(means.size()) < k_count) {
      const Scalar total = nearest.sum();
      Eigen::Index best = -1;
      VectorX<Scalar> best_nearest;
      Scalar best_potential = std::numeric_limits<Scalar>::infinity();
      for (int trial = 0; trial < candidates; ++trial) {
        Eigen::Index chosen = -1;
        if (!(total > Scalar(0))) {
          chosen = pick_any(rng);
        } else {
          const Scalar target = Scalar(unit(rng)) * total;
          Scalar cumulative = 0;
          for (Eigen::Index n = 0; n < n_points; ++n) {
            if (nearest(n) <= Scalar(0)) continue;
            cumulative += nearest(n);
            chosen = n;
            if (cumulative > target) break;
          }
        }
        VectorX<Scalar> updated =
            nearest.cwiseMin((data.rowwise() - data.row(chosen)).rowwise().squaredNorm());
        const Scalar potential = updated.sum();
        if (potential < best_potential) {
          best_potential = potential;
          best = chosen;
          best_nearest = std::move(updated);
        }
      }
      means.push_back(data.row(best).transpose());
      nearest = std::move(best_nearest);
    }
  }

  std::vector<GaussianComponent<Scalar>> comps;
  comps.reserve(means.size());
  for (const auto& mu : means) comps.emplace_back(mu, cov);
  return MixtureParams<Scalar>(std::move(comps), VectorX<Scalar>::Constant(k_count, Scalar(1) / Scalar(k_count)));
}

namespace detail {

/// M-step that repairs empty components: each one is moved onto the point
/// of lowest mixture density under `previous`, given the global covariance
/// and weight 1/K, then weights are renormalized.
template <typename Derived>
MixtureParams<typename Derived::Scalar> m_step_with_reseed(
    const Eigen::MatrixBase<Derived>& data, const ResponsibilityMatrix<typename Derived::Scalar>& resp,
    const MixtureParams<typename Derived::Scalar>& previous, const std::vector<int>& empty,
    const EmConfig& config) {
  using Scalar = typename Derived::Scalar;
  auto terms = weighted_log_densities(data, previous);
  VectorX<Scalar> log_mix = normalize_rows(terms);
  const Matrix3<Scalar> cov = global_covariance(data, config.reg_eps, config.covariance_mode);
  const Scalar k_count = Scalar(resp.components());

  std::vector<GaussianComponent<Scalar>> comps;
  VectorX<Scalar> weights(resp.components());
  for (Eigen::Index k = 0; k < resp.components(); ++k) {
    if (std::find(empty.begin(), empty.end(), static_cast<int>(k)) != empty.end()) {
      Eigen::Index lowest = 0;
      log_mix.minCoeff(&lowest);
      log_mix(lowest) = std::numeric_limits<Scalar>::infinity();
      comps.emplace_back(data.row(lowest).transpose(), cov);
      weights(k) = Scalar(1) / k_count;
    } else {
      auto s = weighted_stats(data, resp.entries.col(k), config.reg_eps, config.covariance_mode);
      comps.emplace_back(s.mean, s.covariance);
      weights(k) = s.mass / Scalar(data.rows());
    }
  }
  return MixtureParams<Scalar>(std::move(comps), weights / weights.sum());
}

}  // namespace detail

/// Full EM loop: initialize, then alternate M- and E-steps until the
/// absolute change in log-likelihood drops below config.tol or
/// config.max_iters iterations have run. The returned responsibilities
/// belong to the returned parameters.
template <typename Derived>
FitResult<typename Derived::Scalar> fit(const Eigen::MatrixBase<Derived>& data, const EmConfig& config) {
  using Scalar = typename Derived::Scalar;
  MixtureParams<Scalar> params = initialize(data, config);
  auto first = detail::expectation(data, params);
  ResponsibilityMatrix<Scalar> resp = std::move(first.first);
  Scalar ll = first.second;

  EmTrace trace;
  trace.log_likelihood.push_back(static_cast<double>(ll));
  int reinit_count = 0;
  for (int it = 1; it <= config.max_iters; ++it) {
    bool reseeded = false;
    try {
      params = m_step(data, resp, config.reg_eps, config.covariance_mode);
    } catch (const EmptyComponentError& e) {
      if (++reinit_count > kMaxReinitializations) {
        throw NumericalError("fit: component(s) stayed empty after " +
                             std::to_string(kMaxReinitializations) +
                             " reinitializations (last at iteration " + std::to_string(it) +
                             "); " + e.what());
      }
      params = detail::m_step_with_reseed(data, resp, params, e.components(), config);
      trace.reinitializations.push_back({it, e.components()});
      reseeded = true;
    }
    const Scalar previous = ll;
    std::tie(resp, ll) = detail::expectation(data, params);
    if (!std::isfinite(ll)) throw NumericalError("fit: log-likelihood is not finite");
    trace.log_likelihood.push_back(static_cast<double>(ll));
    trace.iterations = it;
    if (!reseeded && std::abs(ll - previous) < Scalar(config.tol)) {
      trace.converged = true;
      break;
    }
  }
  return {std::move(params), std::move(resp), std::move(trace)};
}

}  // namespace gesture
