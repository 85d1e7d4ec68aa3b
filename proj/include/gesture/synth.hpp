#pragma once

#include "gesture/landmarks.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gesture {

/// Motion model for one synthetic gesture. Every landmark follows
///
///   p_i(t) = base_i + A * sin(2 pi c t / F + phi_i + psi) + noise
///
/// with per-axis amplitudes A, per-axis phases psi, a random per-landmark
/// phase phi_i, c motion cycles over the F frames of a video, and isotropic
/// Gaussian jitter.
struct GestureProfile {
  std::string name;
  Eigen::Vector3d axis_amplitudes = Eigen::Vector3d::Zero();
  double noise_std = 1e-3;
  LandmarkFrame base_pose = LandmarkFrame::Zero();
  double cycles = 1.25;
  /// Per-video relative jitter of `cycles`, drawn uniformly in [-j, j].
  double tempo_jitter = 0.0;

  /// Expected per-axis variance of one landmark trajectory, A^2 / 2 + noise^2.
  Eigen::Vector3d expected_variance() const;

  void validate() const;
};

/// Resting hand in normalized camera coordinates: wrist plus four joints
/// for each of the five fingers.
LandmarkFrame default_base_pose();

/// wave, pick, stack and push, in that order.
std::vector<GestureProfile> default_profiles();

/// Deterministic for a given (profile, frames, seed).
GestureVideo generate_video(const GestureProfile& profile, int frames, std::uint64_t seed,
                            std::string source_id = {});

/// Seed of video j of a corpus; depends only on (master_seed, j).
std::uint64_t video_seed(std::uint64_t master_seed, std::uint64_t index);

/// Profile-major corpus: video j = p * videos_per_profile + v uses
/// video_seed(seed, j) and carries source id "<name>_<j>".
std::vector<GestureVideo> generate_dataset(std::span<const GestureProfile> profiles,
                                           int videos_per_profile, int frames, std::uint64_t seed);

}  // namespace gesture
