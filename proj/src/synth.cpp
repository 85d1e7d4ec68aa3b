#include "gesture/synth.hpp"

#include "gesture/error.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace gesture {

namespace {

// Fixed per-axis phases give each gesture a 3-D loop instead of a line.
const Eigen::Vector3d kAxisPhase(0.0, std::numbers::pi / 2.0, std::numbers::pi / 3.0);

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

Eigen::Vector3d GestureProfile::expected_variance() const {
  return (axis_amplitudes.array().square() / 2.0 + noise_std * noise_std).matrix();
}

void GestureProfile::validate() const {
  if (name.empty()) throw DataError("profile: empty name");
  if (!axis_amplitudes.allFinite() || (axis_amplitudes.array() < 0.0).any()) {
    throw DataError("profile '" + name + "': amplitudes must be finite and >= 0");
  }
  if (!(noise_std > 0.0) || !std::isfinite(noise_std)) {
    throw DataError("profile '" + name + "': noise_std must be > 0");
  }
  if (!base_pose.allFinite()) throw DataError("profile '" + name + "': non-finite base pose");
  if (!(cycles > 0.0) || !(tempo_jitter >= 0.0 && tempo_jitter < 1.0)) {
    throw DataError("profile '" + name + "': invalid cycles or tempo jitter");
  }
}

LandmarkFrame default_base_pose() {
  LandmarkFrame pose;
  pose.row(0) << 0.50, 0.80, 0.00;
  for (int finger = 0; finger < 5; ++finger) {
    const double spread = (finger - 2) * 0.045;
    const double reach = finger == 0 ? 0.7 : 1.0;
    for (int joint = 0; joint < 4; ++joint) {
      const double along = 0.06 + 0.045 * joint * reach;
      pose.row(1 + finger * 4 + joint) << 0.50 + spread * (1.0 + 0.3 * joint),
          0.80 - along - (finger == 0 ? 0.0 : 0.05), -0.01 * joint;
    }
  }
  return pose;
}

std::vector<GestureProfile> default_profiles() {
  const LandmarkFrame base = default_base_pose();
  auto make = [&](const char* name, double ax, double ay, double az) {
    GestureProfile p;
    p.name = name;
    p.axis_amplitudes = Eigen::Vector3d(ax, ay, az);
    p.noise_std = 0.002;
    p.base_pose = base;
    p.cycles = 0.87;
    p.tempo_jitter = 0.02;
    return p;
  };
  return {
      make("wave", 0.052, 0.056, 0.007),
      make("pick", 0.046, 0.059, 0.021),
      make("stack", 0.040, 0.038, 0.051),
      make("push", 0.008, 0.012, 0.068),
  };
}

GestureVideo generate_video(const GestureProfile& profile, int frames, std::uint64_t seed,
                            std::string source_id) {
  profile.validate();
  if (frames < 2) throw DataError("generate_video: need at least 2 frames");
  if (source_id.empty()) source_id = profile.name;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> jitter(0.0, profile.noise_std);

  const double cycles = profile.cycles * (1.0 + profile.tempo_jitter * unit(rng));
  Eigen::Matrix<double, kLandmarkCount, 1> landmark_phase;
  for (int i = 0; i < kLandmarkCount; ++i) landmark_phase(i) = angle(rng);

  std::vector<LandmarkFrame> out(static_cast<std::size_t>(frames));
  const double omega = 2.0 * std::numbers::pi * cycles / frames;
  for (int t = 0; t < frames; ++t) {
    LandmarkFrame& frame = out[static_cast<std::size_t>(t)];
    for (int i = 0; i < kLandmarkCount; ++i) {
      for (int c = 0; c < kAxisCount; ++c) {
        const double wave = std::sin(omega * t + landmark_phase(i) + kAxisPhase(c));
        frame(i, c) = profile.base_pose(i, c) + profile.axis_amplitudes(c) * wave + jitter(rng);
      }
    }
  }
  return GestureVideo(std::move(out), std::move(source_id), profile.name);
}

std::uint64_t video_seed(std::uint64_t master_seed, std::uint64_t index) {
  return splitmix64(splitmix64(master_seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

std::vector<GestureVideo> generate_dataset(std::span<const GestureProfile> profiles,
                                           int videos_per_profile, int frames, std::uint64_t seed) {
  if (videos_per_profile < 1) throw DataError("generate_dataset: videos_per_profile must be >= 1");
  std::vector<GestureVideo> videos;
  videos.reserve(profiles.size() * static_cast<std::size_t>(videos_per_profile));
  std::uint64_t j = 0;
  for (const GestureProfile& profile : profiles) {
    for (int v = 0; v < videos_per_profile; ++v, ++j) {
      char id[64];
      std::snprintf(id, sizeof id, "_%04llu", static_cast<unsigned long long>(j));
      videos.push_back(generate_video(profile, frames, video_seed(seed, j), profile.name + id));
    }
  }
  return videos;
}

}  // namespace gesture
