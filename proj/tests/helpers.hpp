#pragma once

#include "pmpb/multipole.hpp"

#include <Eigen/Geometry>

#include <filesystem>
#include <random>
#include <string>

namespace testing {

inline pmpb::Vec3 random_vec(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(rng), u(rng), u(rng)};
}

inline pmpb::Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  pmpb::Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

inline pmpb::Mat3 random_traceless(std::mt19937_64& rng, double scale) {
  pmpb::Mat3 a;
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = u(rng);
  pmpb::Mat3 s = scale * (a + a.transpose()) / 2;
  s -= s.trace() / 3 * pmpb::Mat3::Identity();
  return s;
}

inline pmpb::MultipoleSite random_site(std::mt19937_64& rng, double box = 3.0) {
  std::uniform_real_distribution<double> u(-1, 1);
  pmpb::MultipoleSite s;
  s.position = random_vec(rng, -box, box);
  s.radius = 1.5;
  s.q = u(rng);
  s.d = random_vec(rng, -0.5, 0.5);
  s.Q = random_traceless(rng, 0.5);
  return s;
}

/// Rotation matrix from an axis-angle pair.
inline pmpb::Mat3 rotation(const pmpb::Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("pmpb_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing
