#pragma once

#include "pmpb/multipole.hpp"

#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace pmpb {

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};

enum class Side : std::uint8_t { Inside, Outside };

using Box = Eigen::AlignedBox3d;

/// Intersection of a mesh segment with the interface.
struct Crossing {
  Vec3 point = Vec3::Zero();
  int axis = 0;          ///< dominant axis of the segment
  Vec3 normal = Vec3::UnitX();  ///< outward (inside -> outside)
  double theta = 0.0;    ///< fraction of the segment from its first endpoint
};

/// The queries the discretization needs from a dielectric interface.
class Interface {
 public:
  virtual ~Interface() = default;
  virtual Side classify(const Vec3& r) const = 0;
  /// Nullopt when both endpoints are on the same side.
  virtual std::optional<Crossing> find_crossing(const Vec3& a, const Vec3& b) const = 0;
  virtual Box bounds() const = 0;
};

/// Sphere or union of spheres with level set min_k(|r - c_k| - r_k).
/// A point counts as inside when its level set is below -1e-12; nodes on the surface are outside.
class InterfaceGeometry final : public Interface {
 public:
  enum class Kind { AnalyticSphere, SphereUnion };

  static InterfaceGeometry sphere(const Vec3& center, double radius);
  /// Throws std::invalid_argument on an empty list or a non-positive radius.
  static InterfaceGeometry sphere_union(std::vector<Sphere> spheres);

  /// When set, segments crossing the interface several times resolve to the crossing
  /// nearest the inside endpoint instead of throwing GeometryError.
  void set_allow_multiple_crossings(bool allow) { allow_multiple_ = allow; }

  Kind kind() const { return kind_; }
  const std::vector<Sphere>& spheres() const { return spheres_; }

  double level_set(const Vec3& r) const;
  Side classify(const Vec3& r) const override;
  std::optional<Crossing> find_crossing(const Vec3& a, const Vec3& b) const override;
  /// Outward unit normal at a point on the interface (|level_set| < 1e-8), taken from
  /// the sphere attaining the minimum (lowest index on ties).
  Vec3 surface_normal(const Vec3& p) const;
  Box bounds() const override;

 private:
  InterfaceGeometry(Kind kind, std::vector<Sphere> spheres);
  void build_bins();
  template <class F>
  void for_candidates(const Box& region, F&& f) const;

  Kind kind_;
  std::vector<Sphere> spheres_;
  double max_radius_ = 0.0;
  bool allow_multiple_ = false;

  // uniform bins over sphere centers
  Vec3 bin_origin_ = Vec3::Zero();
  double bin_size_ = 1.0;
  std::array<int, 3> bin_dims_{1, 1, 1};
  std::vector<int> bin_start_;
  std::vector<int> bin_items_;
};

}  // namespace pmpb
