#include "pmpb/geometry.hpp"

#include "pmpb/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pmpb {

namespace {
constexpr double kOnInterface = -1e-12;
}

InterfaceGeometry::InterfaceGeometry(Kind kind, std::vector<Sphere> spheres)
    : kind_(kind), spheres_(std::move(spheres)) {
  if (spheres_.empty()) throw std::invalid_argument("interface needs at least one sphere");
  for (const auto& s : spheres_) {
    if (!(s.radius > 0.0) || !std::isfinite(s.radius) || !s.center.allFinite())
      throw std::invalid_argument("sphere radius must be positive and finite");
    max_radius_ = std::max(max_radius_, s.radius);
  }
  build_bins();
}

InterfaceGeometry InterfaceGeometry::sphere(const Vec3& center, double radius) {
  return InterfaceGeometry(Kind::AnalyticSphere, {Sphere{center, radius}});
}

InterfaceGeometry InterfaceGeometry::sphere_union(std::vector<Sphere> spheres) {
  return InterfaceGeometry(Kind::SphereUnion, std::move(spheres));
}

void InterfaceGeometry::build_bins() {
  Box box;
  for (const auto& s : spheres_) box.extend(s.center);
  bin_size_ = std::max(max_radius_, 1e-6);
  bin_origin_ = box.min();
  std::size_t total = 1;
  for (int a = 0; a < 3; ++a) {
    bin_dims_[a] = static_cast<int>(std::floor((box.max()[a] - box.min()[a]) / bin_size_)) + 1;
    total *= static_cast<std::size_t>(bin_dims_[a]);
  }
  // keep the bin table proportional to the sphere count
  while (total > 8 * spheres_.size() + 64) {
    bin_size_ *= 1.5;
    total = 1;
    for (int a = 0; a < 3; ++a) {
      bin_dims_[a] = static_cast<int>(std::floor((box.max()[a] - box.min()[a]) / bin_size_)) + 1;
      total *= static_cast<std::size_t>(bin_dims_[a]);
    }
  }
  std::vector<int> counts(total + 1, 0);
  auto bin_of = [&](const Vec3& c) {
    std::size_t idx = 0;
    for (int a = 2; a >= 0; --a) {
      int b = static_cast<int>(std::floor((c[a] - bin_origin_[a]) / bin_size_));
      b = std::clamp(b, 0, bin_dims_[a] - 1);
      idx = idx * static_cast<std::size_t>(bin_dims_[a]) + static_cast<std::size_t>(b);
    }
    return idx;
  };
  for (const auto& s : spheres_) ++counts[bin_of(s.center) + 1];
  for (std::size_t i = 1; i <= total; ++i) counts[i] += counts[i - 1];
  bin_start_ = counts;
  bin_items_.assign(spheres_.size(), 0);
  std::vector<int> fill(counts.begin(), counts.end() - 1);
  for (std::size_t k = 0; k < spheres_.size(); ++k)
    bin_items_[static_cast<std::size_t>(fill[bin_of(spheres_[k].center)]++)] = static_cast<int>(k);
}

template <class F>
void InterfaceGeometry::for_candidates(const Box& region, F&& f) const {
  // spheres whose center lies within max_radius of `region`
  std::array<int, 3> lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    lo[a] = static_cast<int>(
        std::floor((region.min()[a] - max_radius_ - bin_origin_[a]) / bin_size_));
    hi[a] = static_cast<int>(
        std::floor((region.max()[a] + max_radius_ - bin_origin_[a]) / bin_size_));
    lo[a] = std::max(lo[a], 0);
    hi[a] = std::min(hi[a], bin_dims_[a] - 1);
    if (lo[a] > hi[a]) return;
  }
  for (int k = lo[2]; k <= hi[2]; ++k)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int i = lo[0]; i <= hi[0]; ++i) {
        const std::size_t b =
            (static_cast<std::size_t>(k) * bin_dims_[1] + static_cast<std::size_t>(j)) *
                bin_dims_[0] +
            static_cast<std::size_t>(i);
        for (int t = bin_start_[b]; t < bin_start_[b + 1]; ++t)
          f(static_cast<std::size_t>(bin_items_[static_cast<std::size_t>(t)]));
      }
}

double InterfaceGeometry::level_set(const Vec3& r) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : spheres_) best = std::min(best, (r - s.center).norm() - s.radius);
  return best;
}

Side InterfaceGeometry::classify(const Vec3& r) const {
  if (kind_ == Kind::AnalyticSphere)
    return (r - spheres_[0].center).norm() - spheres_[0].radius < kOnInterface ? Side::Inside
                                                                               : Side::Outside;
  bool inside = false;
  for_candidates(Box(r, r), [&](std::size_t k) {
    if (!inside && (r - spheres_[k].center).norm() - spheres_[k].radius < kOnInterface)
      inside = true;
  });
  return inside ? Side::Inside : Side::Outside;
}

std::optional<Crossing> InterfaceGeometry::find_crossing(const Vec3& a, const Vec3& b) const {
  const Side sa = classify(a);
  const Side sb = classify(b);
  if (sa == sb) return std::nullopt;

  const Vec3 dir = b - a;
  const double len = dir.norm();
  if (len <= 0.0) throw std::invalid_argument("degenerate segment");
  const Vec3 u = dir / len;

  struct Interval {
    double t0, t1;
    std::size_t k;
  };
  std::vector<Interval> iv;
  Box seg(a.cwiseMin(b), a.cwiseMax(b));
  for_candidates(seg, [&](std::size_t k) {
    const Vec3 m = a - spheres_[k].center;
    const double bq = m.dot(u);
    // inside test shares the 1e-12 tolerance with classify()
    const double rr = spheres_[k].radius + kOnInterface;
    const double disc = bq * bq - (m.squaredNorm() - rr * rr);
    if (disc < 0.0) return;
    const double sq = std::sqrt(disc);
    double t0 = (-bq - sq) / len, t1 = (-bq + sq) / len;
    if (t1 < 0.0 || t0 > 1.0) return;
    iv.push_back({std::max(t0, 0.0), std::min(t1, 1.0), k});
  });
  if (iv.empty()) throw GeometryError("inconsistent interface classification on segment");

  // Work from the inside endpoint: parameter s = t (a inside) or s = 1 - t (b inside).
  const bool a_inside = sa == Side::Inside;
  for (auto& v : iv) {
    if (!a_inside) {
      const double t0 = 1.0 - v.t1, t1 = 1.0 - v.t0;
      v.t0 = t0;
      v.t1 = t1;
    }
  }
  std::sort(iv.begin(), iv.end(), [](const Interval& x, const Interval& y) {
    return x.t0 < y.t0 || (x.t0 == y.t0 && x.k < y.k);
  });
  constexpr double tol = 1e-12;
  if (iv.front().t0 > 1e-9)
    throw GeometryError("inconsistent interface classification on segment");
  double end = iv.front().t1;
  std::size_t owner = iv.front().k;
  std::size_t next = 1;
  for (; next < iv.size(); ++next) {
    if (iv[next].t0 > end + tol) break;
    if (iv[next].t1 > end || (iv[next].t1 == end && iv[next].k < owner)) {
      end = iv[next].t1;
      owner = iv[next].k;
    }
  }
  if (next < iv.size() && !allow_multiple_)
    throw GeometryError(
        "mesh segment crosses the interface more than once; refine the grid spacing");

  const double t = a_inside ? end : 1.0 - end;
  Crossing c;
  c.theta = std::clamp(t, 0.0, 1.0);
  c.point = a + c.theta * dir;
  int axis = 0;
  dir.cwiseAbs().maxCoeff(&axis);
  c.axis = axis;
  const Vec3 rad = c.point - spheres_[owner].center;
  const double rn = rad.norm();
  if (rn < units::singular_epsilon) throw GeometryError("zero-gradient interface point");
  c.normal = rad / rn;
  return c;
}

Vec3 InterfaceGeometry::surface_normal(const Vec3& p) const {
  double best = std::numeric_limits<double>::infinity();
  std::size_t owner = 0;
  for (std::size_t k = 0; k < spheres_.size(); ++k) {
    const double v = (p - spheres_[k].center).norm() - spheres_[k].radius;
    if (v < best) {
      best = v;
      owner = k;
    }
  }
  if (std::abs(best) >= 1e-8) throw GeometryError("surface_normal: point is not on the interface");
  const Vec3 rad = p - spheres_[owner].center;
  const double rn = rad.norm();
  if (rn < units::singular_epsilon) throw GeometryError("zero-gradient interface point");
  return rad / rn;
}

Box InterfaceGeometry::bounds() const {
  Box box;
  for (const auto& s : spheres_) {
    box.extend(Vec3(s.center.array() - s.radius));
    box.extend(Vec3(s.center.array() + s.radius));
  }
  return box;
}

}  // namespace pmpb
