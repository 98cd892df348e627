#pragma once

#include <Eigen/Core>

#include <functional>
#include <span>
#include <vector>

namespace pmpb {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

namespace units {
/// Converts e_c/Å potentials to kcal/mol/e_c.
inline constexpr double coulomb_constant = 332.06364;
/// kappa_bar^2 = kappa_bar_coeff * I_s, with I_s in mol/L.
inline constexpr double kappa_bar_coeff = 8.486902807;
/// Distances below this (Å) count as evaluation at a source center.
inline constexpr double singular_epsilon = 1e-12;
}  // namespace units

/// Permanent multipole plus isotropic polarizability at an atom center.
/// Units: Å, e_c, e_c·Å, e_c·Å², Å³.
struct MultipoleSite {
  Vec3 position = Vec3::Zero();
  double radius = 1.0;
  double q = 0.0;
  Vec3 d = Vec3::Zero();
  Mat3 Q = Mat3::Zero();
  double alpha = 0.0;
};

/// Throws std::invalid_argument when radius <= 0, alpha < 0, Q is not symmetric,
/// or (when `require_traceless`) |trace Q| > 1e-10.
void validate_site(const MultipoleSite& site, bool require_traceless = false);

/// Remove the isotropic part of Q. Returns the trace that was removed.
double detrace(Mat3& Q);

/// Value, gradient and Hessian of a scalar field at a point.
struct FieldDerivs {
  double value = 0.0;
  Vec3 gradient = Vec3::Zero();
  Mat3 hessian = Mat3::Zero();

  FieldDerivs& operator+=(const FieldDerivs& o) {
    value += o.value;
    gradient += o.gradient;
    hessian += o.hessian;
    return *this;
  }
  FieldDerivs& operator*=(double s) {
    value *= s;
    gradient *= s;
    hessian *= s;
    return *this;
  }
};

/// Free-space potential of a point multipole with moments (q, d, Q) at `center`:
///   q/|s| + (s·d)/|s|^3 + (s^T Q s)/(2|s|^5),  s = r - center.
/// Throws SingularityError when |s| < units::singular_epsilon.
FieldDerivs multipole_derivs(const Vec3& center, double q, const Vec3& d, const Mat3& Q,
                             const Vec3& r);

double green_potential(const MultipoleSite& site, const Vec3& r);
Vec3 green_gradient(const MultipoleSite& site, const Vec3& r);
Mat3 green_hessian(const MultipoleSite& site, const Vec3& r);

/// Superposition of all site potentials at r. When `induced` is non-empty each
/// site's dipole is d + induced[n]. The sum is divided by `dielectric`.
double total_coulomb(std::span<const MultipoleSite> sites, std::span<const Vec3> induced,
                     const Vec3& r, double dielectric = 1.0);
FieldDerivs total_coulomb_derivs(std::span<const MultipoleSite> sites,
                                 std::span<const Vec3> induced, const Vec3& r,
                                 double dielectric = 1.0);

/// Modifies the bare dipole-field tensor for a site pair.
class DampingRule {
 public:
  virtual ~DampingRule() = default;
  virtual Mat3 apply(const Mat3& bare, double distance, const MultipoleSite& n,
                     const MultipoleSite& m) const = 0;
};

class IdentityDamping final : public DampingRule {
 public:
  Mat3 apply(const Mat3& bare, double, const MultipoleSite&,
             const MultipoleSite&) const override {
    return bare;
  }
};

/// Scales the tensor by a user function of the pair distance (hook for Thole-style
/// screening; no force-field constants are built in).
class DistanceScaledDamping final : public DampingRule {
 public:
  using Scale = std::function<double(double, const MultipoleSite&, const MultipoleSite&)>;
  explicit DistanceScaledDamping(Scale scale) : scale_(std::move(scale)) {}
  Mat3 apply(const Mat3& bare, double distance, const MultipoleSite& n,
             const MultipoleSite& m) const override {
    return scale_(distance, n, m) * bare;
  }

 private:
  Scale scale_;
};

/// Dipole field tensor T = (3 ŝŝ^T - I)/|s|^3 with s = r_n - r_m, passed through
/// `damping`. With identity damping T·mu is the field (minus the gradient) at r_n of a
/// point dipole mu at r_m.
Mat3 interaction_tensor(const MultipoleSite& site_n, const MultipoleSite& site_m,
                        const DampingRule& damping = IdentityDamping{});

}  // namespace pmpb
