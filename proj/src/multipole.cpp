#include "pmpb/multipole.hpp"

#include "pmpb/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pmpb {

void validate_site(const MultipoleSite& site, bool require_traceless) {
  if (!(site.radius > 0.0)) throw std::invalid_argument("site radius must be positive");
  if (!(site.alpha >= 0.0)) throw std::invalid_argument("site polarizability must be >= 0");
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      if (site.Q(i, j) != site.Q(j, i))
        throw std::invalid_argument("quadrupole tensor is not symmetric");
  if (require_traceless && std::abs(site.Q.trace()) > 1e-10)
    throw std::invalid_argument("quadrupole tensor is not traceless");
}

double detrace(Mat3& Q) {
  const double tr = Q.trace();
  Q.diagonal().array() -= tr / 3.0;
  return tr;
}

FieldDerivs multipole_derivs(const Vec3& center, double q, const Vec3& d, const Mat3& Q,
                             const Vec3& r) {
  const Vec3 s = r - center;
  const double r2 = s.squaredNorm();
  const double rn = std::sqrt(r2);
  if (rn < units::singular_epsilon)
    throw SingularityError("multipole field evaluated at its own center");

  const double inv = 1.0 / rn;
  const double inv2 = inv * inv;
  const double inv3 = inv2 * inv;
  const double inv5 = inv3 * inv2;
  const double inv7 = inv5 * inv2;
  const Mat3 I = Mat3::Identity();
  const Mat3 ss = s * s.transpose();

  FieldDerivs out;
  // monopole
  out.value = q * inv;
  out.gradient = -q * inv3 * s;
  out.hessian = q * inv5 * (3.0 * ss - r2 * I);

  // dipole
  const double ds = d.dot(s);
  out.value += ds * inv3;
  out.gradient += inv3 * d - 3.0 * ds * inv5 * s;
  out.hessian += -3.0 * inv5 * (d * s.transpose() + s * d.transpose()) - 3.0 * ds * inv5 * I +
                 15.0 * ds * inv7 * ss;

  // quadrupole, P = s^T Q s / 2
  const Vec3 Qs = Q * s;
  const double P = 0.5 * s.dot(Qs);
  const double inv9 = inv7 * inv2;
  out.value += P * inv5;
  out.gradient += inv5 * Qs - 5.0 * P * inv7 * s;
  out.hessian += inv5 * Q - 5.0 * inv7 * (Qs * s.transpose() + s * Qs.transpose()) -
                 5.0 * P * inv7 * I + 35.0 * P * inv9 * ss;
  return out;
}

double green_potential(const MultipoleSite& site, const Vec3& r) {
  return multipole_derivs(site.position, site.q, site.d, site.Q, r).value;
}

Vec3 green_gradient(const MultipoleSite& site, const Vec3& r) {
  return multipole_derivs(site.position, site.q, site.d, site.Q, r).gradient;
}

Mat3 green_hessian(const MultipoleSite& site, const Vec3& r) {
  return multipole_derivs(site.position, site.q, site.d, site.Q, r).hessian;
}

FieldDerivs total_coulomb_derivs(std::span<const MultipoleSite> sites,
                                 std::span<const Vec3> induced, const Vec3& r,
                                 double dielectric) {
  if (!induced.empty() && induced.size() != sites.size())
    throw std::invalid_argument("induced dipole count does not match site count");
  FieldDerivs sum;
  for (std::size_t n = 0; n < sites.size(); ++n) {
    const auto& s = sites[n];
    const Vec3 p = induced.empty() ? s.d : Vec3(s.d + induced[n]);
    sum += multipole_derivs(s.position, s.q, p, s.Q, r);
  }
  sum *= 1.0 / dielectric;
  return sum;
}

double total_coulomb(std::span<const MultipoleSite> sites, std::span<const Vec3> induced,
                     const Vec3& r, double dielectric) {
  if (!induced.empty() && induced.size() != sites.size())
    throw std::invalid_argument("induced dipole count does not match site count");
  double sum = 0.0;
  for (std::size_t n = 0; n < sites.size(); ++n) {
    const auto& s = sites[n];
    const Vec3 p = induced.empty() ? s.d : Vec3(s.d + induced[n]);
    const Vec3 v = r - s.position;
    const double r2 = v.squaredNorm();
    const double rn = std::sqrt(r2);
    if (rn < units::singular_epsilon)
      throw SingularityError("Coulomb potential evaluated at a site center");
    const double inv = 1.0 / rn;
    const double inv3 = inv * inv * inv;
    sum += s.q * inv + p.dot(v) * inv3 + 0.5 * v.dot(s.Q * v) * inv3 * inv * inv;
  }
  return sum / dielectric;
}

Mat3 interaction_tensor(const MultipoleSite& site_n, const MultipoleSite& site_m,
                        const DampingRule& damping) {
  const Vec3 s = site_n.position - site_m.position;
  const double r = s.norm();
  if (r < units::singular_epsilon)
    throw SingularityError("interaction tensor requested for coincident sites");
  const Vec3 u = s / r;
  const Mat3 bare = (3.0 * u * u.transpose() - Mat3::Identity()) / (r * r * r);
  return damping.apply(bare, r, site_n, site_m);
}

}  // namespace pmpb
