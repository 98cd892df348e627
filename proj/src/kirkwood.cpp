#include "pmpb/kirkwood.hpp"

#include "pmpb/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace pmpb::kirkwood {

Moments parse_moments(const std::string& name) {
  if (name == "monopole") return Moments::Monopole;
  if (name == "dipole") return Moments::Dipole;
  if (name == "quadrupole") return Moments::Quadrupole;
  if (name == "multipole") return Moments::Multipole;
  throw std::invalid_argument("unknown Kirkwood case '" + name + "'");
}

std::string to_string(Moments m) {
  switch (m) {
    case Moments::Monopole: return "monopole";
    case Moments::Dipole: return "dipole";
    case Moments::Quadrupole: return "quadrupole";
    default: return "multipole";
  }
}

double reaction_coefficient(int l, double eps1, double eps2) {
  return -(l + 1) * (eps2 - eps1) / (eps1 * (l * eps1 + (l + 1) * eps2));
}

double quadrupole_bridge() {
  // any probe and any non-degenerate traceless Q give the same ratio
  MultipoleSite s;
  s.Q << 1.0, 0.3, -0.2, 0.3, -0.4, 0.5, -0.2, 0.5, -0.6;
  const Vec3 r(0.7, -1.1, 1.9);
  const double theta_form = r.dot(s.Q * r) / std::pow(r.norm(), 5);
  return green_potential(s, r) / theta_form;
}

KirkwoodCase default_case(Moments which) {
  KirkwoodCase c;
  const bool all = which == Moments::Multipole;
  if (all || which == Moments::Monopole) c.q = 1.0;
  if (all || which == Moments::Dipole) c.d = Vec3(0.0, 0.0, 0.343);
  if (all || which == Moments::Quadrupole) {
    // U_q = (1/12) C X_2/a^5 Q:Q and Q:Q = 6 c^2 for Q = c diag(-1,-1,2)
    constexpr double target = -1.7924;
    const double x2 = reaction_coefficient(2, c.eps1, c.eps2);
    const double per_c2 = units::coulomb_constant * x2 / std::pow(c.a, 5) * 6.0 / 12.0;
    const double s = std::sqrt(target / per_c2);
    c.Q = s * Vec3(-1.0, -1.0, 2.0).asDiagonal();
  }
  return c;
}

namespace {

struct Orders {
  double g[3];  // free-space G_l at r
};

Orders free_space(const KirkwoodCase& c, const Vec3& r) {
  const double n = r.norm();
  if (n < units::singular_epsilon) throw SingularityError("Kirkwood potential at the center");
  const double n3 = n * n * n;
  return {{c.q / n, c.d.dot(r) / n3, r.dot(c.Q * r) / (2.0 * n3 * n * n)}};
}

}  // namespace

double potential(const KirkwoodCase& c, const Vec3& r) {
  const Orders o = free_space(c, r);
  const double n = r.norm();
  double v = 0.0;
  for (int l = 0; l < 3; ++l) {
    if (n < c.a)
      v += o.g[l] / c.eps1 +
           reaction_coefficient(l, c.eps1, c.eps2) * std::pow(n / c.a, 2 * l + 1) * o.g[l];
    else
      v += (2.0 * l + 1.0) / (l * c.eps1 + (l + 1.0) * c.eps2) * o.g[l];
  }
  return v;
}

FieldDerivs reaction_potential(const KirkwoodCase& c, const Vec3& r) {
  const double n = r.norm();
  FieldDerivs f;
  if (n < c.a) {
    const double c0 = reaction_coefficient(0, c.eps1, c.eps2) / c.a;
    const double c1 = reaction_coefficient(1, c.eps1, c.eps2) / std::pow(c.a, 3);
    const double c2 = reaction_coefficient(2, c.eps1, c.eps2) / std::pow(c.a, 5);
    f.value = c0 * c.q + c1 * c.d.dot(r) + c2 * 0.5 * r.dot(c.Q * r);
    f.gradient = c1 * c.d + c2 * c.Q * r;
    f.hessian = c2 * c.Q;
    return f;
  }
  // outside: scaled free-space field minus G/eps1
  f = multipole_derivs(Vec3::Zero(), c.q, Vec3::Zero(), Mat3::Zero(), r);
  f *= 1.0 / c.eps2 - 1.0 / c.eps1;
  FieldDerivs d1 = multipole_derivs(Vec3::Zero(), 0.0, c.d, Mat3::Zero(), r);
  d1 *= 3.0 / (c.eps1 + 2.0 * c.eps2) - 1.0 / c.eps1;
  FieldDerivs d2 = multipole_derivs(Vec3::Zero(), 0.0, Vec3::Zero(), c.Q, r);
  d2 *= 5.0 / (2.0 * c.eps1 + 3.0 * c.eps2) - 1.0 / c.eps1;
  f += d1;
  f += d2;
  return f;
}

Energies energies(const KirkwoodCase& c) {
  const double C = units::coulomb_constant;
  Energies e;
  e.monopole = 0.5 * C * reaction_coefficient(0, c.eps1, c.eps2) / c.a * c.q * c.q;
  e.dipole = 0.5 * C * reaction_coefficient(1, c.eps1, c.eps2) / std::pow(c.a, 3) * c.d.squaredNorm();
  e.quadrupole = C / 12.0 * reaction_coefficient(2, c.eps1, c.eps2) / std::pow(c.a, 5) *
                 c.Q.cwiseProduct(c.Q).sum();
  e.total = e.monopole + e.dipole + e.quadrupole;
  return e;
}

double onsager_factor(const KirkwoodCase& c) {
  return -reaction_coefficient(1, c.eps1, c.eps2) / std::pow(c.a, 3);
}

MultipoleSite as_site(const KirkwoodCase& c, double alpha) {
  MultipoleSite s;
  s.radius = c.a;
  s.q = c.q;
  s.d = c.d;
  s.Q = c.Q;
  s.alpha = alpha;
  return s;
}

}  // namespace pmpb::kirkwood
