#pragma once

// Closed-form fields of multipoles centered in a dielectric sphere (radius a, dielectric
// eps1 inside, eps2 outside, no screening). The order-l free-space potential G_l of the
// source expands as
//   inside:  G_l/eps1 + X_l r^(2l+1)/a^(2l+1) G_l,  X_l = -(l+1)(eps2-eps1)/(eps1(l eps1+(l+1)eps2))
//   outside: (2l+1)/(l eps1 + (l+1) eps2) G_l
// Quadrupoles follow the site convention r^T Q r/(2 r^5); the traceless-Theta form
// Theta:rr/r^5 is related by Theta = s Q (see quadrupole_bridge).

#include "pmpb/multipole.hpp"

#include <string>

namespace pmpb::kirkwood {

struct KirkwoodCase {
  double a = 2.0;
  double eps1 = 1.0;
  double eps2 = 80.0;
  double q = 0.0;
  Vec3 d = Vec3::Zero();
  Mat3 Q = Mat3::Zero();  ///< traceless, site convention
};

enum class Moments { Monopole, Dipole, Quadrupole, Multipole };

/// Parses monopole|dipole|quadrupole|multipole; throws std::invalid_argument otherwise.
Moments parse_moments(const std::string& name);
std::string to_string(Moments m);

/// Reaction coefficient X_l.
double reaction_coefficient(int l, double eps1, double eps2);

/// s in Theta = s Q, fixed by requiring the Theta-form potential to equal the site
/// potential in a homogeneous medium.
double quadrupole_bridge();

/// Default moments: q = 1, d = (0, 0, 0.343), Q = c diag(-1, -1, 2) with c chosen so the
/// quadrupole energy is -1.7924 kcal/mol for a = 2, eps = 1/80. A convention, not data.
KirkwoodCase default_case(Moments which);

/// Total potential (e_c/Å). Throws SingularityError at the center.
double potential(const KirkwoodCase& c, const Vec3& r);

/// phi - G with G = free-space potential / eps1, on either side. Inside it is a
/// polynomial, so derivatives are exact at the center.
FieldDerivs reaction_potential(const KirkwoodCase& c, const Vec3& r);

struct Energies {
  double monopole = 0.0;
  double dipole = 0.0;
  double quadrupole = 0.0;
  double total = 0.0;
};

/// 1/2 C [q phi_RF + d·grad phi_RF + (1/6) Q:Hess phi_RF] at the center, split by order.
Energies energies(const KirkwoodCase& c);

/// Onsager factor f = -X_1/a^3, so the reaction field at the center is -grad = f p.
double onsager_factor(const KirkwoodCase& c);

/// The case's moments as a site at the origin (radius a).
MultipoleSite as_site(const KirkwoodCase& c, double alpha = 0.0);

}  // namespace pmpb::kirkwood
