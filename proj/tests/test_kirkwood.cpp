#include "helpers.hpp"

#include "pmpb/errors.hpp"
#include "pmpb/kirkwood.hpp"

#include <doctest.h>

#include <cmath>

using namespace pmpb;
using namespace pmpb::kirkwood;
using doctest::Approx;

namespace {

constexpr Moments kAll[] = {Moments::Monopole, Moments::Dipole, Moments::Quadrupole,
                            Moments::Multipole};

// second-order central differences of the total potential
Vec3 fd_gradient(const KirkwoodCase& c, const Vec3& r, double step = 1e-5) {
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 e = Vec3::Zero();
    e[a] = step;
    g[a] = (potential(c, r + e) - potential(c, r - e)) / (2 * step);
  }
  return g;
}

// reaction part plus the free-space field over eps1, valid on both sides
Vec3 total_gradient(const KirkwoodCase& c, const Vec3& r) {
  return reaction_potential(c, r).gradient + green_gradient(as_site(c), r) / c.eps1;
}

}  // namespace

TEST_SUITE("kirkwood_oracle") {
  TEST_CASE("names") {
    for (auto m : kAll) CHECK(parse_moments(to_string(m)) == m);
    CHECK_THROWS_AS(parse_moments("octupole"), std::invalid_argument);
  }

  TEST_CASE("homogeneous limit is the free-space field") {
    std::mt19937_64 rng(1);
    for (auto m : kAll) {
      auto c = default_case(m);
      c.eps1 = c.eps2 = 4.0;
      const MultipoleSite s = as_site(c);
      for (int i = 0; i < 50; ++i) {
        const Vec3 r = std::uniform_real_distribution<double>(0.3, 6)(rng) * testing::random_unit(rng);
        CHECK(potential(c, r) == Approx(green_potential(s, r) / 4.0).epsilon(1e-13));
        const FieldDerivs rf = reaction_potential(c, r);
        CHECK(std::abs(rf.value) < 1e-14);
      }
      CHECK(energies(c).total == 0.0);
    }
  }

  TEST_CASE("quadrupole bridge") {
    CHECK(quadrupole_bridge() == Approx(0.5).epsilon(1e-14));
    // the Theta-form interior potential with Theta = Q/2 matches the site form
    const auto c = default_case(Moments::Quadrupole);
    const Mat3 theta = quadrupole_bridge() * c.Q;
    const Vec3 r(0.4, -0.3, 0.9);
    const double n = r.norm();
    const double x = 3 * (c.eps2 - c.eps1) / (3 * c.eps2 + 2 * c.eps1) / std::pow(c.a, 5);
    const double theta_in = (1 / std::pow(n, 5) - x) * r.dot(theta * r);
    CHECK(potential(c, r) == Approx(theta_in).epsilon(1e-13));
    const Vec3 o(0, 3, 1);
    const double theta_out =
        5 * c.eps2 / (3 * c.eps2 + 2 * c.eps1) / std::pow(o.norm(), 5) * o.dot(theta * o) / c.eps2;
    CHECK(potential(c, o) == Approx(theta_out).epsilon(1e-13));
  }

  TEST_CASE("monopole reaction constant") {
    const auto c = default_case(Moments::Monopole);
    for (const Vec3& r : {Vec3(0.1, 0, 0), Vec3(0.5, -0.7, 1.1), Vec3(0, 0, 1.99)}) {
      CHECK(potential(c, r) - 1.0 / r.norm() == Approx(-0.49375).epsilon(1e-13));
      CHECK(reaction_potential(c, r).value == Approx(-0.49375).epsilon(1e-13));
    }
    CHECK(reaction_potential(c, Vec3::Zero()).value == Approx(-0.49375).epsilon(1e-14));
    CHECK(potential(c, Vec3(3, 4, 0)) == Approx(1.0 / (80 * 5)).epsilon(1e-14));
    CHECK_THROWS_AS(potential(c, Vec3::Zero()), SingularityError);
  }

  TEST_CASE("appendix dipole forms") {
    const auto c = default_case(Moments::Dipole);
    const Vec3 in(0.3, 0.2, -0.8), out(1.0, -2.0, 3.5);
    const double e1 = c.eps1, e2 = c.eps2;
    const double inside = (1 / std::pow(in.norm(), 3) - 2 * (e2 - e1) / (2 * e2 + e1) / 8) *
                          c.d.dot(in);
    CHECK(potential(c, in) == Approx(inside).epsilon(1e-13));
    // the exterior form carries the outer dielectric in the denominator
    const double outside = 3 / (2 * e2 + e1) * c.d.dot(out) / std::pow(out.norm(), 3);
    CHECK(potential(c, out) == Approx(outside).epsilon(1e-13));
    // interior reaction gradient is -f d
    const Vec3 g = reaction_potential(c, in).gradient;
    CHECK((g + onsager_factor(c) * c.d).norm() < 1e-15);
  }

  TEST_CASE("continuity and flux continuity across the sphere") {
    std::mt19937_64 rng(3);
    for (auto m : kAll) {
      const auto c = default_case(m);
      for (int i = 0; i < 40; ++i) {
        const Vec3 u = testing::random_unit(rng);
        const double eps = 1e-10;
        const Vec3 rin = (c.a - eps) * u, rout = (c.a + eps) * u;
        const double scale = std::abs(potential(c, rin)) + 1e-3;
        CHECK(std::abs(potential(c, rin) - potential(c, rout)) < 1e-8 * scale);
        const double flux_in = c.eps1 * total_gradient(c, rin).dot(u);
        const double flux_out = c.eps2 * total_gradient(c, rout).dot(u);
        CHECK(std::abs(flux_in - flux_out) < 1e-8 * (std::abs(flux_in) + 1e-3));
      }
    }
  }

  TEST_CASE("harmonic on both sides") {
    std::mt19937_64 rng(5);
    for (auto m : kAll) {
      const auto c = default_case(m);
      for (double r : {0.8, 1.5, 2.7, 5.0}) {
        const Vec3 p = r * testing::random_unit(rng);
        const FieldDerivs rf = reaction_potential(c, p);
        const Mat3 H = rf.hessian + green_hessian(as_site(c), p) / c.eps1;
        CHECK(std::abs(H.trace()) < 1e-12 * (H.norm() + 1e-3));
        CHECK(std::abs(rf.hessian.trace()) < 1e-12 * (rf.hessian.norm() + 1e-3));
        // the analytic total gradient matches differences of the total potential
        CHECK((fd_gradient(c, p) - total_gradient(c, p)).norm() <
              1e-6 * (total_gradient(c, p).norm() + 1e-3));
      }
    }
  }

  TEST_CASE("reaction derivatives are consistent") {
    std::mt19937_64 rng(7);
    auto c = default_case(Moments::Multipole);
    c.d = Vec3(0.2, -0.1, 0.343);
    c.Q = testing::random_traceless(rng, 0.6);
    for (double r : {0.5, 1.7, 3.0}) {
      const Vec3 p = r * testing::random_unit(rng);
      const FieldDerivs f = reaction_potential(c, p);
      for (int a = 0; a < 3; ++a) {
        Vec3 e = Vec3::Zero();
        e[a] = 1e-6;
        const double d = (reaction_potential(c, p + e).value - reaction_potential(c, p - e).value) / 2e-6;
        CHECK(d == Approx(f.gradient[a]).epsilon(1e-6).scale(1e-3));
        const Vec3 dg = (reaction_potential(c, p + e).gradient - reaction_potential(c, p - e).gradient) / 2e-6;
        CHECK((dg - f.hessian.col(a)).norm() < 1e-5 * (f.hessian.norm() + 1e-3));
      }
    }
  }

  TEST_CASE("energies") {
    const auto mono = energies(default_case(Moments::Monopole));
    CHECK(mono.total == Approx(-81.978).epsilon(1e-5));
    const auto dip = energies(default_case(Moments::Dipole));
    CHECK(dip.total == Approx(-2.3962).epsilon(5e-5));
    const auto quad = energies(default_case(Moments::Quadrupole));
    CHECK(quad.total == Approx(-1.7924).epsilon(1e-10));
    const auto all = energies(default_case(Moments::Multipole));
    CHECK(all.total == Approx(mono.total + dip.total + quad.total).epsilon(1e-14));
    // published finest-grid value for the combined case
    CHECK(std::abs(all.total - -86.1687) < 5e-3);

    // dipole energy from the Appendix formula
    const auto c = default_case(Moments::Dipole);
    const double ud = -0.5 * 2 * (c.eps2 - c.eps1) / (2 * c.eps2 + c.eps1) / 8 * c.d.squaredNorm();
    CHECK(dip.dipole == Approx(ud * units::coulomb_constant).epsilon(1e-14));
  }

  TEST_CASE("energies scale as a^-(2l+1)") {
    for (auto m : {Moments::Monopole, Moments::Dipole, Moments::Quadrupole}) {
      auto c = default_case(m);
      const double e2 = energies(c).total;
      c.a = 4.0;
      const double e4 = energies(c).total;
      const int l = m == Moments::Monopole ? 0 : m == Moments::Dipole ? 1 : 2;
      CHECK(e4 == Approx(e2 / std::pow(2.0, 2 * l + 1)).epsilon(1e-13));
    }
  }

  TEST_CASE("potential is linear in the moments") {
    std::mt19937_64 rng(9);
    const auto a = default_case(Moments::Dipole);
    const auto b = default_case(Moments::Quadrupole);
    auto ab = a;
    ab.Q = b.Q;
    for (int i = 0; i < 20; ++i) {
      const Vec3 r = std::uniform_real_distribution<double>(0.2, 5)(rng) * testing::random_unit(rng);
      CHECK(potential(ab, r) == Approx(potential(a, r) + potential(b, r)).epsilon(1e-13));
    }
  }
}
