#include "helpers.hpp"

#include "pmpb/energy.hpp"
#include "pmpb/kirkwood.hpp"

#include <doctest.h>

#include <cmath>

using namespace pmpb;
using doctest::Approx;

TEST_SUITE("energy") {
  TEST_CASE("G-delta") {
    std::mt19937_64 rng(2);
    std::vector<MultipoleSite> sites;
    for (int i = 0; i < 3; ++i) sites.push_back(testing::random_site(rng, 4.0));
    std::vector<Vec3> mu{Vec3(0.1, 0, 0), Vec3(0, 0.2, 0), Vec3(0, 0, -0.3)};
    for (std::size_t n = 0; n < 3; ++n) {
      const FieldDerivs z = g_delta(sites, mu, mu, n);
      CHECK(z.value == 0.0);
      CHECK(z.gradient.isZero(0.0));
      CHECK(z.hessian.isZero(0.0));
    }
    const std::vector<MultipoleSite> one{sites[0]};
    CHECK(g_delta(one, std::vector<Vec3>{Vec3(1, 1, 1)}, std::vector<Vec3>{Vec3::Zero()}, 0)
              .value == 0.0);

    // dipole difference (0, 0, 0.1) three units along x from the probe
    std::vector<MultipoleSite> pair(2);
    pair[1].position = Vec3(3, 0, 0);
    const std::vector<Vec3> solv{Vec3::Zero(), Vec3(0, 0, 0.1)};
    const std::vector<Vec3> vac{Vec3::Zero(), Vec3::Zero()};
    const FieldDerivs g = g_delta(pair, solv, vac, 0);
    MultipoleSite dip;
    dip.position = pair[1].position;
    dip.d = Vec3(0, 0, 0.1);
    CHECK(std::abs(g.value) < 1e-16);
    CHECK(g.gradient.norm() > 0.0);
    CHECK((g.gradient - green_gradient(dip, Vec3::Zero())).norm() < 1e-15);
    CHECK((g.hessian - green_hessian(dip, Vec3::Zero())).norm() < 1e-15);
  }

  TEST_CASE("Kirkwood monopole energy from the exact reaction potential") {
    const auto kc = kirkwood::default_case(kirkwood::Moments::Monopole);
    const MultipoleSite site = kirkwood::as_site(kc);
    const std::vector<FieldDerivs> rf{kirkwood::reaction_potential(kc, Vec3::Zero())};
    const double e = solvation_energy(std::span(&site, 1), rf);
    CHECK(e == Approx(-0.5 * 79.0 / 80.0 * 0.5 * 332.06364).epsilon(1e-14));
    CHECK(e == Approx(-81.978).epsilon(1e-5));
    // published finest-grid value
    CHECK(std::abs(e - -81.9801) < 2.5e-3);
  }

  TEST_CASE("per-site energies sum to the total") {
    std::mt19937_64 rng(4);
    std::vector<MultipoleSite> sites;
    std::vector<FieldDerivs> rf, gd;
    for (int i = 0; i < 6; ++i) {
      sites.push_back(testing::random_site(rng));
      FieldDerivs f;
      f.value = std::uniform_real_distribution<double>(-1, 1)(rng);
      f.gradient = testing::random_vec(rng, -1, 1);
      f.hessian = testing::random_traceless(rng, 1.0);
      rf.push_back(f);
      f *= 0.1;
      gd.push_back(f);
    }
    const auto parts = solvation_site_energies(sites, rf, gd);
    double sum = 0.0;
    for (double p : parts) sum += p;
    CHECK(sum == Approx(solvation_energy(sites, rf, gd)).epsilon(1e-10));
    CHECK_THROWS_AS(solvation_energy(sites, std::span(rf).first(3)), std::invalid_argument);
    CHECK_THROWS_AS(solvation_energy(sites, rf, std::span(gd).first(2)), std::invalid_argument);

    auto empty = sites;
    for (auto& s : empty) {
      s.q = 0;
      s.d.setZero();
      s.Q.setZero();
    }
    CHECK(solvation_energy(empty, rf) == 0.0);
  }

  TEST_CASE("vacuum energy") {
    std::vector<MultipoleSite> two(2);
    two[0].q = two[1].q = 1.0;
    two[1].position = Vec3(2, 0, 0);
    CHECK(vacuum_energy(two, {}) == Approx(166.03182).epsilon(1e-12));
    CHECK(vacuum_energy(std::span(two).first(1), {}) == 0.0);

    std::mt19937_64 rng(8);
    std::vector<MultipoleSite> sites;
    for (int i = 0; i < 5; ++i) sites.push_back(testing::random_site(rng, 5.0));
    std::vector<Vec3> mu;
    for (int i = 0; i < 5; ++i) mu.push_back(testing::random_vec(rng, -0.1, 0.1));
    const double e = vacuum_energy(sites, mu);
    auto rev = sites;
    auto rmu = mu;
    std::reverse(rev.begin(), rev.end());
    std::reverse(rmu.begin(), rmu.end());
    CHECK(vacuum_energy(rev, rmu) == Approx(e).epsilon(1e-12));

    // with no induced dipoles the pair sum is symmetric, so it matches the full double sum
    double full = 0.0;
    for (std::size_t n = 0; n < sites.size(); ++n)
      for (std::size_t m = 0; m < sites.size(); ++m)
        if (m != n)
          full += moment_contraction(
              sites[n], multipole_derivs(sites[m].position, sites[m].q, sites[m].d, sites[m].Q,
                                         sites[n].position));
    CHECK(vacuum_energy(sites, {}) == Approx(0.5 * units::coulomb_constant * full));
  }

  TEST_CASE("energy is quadratic in the moments") {
    // reaction data of a Kirkwood sphere scales with the moments
    auto kc = kirkwood::default_case(kirkwood::Moments::Multipole);
    auto energy = [](const kirkwood::KirkwoodCase& c) {
      const MultipoleSite s = kirkwood::as_site(c);
      const std::vector<FieldDerivs> rf{kirkwood::reaction_potential(c, Vec3::Zero())};
      return solvation_energy(std::span(&s, 1), rf);
    };
    const double e1 = energy(kc);
    for (double lam : {-1.0, 0.5, 3.0}) {
      auto k2 = kc;
      k2.q *= lam;
      k2.d *= lam;
      k2.Q *= lam;
      CHECK(energy(k2) == Approx(lam * lam * e1).epsilon(1e-13));
    }
    CHECK(e1 == Approx(kirkwood::energies(kc).total).epsilon(1e-13));
  }

  TEST_CASE("observed order") {
    CHECK(*observed_order(4e-3, 1e-3, 0.5, 0.25) == Approx(2.0));
    CHECK_FALSE(observed_order(1e-3, 1e-3, 0.5, 0.25));
    CHECK_FALSE(observed_order(0.0, 1e-3, 0.5, 0.25));

    const std::vector<double> h{1.0, 0.5, 0.25};
    const std::vector<double> e{-1.0 - 4e-2, -1.0 - 1e-2, -1.0 - 2.5e-3};
    const auto rows = kirkwood_order_table(h, e, -1.0);
    CHECK_FALSE(rows[0].order);
    CHECK(*rows[1].order == Approx(2.0));
    CHECK(*rows[2].order == Approx(2.0));
    CHECK(*rows[2].error == Approx(2.5e-3));

    const std::vector<double> same{-2.0, -2.0};
    const auto flat = kirkwood_order_table(std::span(h).first(2), same, -1.0);
    CHECK_FALSE(flat[1].order);
    const std::string table = format_table(flat);
    CHECK(table.find("nan") == std::string::npos);

    CHECK_THROWS_AS(kirkwood_order_table(std::span(h).first(1), std::span(e).first(1), -1.0),
                    std::invalid_argument);
  }

  TEST_CASE("protein extrapolation") {
    const std::vector<double> h{1.0, 0.5, 0.25};
    const std::vector<double> e{-681.62, -676.64, -677.47};
    CHECK(extrapolated_energy(h, e) == Approx(-678.29).epsilon(2e-5));
    const auto rows = protein_table(h, e);
    CHECK(*rows[0].error == Approx(0.49).epsilon(0.02));
    CHECK(*rows[1].error == Approx(0.24).epsilon(0.02));
    CHECK(*rows[2].error == Approx(0.12).epsilon(0.02));
    const std::string t = format_table(rows, true);
    CHECK(t.find("Error(%)") != std::string::npos);
    CHECK(t.find("0.49") != std::string::npos);
    CHECK_THROWS_AS(extrapolated_energy(std::span(h).first(1), std::span(e).first(1)),
                    std::invalid_argument);
  }

  TEST_CASE("failed levels render as FAILED") {
    std::vector<ConvergenceRow> rows(2);
    rows[0].h = 1.0;
    rows[0].e_sol = -5.0;
    rows[0].error = 0.1;
    rows[1].h = 0.5;
    rows[1].failed = true;
    CHECK(format_table(rows).find("0.5 FAILED") != std::string::npos);
    CHECK(format_csv(rows).find("0.5,,,,,,FAILED") != std::string::npos);
  }
}
