#include "helpers.hpp"

#include "pmpb/errors.hpp"
#include "pmpb/forcefield_io.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace pmpb;
using doctest::Approx;

namespace {

MoleculeInput parse(const std::string& text, const ParseOptions& opts = {}) {
  std::istringstream in(text);
  return parse_multipole_pqr(in, opts);
}

std::size_t parse_error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

RunConfig config(const std::string& text, bool lenient = false,
                 std::vector<std::string>* warnings = nullptr) {
  std::istringstream in(text);
  return parse_config(in, lenient, warnings);
}

}  // namespace

TEST_SUITE("forcefield_io") {
  TEST_CASE("plain PQR record") {
    const auto mol = parse("ATOM 1 C MOL 1 0 0 0 1.0 2.0\n");
    REQUIRE(mol.sites.size() == 1);
    CHECK(mol.sites[0].q == 1.0);
    CHECK(mol.sites[0].radius == 2.0);
    CHECK(mol.sites[0].d.isZero(0.0));
    CHECK(mol.sites[0].Q.isZero(0.0));
    CHECK(mol.sites[0].alpha == 0.0);
  }

  TEST_CASE("extended record with chain id, moments and polarizability") {
    const auto mol = parse(
        "REMARK test\n"
        "# comment line\n"
        "ATOM 1 N ALA A 1 1 2 3 -0.5 1.8 0.1 0.2 0.3 1 0.5 0.25 -0.4 0.125 -0.6 1.2\n"
        "TER\nEND\n");
    REQUIRE(mol.sites.size() == 1);
    const auto& s = mol.sites[0];
    CHECK(s.position == Vec3(1, 2, 3));
    CHECK(s.q == -0.5);
    CHECK(s.d == Vec3(0.1, 0.2, 0.3));
    CHECK(s.Q(0, 1) == 0.5);
    CHECK(s.Q(1, 0) == 0.5);
    CHECK(s.Q(2, 1) == 0.125);
    CHECK(s.Q(2, 2) == Approx(-0.6));
    CHECK(s.alpha == 1.2);
    CHECK(mol.warnings.empty());
  }

  TEST_CASE("small quadrupole trace is removed with a warning") {
    const auto mol = parse("ATOM 1 C MOL 1 0 0 0 0 1.5 0 0 0 1 0 0 -0.5 0 -0.499999997\n");
    CHECK(std::abs(mol.sites[0].Q.trace()) < 1e-15);
    CHECK(mol.warnings.size() == 1);

    ParseOptions keep;
    keep.trace = TracePolicy::AsIs;
    const auto raw = parse("ATOM 1 C MOL 1 0 0 0 0 1.5 0 0 0 1 0 0 1 0 1\n", keep);
    CHECK(raw.sites[0].Q.trace() == 3.0);
    CHECK_FALSE(raw.traceless);
  }

  TEST_CASE("quadrupole scale flag") {
    ParseOptions opts;
    opts.quadrupole_scale = 3.0;
    const auto mol = parse("ATOM 1 C MOL 1 0 0 0 0 1.5 0 0 0 1 0 0 -1 0 0\n", opts);
    CHECK(mol.sites[0].Q(0, 0) == 3.0);
  }

  TEST_CASE("errors carry the line number") {
    CHECK_THROWS_WITH_AS(parse(""), "no sites", ParseError);
    CHECK_THROWS_WITH_AS(parse("# nothing\n\n"), "no sites", ParseError);
    CHECK(parse_error_line("ATOM 1 C MOL 1 0 0 0 1\n") == 1);
    CHECK_THROWS_WITH_AS(parse("ATOM 1 C MOL 1 0 0 0 1\n"), doctest::Contains("missing radius"),
                         ParseError);
    CHECK(parse_error_line("ATOM 1 C MOL 1 0 0 0 1 2\nATOM 2 C MOL 1 0 0 nan 1 2\n") == 2);
    CHECK(parse_error_line("ATOM 1 C MOL 1 0 0 0 1 2\n\nATOM 2 C MOL 1 0 0 inf 1 2\n") == 3);
    CHECK(parse_error_line("ATOM 1 C MOL 1 0 x 0 1 2\n") == 1);
    CHECK(parse_error_line("ATOM 1 C MOL 1 0 0 0 1 0\n") == 1);
    CHECK(parse_error_line("ATOM 1 C MOL 1 0 0 0 1 2 1 1 1\n") == 1);
    CHECK(parse_error_line("ATOM 1 C MOL 1 0 0 0 1 2\nATOM 2 C MOL 1 0 0 0 1 2\n") == 2);
    CHECK(parse_error_line("BOND 1 2\n") == 1);
    CHECK(parse_error_line("ATOM 1 C MOL 1 0 0 0 1 2 0 0 0 0 0 0 0 0 0 -1\n") == 1);
  }

  TEST_CASE("write then parse reproduces every field") {
    std::mt19937_64 rng(21);
    MoleculeInput mol;
    for (int i = 0; i < 25; ++i) {
      auto s = testing::random_site(rng, 20.0);
      s.radius = std::uniform_real_distribution<double>(0.5, 3.0)(rng);
      s.alpha = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
      mol.sites.push_back(s);
    }
    std::stringstream io;
    write_multipole_pqr(io, mol);
    ParseOptions keep;
    keep.trace = TracePolicy::AsIs;
    const auto back = parse_multipole_pqr(io, keep);
    REQUIRE(back.sites.size() == mol.sites.size());
    for (std::size_t i = 0; i < mol.sites.size(); ++i) {
      const auto& a = mol.sites[i];
      const auto& b = back.sites[i];
      CHECK(a.position == b.position);
      CHECK(a.q == b.q);
      CHECK(a.radius == b.radius);
      CHECK(a.d == b.d);
      CHECK(a.Q == b.Q);
      CHECK(a.alpha == b.alpha);
    }
  }

  TEST_CASE("arbitrary bytes give a molecule or a parse error") {
    std::mt19937_64 rng(99);
    const std::string alphabet = "ATOMHETREMARK 0123456789.-+eEnaif#\t\n\r\x01\xff";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::uniform_int_distribution<int> len(0, 400);
    std::uniform_int_distribution<int> byte(0, 255);
    int parsed = 0, rejected = 0;
    for (int trial = 0; trial < 3000; ++trial) {
      std::string text;
      const int n = len(rng);
      for (int i = 0; i < n; ++i)
        text += trial % 3 == 0 ? static_cast<char>(byte(rng)) : alphabet[pick(rng)];
      if (trial % 5 == 0) text = "ATOM 1 C MOL 1 0 0 0 1 2\n" + text;
      try {
        parse(text);
        ++parsed;
      } catch (const ParseError&) {
        ++rejected;
      }
    }
    CHECK(parsed + rejected == 3000);
    CHECK(rejected > 0);
  }

  TEST_CASE("xyzr files") {
    std::istringstream one("0 0 0 2\n");
    const auto s = parse_xyzr(one);
    REQUIRE(s.size() == 1);
    CHECK(s[0].center == Vec3::Zero());
    CHECK(s[0].radius == 2.0);

    std::istringstream spaced("\n1 2 3 1.5   \n\n  -1 0 0 1\t\n");
    CHECK(parse_xyzr(spaced).size() == 2);

    std::istringstream zero("0 0 0 0\n");
    CHECK_THROWS_AS(parse_xyzr(zero), ParseError);

    std::istringstream bad("0 0 0 1\n0 zero 0 1\n");
    try {
      parse_xyzr(bad);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }

  TEST_CASE("config defaults") {
    const RunConfig c = config("");
    CHECK(c.eps_in == 1.0);
    CHECK(c.eps_out == 78.3);
    CHECK(c.bc_sphere_radius == 60.0);
    CHECK(c.boundary_condition == BoundaryCondition::MDH);
    CHECK(c.kappa_bar_sq() == Approx(0.015625).epsilon(1e-12));
    CHECK(c.scf_omega == 0.7);
    CHECK(c.scf_tolerance == 1e-6);
    CHECK(c.scf_max_iters == 200);
    CHECK(c.scf_max_cycles == 100);
    CHECK(c.solver_tolerance == 1e-8);
    CHECK(c.regularization == Regularization::Interior);
  }

  TEST_CASE("config keys") {
    const RunConfig c = config(
        "# Kirkwood run\n"
        "eps_out = 80   # water\n"
        "kappa = 0.125\n"
        "h = 0.25\n"
        "boundary_condition = sdh\n"
        "tangential_side = outside\n"
        "regularization = global\n");
    CHECK(c.eps_out == 80.0);
    CHECK(c.kappa_bar_sq() == Approx(0.015625).epsilon(1e-12));
    CHECK(c.grid_spacing == 0.25);
    CHECK(c.boundary_condition == BoundaryCondition::SDH);
    CHECK(c.tangential_side == TangentialSide::Outside);
    CHECK(c.regularization == Regularization::Global);

    CHECK(config("ionic_strength = 0\n").kappa_bar_sq() == 0.0);
  }

  TEST_CASE("config errors") {
    CHECK_THROWS_AS(config("eps_in = 0\n"), ParseError);
    CHECK_THROWS_AS(config("eps_in = abc\n"), ParseError);
    CHECK_THROWS_AS(config("no_such_key = 1\n"), ParseError);
    CHECK_THROWS_AS(config("eps_in\n"), ParseError);
    CHECK_THROWS_AS(config("boundary_condition = fancy\n"), ParseError);
    std::vector<std::string> warnings;
    const RunConfig c = config("no_such_key = 1\neps_in = 2\n", true, &warnings);
    CHECK(c.eps_in == 2.0);
    CHECK(warnings.size() == 1);
  }

  TEST_CASE("config round trip") {
    RunConfig c;
    c.eps_in = 2.5;
    c.ionic_strength = 0.1 / 3;
    c.grid_spacing = 0.3;
    c.boundary_condition = BoundaryCondition::SDH;
    c.scf_max_cycles = 7;
    c.preconditioner = Preconditioner::None;
    c.trace = TracePolicy::AsIs;
    c.crossing_policy = CrossingPolicy::Nearest;
    std::stringstream io;
    write_config(io, c);
    const RunConfig back = parse_config(io);
    std::stringstream again;
    write_config(again, back);
    CHECK(io.str() == again.str());
    CHECK(back.ionic_strength == c.ionic_strength);
    CHECK(back.crossing_policy == CrossingPolicy::Nearest);
  }
}
