// Runs every acceptance criterion at its stated tolerance and prints one PASS/FAIL line
// per criterion. Optional arguments select criteria by number (e.g. `pmpb_acceptance 4 8`).
// Exit status is 0 only when every selected criterion passes.

#include "pmpb/energy.hpp"
#include "pmpb/errors.hpp"
#include "pmpb/kirkwood.hpp"
#include "pmpb/kirkwood_suite.hpp"
#include "pmpb/linsolve.hpp"
#include "pmpb/polarization.hpp"
#include "pmpb/solvation.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace pmpb;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

void note(const std::string& s) {
  std::fputs(("    " + s + "\n").c_str(), stdout);
  std::fflush(stdout);
}

RunConfig kirkwood_config() {
  RunConfig c;
  c.eps_in = 1.0;
  c.eps_out = 80.0;
  c.ionic_strength = 0.0;
  c.bc_sphere_radius = 2.0;
  return c;
}

// ---- Kirkwood suite, shared by criteria 1-3 ----

const std::vector<KirkwoodStudy>& kirkwood_studies() {
  static const std::vector<KirkwoodStudy> studies = [] {
    const std::vector<kirkwood::Moments> all{kirkwood::Moments::Monopole, kirkwood::Moments::Dipole,
                                             kirkwood::Moments::Quadrupole,
                                             kirkwood::Moments::Multipole};
    const std::vector<double> levels{0.25, 0.125, 0.0625};
    KirkwoodOptions opts;
    opts.progress = [](const KirkwoodStudy& s, const KirkwoodLevel& l) {
      if (l.failed)
        note(fmt::format("{} h={} FAILED: {}", kirkwood::to_string(s.which), l.h, l.failure));
      else
        note(fmt::format("{:<10} h={:<7} E={:.6f} exact={:.6f} e_int={:.3e} iters={}",
                         kirkwood::to_string(s.which), l.h, l.e_sol, s.exact, l.e_int,
                         l.report.iterations));
    };
    return run_kirkwood_suite(all, levels, opts);
  }();
  return studies;
}

const KirkwoodLevel* level(const KirkwoodStudy& s, double h) {
  for (const auto& l : s.levels)
    if (l.h == h && !l.failed) return &l;
  return nullptr;
}

Outcome criterion1() {
  const auto& mono = kirkwood_studies().front();
  const auto* a = level(mono, 0.25);
  const auto* b = level(mono, 0.0625);
  if (!a || !b) return {false, "a level failed"};
  const double ra = std::abs(a->e_sol - mono.exact) / std::abs(mono.exact);
  const double rb = std::abs(b->e_sol - mono.exact) / std::abs(mono.exact);
  return {ra <= 5e-3 && rb <= 5e-4,
          fmt::format("monopole E(0.25) = {:.4f} ({:.2e} rel, limit 5e-3), E(0.0625) = {:.4f} "
                      "({:.2e} rel, limit 5e-4), analytic {:.4f}",
                      a->e_sol, ra, b->e_sol, rb, mono.exact)};
}

Outcome criterion2() {
  bool ok = true;
  std::string detail;
  for (const auto& s : kirkwood_studies()) {
    const auto* a = level(s, 0.25);
    const auto* b = level(s, 0.0625);
    if (!a || !b) {
      ok = false;
      detail += kirkwood::to_string(s.which) + ": failed level; ";
      continue;
    }
    const double e_order = std::log(std::abs(a->e_sol - s.exact) / std::abs(b->e_sol - s.exact)) /
                           std::log(4.0);
    const double i_order = std::log(a->e_int / b->e_int) / std::log(4.0);
    const bool pass = e_order >= 1.8 && i_order >= 1.5;
    ok &= pass;
    detail += fmt::format("{} energy {:.2f} e_int {:.2f}{}; ", kirkwood::to_string(s.which),
                          e_order, i_order, pass ? "" : " (below)");
  }
  return {ok, detail + "limits 1.8 / 1.5 over h = 0.25 -> 0.0625"};
}

Outcome criterion3() {
  const auto* a = level(kirkwood_studies().front(), 0.25);
  if (!a) return {false, "h = 0.25 failed"};
  return {a->e_int < 1e-4, fmt::format("monopole e_int(0.25) = {:.3e} (limit 1e-4)", a->e_int)};
}

// ---- induction ----

std::vector<Vec3> dense_induction(const std::vector<MultipoleSite>& sites) {
  const Eigen::Index n = static_cast<Eigen::Index>(sites.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(3 * n, 3 * n);
  Eigen::VectorXd g(3 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vec3 e = Vec3::Zero();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      e -= green_gradient(sites[j], sites[i].position);
      M.block<3, 3>(3 * i, 3 * j) = -sites[i].alpha * interaction_tensor(sites[i], sites[j]);
    }
    g.segment<3>(3 * i) = sites[i].alpha * e;
  }
  const Eigen::VectorXd mu = M.partialPivLu().solve(g);
  std::vector<Vec3> out;
  for (Eigen::Index i = 0; i < n; ++i) out.push_back(mu.segment<3>(3 * i));
  return out;
}

Vec3 random_vec(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(rng), u(rng), u(rng)};
}

Mat3 random_traceless(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-1, 1);
  Mat3 a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = u(rng);
  Mat3 s = scale * (a + a.transpose()) / 2;
  s -= s.trace() / 3 * Mat3::Identity();
  return s;
}

Outcome criterion4() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1, 1), alpha(0.2, 1.0);
  std::uniform_int_distribution<int> count(2, 5);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<MultipoleSite> sites;
    const int n = count(rng);
    while (static_cast<int>(sites.size()) < n) {
      MultipoleSite s;
      s.position = random_vec(rng, -3, 3);
      s.q = u(rng);
      s.d = random_vec(rng, -0.5, 0.5);
      s.Q = random_traceless(rng, 0.5);
      s.alpha = alpha(rng);
      bool close = false;
      for (const auto& t : sites) close |= (t.position - s.position).norm() < 2.5;
      if (!close) sites.push_back(s);
    }
    PolarizationOptions o;
    o.tolerance = 1e-13;
    o.max_iters = 5000;
    const auto st = sor_vacuum(sites, o);
    worst = std::max(worst, rms_difference(st.mu, dense_induction(sites)));
  }
  return {worst <= 1e-8, fmt::format("worst rms(SOR - dense) = {:.2e} over 10 systems (limit 1e-8)",
                                     worst)};
}

Outcome criterion5() {
  const auto kc = kirkwood::default_case(kirkwood::Moments::Dipole);
  const double alpha = 0.5;
  const double f = 2 * (kc.eps2 - kc.eps1) / ((2 * kc.eps2 + kc.eps1) * std::pow(kc.a, 3));
  const MultipoleSite site = kirkwood::as_site(kc, alpha);
  RunConfig cfg = kirkwood_config();
  cfg.scf_tolerance = 1e-9;
  const auto geometry = InterfaceGeometry::sphere(Vec3::Zero(), kc.a);
  const SolvationResult r = run_solvation(std::span(&site, 1), geometry, cfg, 0.125);
  const Vec3 p = site.d + r.solvated.mu[0];
  const Vec3 expect = site.d / (1 - alpha * f);
  const double rel = (p - expect).norm() / expect.norm();
  return {r.solvated.converged && rel <= 0.01,
          fmt::format("p_z = {:.6f}, d/(1 - alpha f) = {:.6f}, rel {:.2e} (limit 1e-2), {} PDE solves",
                      p.z(), expect.z(), rel, r.solvated.iterations)};
}

Outcome criterion6() {
  // equal dielectrics, no salt: no reaction field
  RunConfig cfg = kirkwood_config();
  cfg.eps_out = 1.0;
  auto kc = kirkwood::default_case(kirkwood::Moments::Multipole);
  std::vector<MultipoleSite> sites{kirkwood::as_site(kc, 0.3)};
  MultipoleSite other;
  other.position = Vec3(1.2, 0.4, -0.3);
  other.radius = 1.5;
  other.q = -0.4;
  other.d = Vec3(0.1, 0.2, 0.0);
  other.alpha = 0.4;
  sites.push_back(other);
  const auto geometry = molecular_interface(sites, {}, cfg);
  const SolvationResult r = run_solvation(sites, geometry, cfg, 0.25);
  // for reference only: the Global form has identically zero data in this limit
  RunConfig global = cfg;
  global.regularization = Regularization::Global;
  const double e_global = run_solvation(sites, geometry, global, 0.25).e_sol;

  // constant Dirichlet data reproduces a constant
  const auto sphere = InterfaceGeometry::sphere(Vec3::Zero(), 2.0);
  const ReactionFieldSolver solver(sphere, Box(Vec3::Constant(-3), Vec3::Constant(3)), cfg, 0.25);
  SourceData src;
  src.jumps.assign(solver.op().rules.crossings.size(), JumpData{});
  src.dirichlet.assign(solver.op().boundary_nodes.size(), 0.7);
  const auto b = assemble_rhs(solver.op(), src);
  std::vector<double> x;
  SolverOptions so;
  so.tolerance = 1e-10;
  bicgstab(solver.op().A, b, x, so);
  double dev = 0.0;
  for (double v : x) dev = std::max(dev, std::abs(v - 0.7) / 0.7);
  return {std::abs(r.e_sol) < 1e-6 && dev <= 1e-8,
          fmt::format("|E_sol| = {:.2e} kcal/mol at h = 0.25 (limit 1e-6; global "
                      "regularization gives {:.2e}); constant reproduction max rel deviation "
                      "{:.2e} at solver tolerance 1e-10",
                      std::abs(r.e_sol), std::abs(e_global), dev)};
}

// Compact synthetic solute: overlapping spheres, mixed moments, moderate polarizabilities.
std::vector<MultipoleSite> synthetic_molecule(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1), radius(1.5, 2.0), alpha(0.2, 0.6);
  const double cluster = 1.35 * std::cbrt(static_cast<double>(n));
  std::vector<MultipoleSite> sites;
  while (static_cast<int>(sites.size()) < n) {
    const Vec3 p = random_vec(rng, -cluster, cluster);
    if (p.norm() > cluster) continue;
    bool close = false;
    for (const auto& s : sites) close |= (s.position - p).norm() < 2.0;
    if (close) continue;
    MultipoleSite s;
    s.position = p;
    s.radius = radius(rng);
    s.q = 0.5 * u(rng);
    s.d = random_vec(rng, -0.2, 0.2);
    s.Q = random_traceless(rng, 0.3);
    s.alpha = alpha(rng);
    sites.push_back(s);
  }
  return sites;
}

Outcome criterion7() {
  const auto sites = synthetic_molecule(200, 7);
  RunConfig cfg;  // defaults: eps 1 / 78.3, kappa_bar 0.125, MDH
  // crevices between vdW spheres are narrower than h = 1; take the crossing nearest the
  // solute side instead of demanding refinement
  cfg.crossing_policy = CrossingPolicy::Nearest;
  const auto geometry = molecular_interface(sites, {}, cfg);
  const std::vector<double> h{1.0, 0.5, 0.25};
  std::vector<double> e;
  bool scf_ok = true;
  for (double hh : h) {
    try {
      const SolvationResult r = run_solvation(sites, geometry, cfg, hh);
      note(fmt::format("200 sites h={:<5} E_sol={:.4f} SCF cycles={} unknowns={}", hh, r.e_sol,
                       r.solvated.iterations, r.unknowns));
      scf_ok &= r.solvated.converged && r.vacuum.converged;
      e.push_back(r.e_sol);
    } catch (const Error& ex) {
      return {false, fmt::format("h = {} failed: {}", hh, ex.what())};
    }
  }
  bool finite = true;
  for (double v : e) finite &= std::isfinite(v);
  const auto rows = protein_table(h, e);
  const bool decreasing = *rows[0].error > *rows[1].error && *rows[1].error > *rows[2].error;
  return {finite && decreasing && scf_ok,
          fmt::format("E = {:.3f}, {:.3f}, {:.3f}; extrapolated {:.3f}; errors {:.3f}% > {:.3f}% > "
                      "{:.3f}%: {}; SCF converged: {}; crossing_policy = nearest",
                      e[0], e[1], e[2], extrapolated_energy(h, e), *rows[0].error,
                      *rows[1].error, *rows[2].error, decreasing ? "yes" : "no",
                      scf_ok ? "yes" : "no")};
}

Outcome criterion8() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst_g = 0.0, worst_h = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    MultipoleSite s;
    s.position = random_vec(rng, -1, 1);
    s.q = u(rng);
    s.d = random_vec(rng, -1, 1);
    s.Q = random_traceless(rng, 1.0);
    Vec3 r;
    do r = random_vec(rng, -4, 4);
    while ((r - s.position).norm() < 1.0);
    const double step = 1e-5;
    Vec3 fd_g;
    Mat3 fd_h;
    for (int a = 0; a < 3; ++a) {
      Vec3 e = Vec3::Zero();
      e[a] = step;
      fd_g[a] = (green_potential(s, r + e) - green_potential(s, r - e)) / (2 * step);
      fd_h.col(a) = (green_gradient(s, r + e) - green_gradient(s, r - e)) / (2 * step);
    }
    const Vec3 g = green_gradient(s, r);
    const Mat3 H = green_hessian(s, r);
    worst_g = std::max(worst_g, (fd_g - g).norm() / g.norm());
    worst_h = std::max(worst_h, (fd_h - H).norm() / H.norm());
  }

  // quadratic reproduction by the reaction-field fit
  const auto sphere = InterfaceGeometry::sphere(Vec3::Zero(), 2.0);
  const Grid grid = build_grid_box(sphere, Box(Vec3::Constant(-3), Vec3::Constant(3)), 0.25);
  double worst_fit = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const double c0 = u(rng);
    const Vec3 c1 = random_vec(rng, -1, 1);
    Mat3 c2 = random_traceless(rng, 1.0) + u(rng) * Mat3::Identity();
    std::vector<double> phi(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Vec3 x = grid.position(i);
      phi[i] = c0 + c1.dot(x) + 0.5 * x.dot(c2 * x);
    }
    const Vec3 at = random_vec(rng, -0.8, 0.8);
    const FieldDerivs f = reaction_data_at(phi, grid, at);
    worst_fit = std::max({worst_fit, std::abs(f.value - (c0 + c1.dot(at) + 0.5 * at.dot(c2 * at))),
                          (f.gradient - (c1 + c2 * at)).norm(), (f.hessian - c2).norm()});
  }
  return {worst_g < 1e-5 && worst_h < 1e-5 && worst_fit < 1e-9,
          fmt::format("max rel FD error: gradient {:.2e}, Hessian {:.2e} (limit 1e-5); quadratic "
                      "fit error {:.2e} (limit 1e-9)",
                      worst_g, worst_h, worst_fit)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"Kirkwood monopole energy", criterion1},
      {"Kirkwood convergence orders", criterion2},
      {"interface error magnitude", criterion3},
      {"vacuum SCF vs dense solve", criterion4},
      {"solvated SCF Onsager fixed point", criterion5},
      {"homogeneous-limit null tests", criterion6},
      {"multi-sphere convergence run", criterion7},
      {"numerical derivative suite", criterion8},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.contains(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id,
                criteria[k].first, o.detail.c_str(), sec);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
