// Wall-clock comparison of the OpenMP kernels against their serial twins, plus one
// end-to-end Kirkwood solve. Usage: pmpb_bench [h]  (default h = 0.125)

#include "pmpb/kernels.hpp"
#include "pmpb/kirkwood.hpp"
#include "pmpb/solvation.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <random>

using namespace pmpb;

namespace {

template <class F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, double serial, double omp) {
  fmt::print("{:<16} {:>10.4f} {:>10.4f} {:>7.2f}x\n", name, serial, omp, serial / omp);
}

}  // namespace

int main(int argc, char** argv) {
  const double h = argc > 1 ? std::atof(argv[1]) : 0.125;
  fmt::print("threads: {}\n", kernels::thread_count());

  const auto kc = kirkwood::default_case(kirkwood::Moments::Multipole);
  const MultipoleSite site = kirkwood::as_site(kc);
  const auto sphere = InterfaceGeometry::sphere(Vec3::Zero(), kc.a);
  RunConfig cfg;
  cfg.eps_out = kc.eps2;
  cfg.ionic_strength = 0.0;
  cfg.bc_sphere_radius = kc.a;

  const auto t0 = std::chrono::steady_clock::now();
  const ReactionFieldSolver solver(sphere, Box(Vec3::Constant(-3), Vec3::Constant(3)), cfg, h);
  const double setup = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto t1 = std::chrono::steady_clock::now();
  const auto sol = solver.solve(std::span(&site, 1), {});
  const double solve = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
  fmt::print("Kirkwood h={}: {} unknowns, setup {:.3f} s, solve {:.3f} s ({} iterations)\n\n", h,
             solver.op().A.rows, setup, solve, sol.report.iterations);

  fmt::print("{:<16} {:>10} {:>10} {:>8}\n", "kernel", "serial s", "omp s", "speedup");
  const CsrMatrix& A = solver.op().A;
  std::vector<double> x(A.rows, 1.0), y(A.rows);
  row("spmv", best_of(5, [&] { kernels::serial::spmv(A, x, y); }),
      best_of(5, [&] { kernels::omp::spmv(A, x, y); }));
  volatile double sink = 0.0;
  row("dot", best_of(5, [&] { sink = kernels::serial::dot(x, y); }),
      best_of(5, [&] { sink = kernels::omp::dot(x, y); }));

  Grid g = solver.grid();
  std::vector<std::uint8_t> flags(g.size());
  row("classify_sides", best_of(3, [&] { kernels::serial::classify_sides(sphere, g, flags); }),
      best_of(3, [&] { kernels::omp::classify_sides(sphere, g, flags); }));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<MultipoleSite> sites(200);
  for (auto& s : sites) {
    s.position = Vec3(u(rng), u(rng), u(rng)) * 10;
    s.q = u(rng);
    s.d = Vec3(u(rng), u(rng), u(rng)) * 0.2;
  }
  std::vector<Vec3> pts(20000);
  for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng)) * 40 + Vec3::Constant(60);
  std::vector<double> out(pts.size());
  row("coulomb_at", best_of(3, [&] { kernels::serial::coulomb_at(sites, {}, pts, 1.0, out); }),
      best_of(3, [&] { kernels::omp::coulomb_at(sites, {}, pts, 1.0, out); }));
  return 0;
}
