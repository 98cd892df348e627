#include "pmpb/linsolve.hpp"

#include "pmpb/errors.hpp"
#include "pmpb/kernels.hpp"

#include <chrono>
#include <cmath>

namespace pmpb {

double debye_kappa(const RunConfig& cfg) {
  return std::sqrt(cfg.kappa_bar_sq() / cfg.eps_out);
}

double mdh_factor(int l, double s, double kappa, double a, double eps_in, double eps_out) {
  const double ll = l;
  if (kappa == 0.0) return (2 * ll + 1) / (ll * eps_in + (ll + 1) * eps_out);
  // k_l(x) ~ exp(-x) P_l(x) / x^(l+1) up to constants
  auto P = [l](double x) {
    switch (l) {
      case 0: return 1.0;
      case 1: return 1.0 + x;
      default: return x * x + 3.0 * x + 3.0;
    }
  };
  auto dP = [l](double x) {
    switch (l) {
      case 0: return 0.0;
      case 1: return 1.0;
      default: return 2.0 * x + 3.0;
    }
  };
  const double ka = kappa * a;
  const double denom = ll * eps_in + eps_out * ((ll + 1) + ka * (1.0 - dP(ka) / P(ka)));
  return (2 * ll + 1) * std::exp(-kappa * (s - a)) * P(kappa * s) / P(ka) / denom;
}

std::vector<double> boundary_values(std::span<const MultipoleSite> sites,
                                    std::span<const Vec3> induced, const RunConfig& cfg,
                                    std::span<const Vec3> points) {
  const double kappa = debye_kappa(cfg);
  std::vector<double> g(points.size(), 0.0);
  const auto np = static_cast<std::int64_t>(points.size());
  bool singular = false;
#pragma omp parallel for schedule(static) num_threads(kernels::thread_count()) \
    reduction(|| : singular)
  for (std::int64_t i = 0; i < np; ++i) {
    const Vec3& r = points[static_cast<std::size_t>(i)];
    double v = 0.0;
    for (std::size_t n = 0; n < sites.size(); ++n) {
      const MultipoleSite& site = sites[n];
      const Vec3 s = r - site.position;
      const double d = s.norm();
      if (d < units::singular_epsilon) {
        singular = true;
        continue;
      }
      if (cfg.boundary_condition == BoundaryCondition::SDH) {
        v += site.q * std::exp(-kappa * d) / (cfg.eps_out * d);
        continue;
      }
      const Vec3 p = induced.empty() ? site.d : Vec3(site.d + induced[n]);
      const double a = cfg.bc_sphere_radius;
      const double d3 = d * d * d;
      v += mdh_factor(0, d, kappa, a, cfg.eps_in, cfg.eps_out) * site.q / d;
      v += mdh_factor(1, d, kappa, a, cfg.eps_in, cfg.eps_out) * s.dot(p) / d3;
      v += mdh_factor(2, d, kappa, a, cfg.eps_in, cfg.eps_out) * s.dot(site.Q * s) /
           (2.0 * d3 * d * d);
    }
    g[static_cast<std::size_t>(i)] = v;
  }
  if (singular) throw SingularityError("boundary node coincides with a site center");
  return g;
}

SolverOptions solver_options(const RunConfig& cfg) {
  return {cfg.solver_tolerance, cfg.solver_max_iters, cfg.preconditioner};
}

namespace {

double norm(std::span<const double> v) { return std::sqrt(kernels::omp::dot(v, v)); }

double true_residual(const CsrMatrix& A, std::span<const double> b, std::span<const double> x,
                     std::vector<double>& work, double bnorm) {
  kernels::omp::spmv(A, x, work);
  double s = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double e = b[i] - work[i];
    s += e * e;
  }
  return std::sqrt(s) / bnorm;
}

}  // namespace

SolveReport bicgstab(const CsrMatrix& A, std::span<const double> b, std::vector<double>& x,
                     const SolverOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = A.rows;
  if (b.size() != n) throw std::invalid_argument("right-hand side size mismatch");
  if (x.size() != n) x.assign(n, 0.0);
  const long max_iters =
      opts.max_iters > 0
          ? opts.max_iters
          : static_cast<long>(10.0 * std::cbrt(static_cast<double>(std::max<std::size_t>(n, 1))) * 100.0);

  SolveReport rep;
  auto finish = [&](bool ok) {
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.converged = ok;
    return rep;
  };

  const double bnorm = norm(b);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return finish(true);
  }

  std::vector<double> inv_diag(n, 1.0);
  if (opts.preconditioner == Preconditioner::Jacobi)
    for (std::size_t i = 0; i < n; ++i) {
      const double d = A.diagonal(i);
      inv_diag[i] = d != 0.0 ? 1.0 / d : 1.0;
    }

  std::vector<double> r(n), r0(n), p(n, 0.0), v(n, 0.0), s(n), t(n), y(n), z(n);
  kernels::omp::spmv(A, x, r);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  r0 = r;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  double rel = norm(r) / bnorm;

  for (long it = 0; it < max_iters && rel > opts.tolerance; ++it) {
    const double rho_new = kernels::omp::dot(r0, r);
    if (rho_new == 0.0 || omega == 0.0) {
      // breakdown: restart from the current iterate
      kernels::omp::spmv(A, x, r);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
      r0 = r;
      std::fill(p.begin(), p.end(), 0.0);
      std::fill(v.begin(), v.end(), 0.0);
      rho = alpha = omega = 1.0;
      rep.iterations = it + 1;
      continue;
    }
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    for (std::size_t i = 0; i < n; ++i) y[i] = inv_diag[i] * p[i];
    kernels::omp::spmv(A, y, v);
    alpha = rho / kernels::omp::dot(r0, v);
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * s[i];
    kernels::omp::spmv(A, z, t);
    const double tt = kernels::omp::dot(t, t);
    omega = tt > 0.0 ? kernels::omp::dot(t, s) / tt : 0.0;
    for (std::size_t i = 0; i < n; ++i) x[i] += alpha * y[i] + omega * z[i];
    for (std::size_t i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
    rel = norm(r) / bnorm;
    rep.iterations = it + 1;
    if (rel <= opts.tolerance) {
      // guard against drift of the recursive residual
      rel = true_residual(A, b, x, t, bnorm);
      if (rel > opts.tolerance) {
        kernels::omp::spmv(A, x, r);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
        r0 = r;
        std::fill(p.begin(), p.end(), 0.0);
        std::fill(v.begin(), v.end(), 0.0);
        rho = alpha = omega = 1.0;
      }
    }
  }

  rep.residual = true_residual(A, b, x, t, bnorm);
  finish(rep.residual <= opts.tolerance);
  if (!rep.converged)
    throw SolveFailure("linear solver did not converge: relative residual " +
                           std::to_string(rep.residual) + " after " +
                           std::to_string(rep.iterations) + " iterations",
                       rep);
  return rep;
}

}  // namespace pmpb
