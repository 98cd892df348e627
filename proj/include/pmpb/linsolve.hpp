#pragma once

#include "pmpb/errors.hpp"
#include "pmpb/forcefield_io.hpp"
#include "pmpb/multipole.hpp"
#include "pmpb/sparse.hpp"

#include <span>
#include <string>
#include <vector>

namespace pmpb {

/// Debye decay length^-1 used by the analytic boundary data: kbar / sqrt(eps_out), the
/// screening rate of -eps_out Lap(phi) + kbar^2 phi = 0.
double debye_kappa(const RunConfig& cfg);

/// Dirichlet data g(r) for the total potential at `points`.
///   SDH: sum_n q_n exp(-k s)/(eps_out s)
///   MDH: each site's l = 0, 1, 2 parts scaled by the exterior Kirkwood factor of a
///        sphere of radius bc_sphere_radius; exact for centered sources at k = 0.
std::vector<double> boundary_values(std::span<const MultipoleSite> sites,
                                    std::span<const Vec3> induced, const RunConfig& cfg,
                                    std::span<const Vec3> points);

/// MDH multiplier for the order-l free-space term at distance s.
double mdh_factor(int l, double s, double kappa, double a, double eps_in, double eps_out);

struct SolveReport {
  long iterations = 0;
  double residual = 0.0;  ///< recomputed ||b - A x|| / ||b||
  double seconds = 0.0;
  bool converged = false;
};

class SolveFailure : public ConvergenceError {
 public:
  SolveFailure(const std::string& what, SolveReport report)
      : ConvergenceError(what), report_(report) {}
  const SolveReport& report() const noexcept { return report_; }

 private:
  SolveReport report_;
};

struct SolverOptions {
  double tolerance = 1e-8;
  long max_iters = 0;  ///< 0 selects 10 * N^(1/3) * 100
  Preconditioner preconditioner = Preconditioner::Jacobi;
};

SolverOptions solver_options(const RunConfig& cfg);

/// Preconditioned BiCGStab. `x` holds the initial guess on entry (resized and zeroed
/// when its size does not match). Throws SolveFailure when the tolerance is not met.
SolveReport bicgstab(const CsrMatrix& A, std::span<const double> b, std::vector<double>& x,
                     const SolverOptions& opts);

}  // namespace pmpb
