#pragma once

#include "pmpb/errors.hpp"
#include "pmpb/forcefield_io.hpp"
#include "pmpb/grid.hpp"
#include "pmpb/multipole.hpp"

#include <functional>
#include <set>
#include <span>
#include <utility>
#include <vector>

namespace pmpb {

/// Site pairs excluded from site-site polarization terms (symmetric).
class PairMask {
 public:
  void exclude(std::size_t n, std::size_t m) { pairs_.emplace(std::min(n, m), std::max(n, m)); }
  bool masked(std::size_t n, std::size_t m) const {
    return !pairs_.empty() && pairs_.contains({std::min(n, m), std::max(n, m)});
  }
  bool empty() const { return pairs_.empty(); }

 private:
  std::set<std::pair<std::size_t, std::size_t>> pairs_;
};

struct InducedDipoleState {
  std::vector<Vec3> mu;
  int iterations = 0;  ///< SOR sweeps (vacuum) or PDE cycles (solvated)
  double last_rms = 0.0;
  bool converged = false;
  std::vector<double> history;  ///< rms change per iteration
};

class ScfFailure : public ConvergenceError {
 public:
  ScfFailure(const std::string& what, InducedDipoleState state)
      : ConvergenceError(what), state_(std::move(state)) {}
  const InducedDipoleState& state() const noexcept { return state_; }

 private:
  InducedDipoleState state_;
};

struct PolarizationOptions {
  double omega = 0.7;
  double tolerance = 1e-6;
  int max_iters = 200;
  const DampingRule* damping = nullptr;  ///< identity when null
  const PairMask* mask = nullptr;

  static PolarizationOptions from(const RunConfig& cfg) {
    PolarizationOptions o;
    o.omega = cfg.scf_omega;
    o.tolerance = cfg.scf_tolerance;
    o.max_iters = cfg.scf_max_iters;
    return o;
  }
};

/// Field -sum_{m != n} grad G^m(r_n) of the permanent moments of the other sites.
Vec3 direct_field(std::span<const MultipoleSite> sites, std::size_t n,
                  const PairMask* mask = nullptr);
std::vector<Vec3> direct_fields(std::span<const MultipoleSite> sites,
                                const PairMask* mask = nullptr);

/// Root-mean-square over sites of |a_n - b_n|.
double rms_difference(std::span<const Vec3> a, std::span<const Vec3> b);

/// SOR for mu_n = alpha_n (E_direct_n + E_ext_n + sum_{m != n} T_nm mu_m), Gauss-Seidel
/// in site order. `external` (may be empty) is an extra per-site field; `guess` (may be
/// empty) the starting dipoles. Throws ScfFailure after max_iters sweeps.
InducedDipoleState sor_vacuum(std::span<const MultipoleSite> sites,
                              const PolarizationOptions& opts,
                              std::span<const Vec3> external = {},
                              std::span<const Vec3> guess = {});

/// Maps induced dipoles to the reaction-potential gradient at each site
/// (one PDE solve per call).
using ReactionGradient = std::function<std::vector<Vec3>(std::span<const Vec3> mu)>;

/// Outer loop: solve the PDE with mu_k, then relax mu_{k+1} against the fixed reaction
/// field -grad(phi_RF). Stops when rms(mu_{k+1} - mu_k) <= tolerance and returns mu_k,
/// the dipoles consistent with the last PDE solve. `iterations` counts PDE solves.
InducedDipoleState sor_solvated(std::span<const MultipoleSite> sites,
                                const PolarizationOptions& opts, int max_cycles,
                                std::span<const Vec3> initial, const ReactionGradient& pde);

/// Value, gradient and Hessian of the smooth reaction potential at each site center from
/// a least-squares cubic fit over inside nodes near the site. `phi` is on the full grid.
/// Throws GeometryError when no usable neighbourhood exists.
std::vector<FieldDerivs> site_reaction_data(std::span<const double> phi, const Grid& grid,
                                            std::span<const MultipoleSite> sites);
FieldDerivs reaction_data_at(std::span<const double> phi, const Grid& grid, const Vec3& r);

}  // namespace pmpb
