#pragma once

#include "pmpb/energy.hpp"
#include "pmpb/forcefield_io.hpp"
#include "pmpb/geometry.hpp"
#include "pmpb/mib.hpp"

#include <memory>
#include <span>
#include <vector>

namespace pmpb {

/// Grid, fictitious-value rules and operator for one geometry and spacing; solves the
/// reaction-field equation for any number of source sets.
class ReactionFieldSolver {
 public:
  /// Grid around `sites` and the geometry bounds (padding from cfg).
  ReactionFieldSolver(const Interface& geometry, std::span<const MultipoleSite> sites,
                      const RunConfig& cfg, double h);
  /// Grid over an explicit box.
  ReactionFieldSolver(const Interface& geometry, const Box& box, const RunConfig& cfg, double h);

  struct Solution {
    /// Unknown on every grid node: phi_RF inside; outside phi_RF (Global) or the total
    /// potential (Interior).
    std::vector<double> phi;
    std::vector<double> x;    ///< interior unknowns (reusable as a warm start)
    SolveReport report;
  };

  /// `warm` (may be empty) is an initial guess for the interior unknowns.
  Solution solve(std::span<const MultipoleSite> sites, std::span<const Vec3> induced,
                 std::span<const double> warm = {}) const;

  const MibOperator& op() const { return *op_; }
  const Grid& grid() const { return op_->grid; }
  const RunConfig& config() const { return cfg_; }

 private:
  void build(const Interface& geometry, Grid grid);

  RunConfig cfg_;
  std::shared_ptr<const MibOperator> op_;
};

/// Sphere-union interface from explicit spheres, or from the site radii when `spheres`
/// is empty. Throws GeometryError when a site center is not strictly inside.
InterfaceGeometry molecular_interface(std::span<const MultipoleSite> sites,
                                      std::span<const Sphere> spheres, const RunConfig& cfg);

/// Vacuum induction, solvated induction coupled to PDE solves, and the energies, at
/// spacing h.
SolvationResult run_solvation(std::span<const MultipoleSite> sites, const Interface& geometry,
                              const RunConfig& cfg, double h);

}  // namespace pmpb
