#pragma once

// Matched-interface discretization of the regularized equation
//   -eps_in  Lap(u)             = 0   inside
//   -eps_out Lap(u) + kbar^2 u  = f   outside
// Global regularization: u = phi_RF on both sides, f = -kbar^2 G, [u] = 0 and
// [eps du/dn] = (eps_in - eps_out) dG/dn.
// Interior regularization: u = phi_RF inside and the total potential outside, f = 0,
// [u] = G and [eps du/dn] = eps_in dG/dn.
// G is the Coulomb field of all sources divided by eps_in.

#include "pmpb/forcefield_io.hpp"
#include "pmpb/geometry.hpp"
#include "pmpb/grid.hpp"
#include "pmpb/multipole.hpp"
#include "pmpb/sparse.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

namespace pmpb {

struct JumpData {
  double g0 = 0.0;  ///< [phi]
  double g1 = 0.0;  ///< [eps dphi/dn]
  double g2 = 0.0;  ///< mesh-axis component of the surface gradient of [phi]
};

/// g0 = 0, g1 = (eps_in - eps_out) * grad(G)·n at the crossing, G = Coulomb/eps_in.
JumpData jump_data(const Crossing& crossing, std::span<const MultipoleSite> sites,
                   std::span<const Vec3> induced, double eps_in, double eps_out);

/// Jumps of the interior-regularized unknown (phi_RF inside, phi outside):
/// g0 = G, g1 = eps_in dG/dn, g2 = (grad G - n dG/dn) along the crossing axis.
JumpData interior_jump_data(const Crossing& crossing, std::span<const MultipoleSite> sites,
                            std::span<const Vec3> induced, double eps_in);

struct StencilTerm {
  std::size_t node;
  double weight;
};

/// Fictitious value at `target`, extending the solution on `owner`'s side across one
/// crossing:  f = sum(w_k phi_k) + w0 g0 + w1 g1 + w2 g2.
struct FictitiousRule {
  std::size_t target = 0;
  std::size_t owner = 0;
  Side side = Side::Inside;
  std::vector<StencilTerm> stencil;
  double w0 = 0.0;
  double w1 = 0.0;
  double w2 = 0.0;
  std::size_t crossing = 0;
};

struct CrossingRecord {
  Crossing crossing;
  std::size_t lower = 0;  ///< node at the segment start (lower coordinate)
  std::size_t upper = 0;
};

struct RuleSet {
  std::vector<CrossingRecord> crossings;
  std::vector<FictitiousRule> rules;
  /// Rules that fell back to a linear line interpolant or single-station tangential
  /// derivative (locally first order).
  std::size_t reduced_order = 0;
  /// Subset of those where a tangential derivative had no support at all and was
  /// omitted; such rules are not exact even for linear fields.
  std::size_t dropped_tangential = 0;
  /// Local 2x2 solves with condition estimate above 1e12.
  std::size_t ill_conditioned = 0;

  /// Rule used by `owner` for its neighbour in direction `dir`
  /// (0:-x 1:+x 2:-y 3:+y 4:-z 5:+z); -1 when none.
  long find(std::size_t owner, int dir) const;

  std::unordered_map<std::uint64_t, std::uint32_t> lookup;
};

struct MibOptions {
  double eps_in = 1.0;
  double eps_out = 80.0;
  TangentialSide tangential_side = TangentialSide::Inside;
};

/// Two rules per interface crossing, enforcing the jump conditions at the crossing point.
/// Throws GeometryError when no stencil with grid support exists.
RuleSet fictitious_rules(const Grid& grid, const Interface& geometry, const MibOptions& opts);

/// Sparse operator over the interior nodes plus the bookkeeping needed to build
/// right-hand sides for any source set.
struct MibOperator {
  Grid grid;
  RuleSet rules;
  CsrMatrix A;
  double eps_in = 1.0;
  double eps_out = 80.0;
  double kappa_bar_sq = 0.0;

  std::vector<std::int64_t> row_of;   ///< grid node -> row, -1 on the boundary layer
  std::vector<std::size_t> node_of;   ///< row -> grid node
  std::vector<std::size_t> boundary_nodes;

  /// b[row] += coeff * dirichlet[boundary slot]
  struct BoundaryCoupling {
    std::size_t row;
    std::size_t slot;
    double coeff;
  };
  /// b[row] += c0 * g0[crossing] + c1 * g1[crossing] + c2 * g2[crossing]
  struct JumpCoupling {
    std::size_t row;
    std::size_t crossing;
    double c0;
    double c1;
    double c2;
  };
  std::vector<BoundaryCoupling> boundary_couplings;
  std::vector<JumpCoupling> jump_couplings;
};

MibOperator assemble_operator(Grid grid, RuleSet rules, double eps_in, double eps_out,
                              double kappa_bar_sq);

/// Generic right-hand-side ingredients.
struct SourceData {
  std::vector<JumpData> jumps;         ///< per crossing
  std::vector<double> dirichlet;       ///< phi_RF per boundary node (operator order)
  std::vector<double> outside_source;  ///< per row, may be empty
};

std::vector<double> assemble_rhs(const MibOperator& op, const SourceData& src);

/// Operator plus right-hand side for one source configuration.
struct MibSystem {
  std::shared_ptr<const MibOperator> op;
  std::vector<double> rhs;
  std::vector<double> dirichlet;  ///< unknown on boundary nodes
  /// Interior: the unknown is phi_RF inside and the total potential outside.
  Regularization regularization = Regularization::Global;
};

/// Right-hand side for multipole sources (permanent moments plus `induced` dipoles).
/// Global regularization: jump data from the Coulomb field, Dirichlet data g - G from
/// the configured Debye-Hückel boundary condition, and -kbar^2 G at outside nodes.
/// Interior regularization: jumps (G, eps_in dG/dn), Dirichlet data g, no volume source.
MibSystem assemble(std::shared_ptr<const MibOperator> op, std::span<const MultipoleSite> sites,
                   std::span<const Vec3> induced, const RunConfig& cfg);

/// Solution on the full grid (boundary layer filled from Dirichlet data).
std::vector<double> expand_solution(const MibSystem& sys, std::span<const double> x);

}  // namespace pmpb
