#pragma once

#include "pmpb/geometry.hpp"
#include "pmpb/multipole.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace pmpb {

enum class TracePolicy { Detrace, AsIs };
enum class BoundaryCondition { SDH, MDH };
enum class Preconditioner { Jacobi, None };
/// Side of the interface whose grid nodes supply tangential derivatives in the
/// fictitious-value construction. The other side is used when support is missing.
enum class TangentialSide { Inside, Outside };
/// What to do when a mesh segment crosses the interface more than once.
enum class CrossingPolicy { Error, Nearest };
/// Where the Coulomb field is split off. Global: the unknown is phi_RF = phi - G on
/// both sides. Interior: phi_RF inside, the total potential outside; the jumps then
/// carry G itself.
enum class Regularization { Global, Interior };

struct ParseOptions {
  TracePolicy trace = TracePolicy::Detrace;
  /// Multiplies every quadrupole component on input (e.g. 3 for files storing Q/3).
  double quadrupole_scale = 1.0;
};

struct MoleculeInput {
  std::vector<MultipoleSite> sites;
  std::string source_path;
  /// True when every quadrupole is traceless after parsing.
  bool traceless = true;
  /// Moments are taken to be in the lab frame already.
  bool global_frame = true;
  std::vector<std::string> warnings;
};

/// Extended PQR: `ATOM idx name resname [chain] resid x y z q r` optionally followed by
/// `dx dy dz Qxx Qxy Qxz Qyy Qyz Qzz` and then optionally `alpha`.
/// `#` comments, blank lines and REMARK/TER/END/MODEL/ENDMDL/CRYST1 records are skipped.
MoleculeInput parse_multipole_pqr(std::istream& in, const ParseOptions& opts = {},
                                  std::string source = "<stream>");
MoleculeInput parse_multipole_pqr(const std::filesystem::path& path,
                                  const ParseOptions& opts = {});

/// Writes the extended layout (with alpha) at full round-trip precision.
void write_multipole_pqr(std::ostream& out, const MoleculeInput& mol);

/// Four whitespace-separated numbers per line: x y z r.
std::vector<Sphere> parse_xyzr(std::istream& in);
std::vector<Sphere> parse_xyzr(const std::filesystem::path& path);

struct RunConfig {
  double eps_in = 1.0;
  double eps_out = 78.3;
  /// Molar; the default gives kappa_bar = 0.125 Å^-1.
  double ionic_strength = 0.125 * 0.125 / units::kappa_bar_coeff;
  double grid_spacing = 0.5;
  double padding = 3.0;
  BoundaryCondition boundary_condition = BoundaryCondition::MDH;
  double bc_sphere_radius = 60.0;

  double scf_omega = 0.7;
  double scf_tolerance = 1e-6;
  int scf_max_iters = 200;
  int scf_max_cycles = 100;

  double solver_tolerance = 1e-8;
  long solver_max_iters = 0;  ///< 0 selects 10 * N^(1/3) * 100
  Preconditioner preconditioner = Preconditioner::Jacobi;

  TracePolicy trace = TracePolicy::Detrace;
  double quadrupole_scale = 1.0;
  std::size_t max_nodes = 40'000'000;
  TangentialSide tangential_side = TangentialSide::Inside;
  CrossingPolicy crossing_policy = CrossingPolicy::Error;
  Regularization regularization = Regularization::Interior;
  double probe_radius = 1.4;  ///< reserved for surface ingestion; unused

  double kappa_bar_sq() const { return units::kappa_bar_coeff * ionic_strength; }
  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

/// Flat `key = value` text; `#` starts a comment. Unknown keys throw ParseError unless
/// `lenient`, in which case they are appended to `warnings`.
RunConfig parse_config(std::istream& in, bool lenient = false,
                       std::vector<std::string>* warnings = nullptr);
RunConfig load_config(const std::filesystem::path& path, bool lenient = false,
                      std::vector<std::string>* warnings = nullptr);

/// Inverse of parse_config for every key (full precision).
void write_config(std::ostream& out, const RunConfig& cfg);

}  // namespace pmpb
