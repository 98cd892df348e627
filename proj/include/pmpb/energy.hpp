#pragma once

#include "pmpb/linsolve.hpp"
#include "pmpb/multipole.hpp"
#include "pmpb/polarization.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pmpb {

/// Potential (with derivatives) at r_n of point dipoles mu_m - mu_vac_m, m != n.
FieldDerivs g_delta(std::span<const MultipoleSite> sites, std::span<const Vec3> mu_solvent,
                    std::span<const Vec3> mu_vacuum, std::size_t n);

/// q Psi + d·grad Psi + (1/6) Q:Hess Psi, the interaction of a site's permanent moments
/// with a smooth external potential Psi (e_c^2/Å, before the unit constant).
double moment_contraction(const MultipoleSite& site, const FieldDerivs& psi);

/// Per-site contributions 1/2 C [q Psi + d·grad Psi + (1/6) Q:Hess Psi] with
/// Psi = phi_RF + G^Delta, in kcal/mol. `g_delta` may be empty (no polarization).
std::vector<double> solvation_site_energies(std::span<const MultipoleSite> sites,
                                            std::span<const FieldDerivs> reaction,
                                            std::span<const FieldDerivs> g_delta = {});
double solvation_energy(std::span<const MultipoleSite> sites,
                        std::span<const FieldDerivs> reaction,
                        std::span<const FieldDerivs> g_delta = {});

/// Pair energy in vacuum, 1/2 C sum_n contraction with the self-excluded potential of all
/// other sites (permanent plus induced `mu_vacuum`, which may be empty).
double vacuum_energy(std::span<const MultipoleSite> sites, std::span<const Vec3> mu_vacuum);

struct SolvationResult {
  double h = 0.0;
  double e_sol = 0.0;     ///< kcal/mol
  double e_vacuum = 0.0;  ///< kcal/mol
  std::vector<double> site_energies;
  std::vector<FieldDerivs> reaction;  ///< phi_RF data at each site, e_c/Å units
  InducedDipoleState vacuum;
  InducedDipoleState solvated;
  std::vector<SolveReport> solves;
  std::size_t unknowns = 0;
  std::size_t irregular_nodes = 0;
  std::size_t reduced_order_rules = 0;
  std::size_t dropped_tangential_rules = 0;
  std::size_t ill_conditioned_rules = 0;
  std::vector<std::string> warnings;
  std::vector<std::pair<std::string, double>> timings;  ///< seconds per stage, in order
};

struct ConvergenceRow {
  double h = 0.0;
  double e_sol = 0.0;
  std::optional<double> e_int;
  std::optional<double> e_int_order;
  std::optional<double> error;  ///< |E - E_ref| (absolute) or percent (protein mode)
  std::optional<double> order;
  bool failed = false;
};

/// Observed order between successive levels: log(e_prev/e)/log(h_prev/h); nullopt when
/// either error is zero or they are equal.
std::optional<double> observed_order(double e_prev, double e, double h_prev, double h);

/// Rows (h, E, |E - exact|, order) for levels ordered coarse to fine. `e_int` may be empty.
std::vector<ConvergenceRow> kirkwood_order_table(std::span<const double> h,
                                                 std::span<const double> energies,
                                                 double exact,
                                                 std::span<const double> e_int = {});

/// Reference energy from linear extrapolation in h through the two finest levels.
double extrapolated_energy(std::span<const double> h, std::span<const double> energies);

/// Rows (h, E, |E - E_ex|/|E_ex| * 100) with E_ex from extrapolated_energy.
std::vector<ConvergenceRow> protein_table(std::span<const double> h,
                                          std::span<const double> energies);

/// Aligned text and CSV renderings. `percent` selects the protein error column heading.
std::string format_table(std::span<const ConvergenceRow> rows, bool percent = false);
std::string format_csv(std::span<const ConvergenceRow> rows, bool percent = false);

}  // namespace pmpb
