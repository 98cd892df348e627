#include "pmpb/solvation.hpp"

#include "pmpb/errors.hpp"
#include "pmpb/linsolve.hpp"
#include "pmpb/polarization.hpp"

#include <fmt/format.h>

#include <chrono>

namespace pmpb {

ReactionFieldSolver::ReactionFieldSolver(const Interface& geometry,
                                         std::span<const MultipoleSite> sites,
                                         const RunConfig& cfg, double h)
    : cfg_(cfg) {
  cfg_.validate();
  build(geometry, build_grid(geometry, sites, {h, cfg.padding, cfg.max_nodes}));
}

ReactionFieldSolver::ReactionFieldSolver(const Interface& geometry, const Box& box,
                                         const RunConfig& cfg, double h)
    : cfg_(cfg) {
  cfg_.validate();
  build(geometry, build_grid_box(geometry, box, h, cfg.max_nodes));
}

void ReactionFieldSolver::build(const Interface& geometry, Grid grid) {
  cfg_.grid_spacing = grid.h;
  MibOptions mo{cfg_.eps_in, cfg_.eps_out, cfg_.tangential_side};
  RuleSet rules = fictitious_rules(grid, geometry, mo);
  op_ = std::make_shared<const MibOperator>(assemble_operator(
      std::move(grid), std::move(rules), cfg_.eps_in, cfg_.eps_out, cfg_.kappa_bar_sq()));
}

ReactionFieldSolver::Solution ReactionFieldSolver::solve(std::span<const MultipoleSite> sites,
                                                         std::span<const Vec3> induced,
                                                         std::span<const double> warm) const {
  const MibSystem sys = assemble(op_, sites, induced, cfg_);
  Solution s;
  if (warm.size() == op_->A.rows) s.x.assign(warm.begin(), warm.end());
  s.report = bicgstab(op_->A, sys.rhs, s.x, solver_options(cfg_));
  s.phi = expand_solution(sys, s.x);
  return s;
}

InterfaceGeometry molecular_interface(std::span<const MultipoleSite> sites,
                                      std::span<const Sphere> spheres, const RunConfig& cfg) {
  std::vector<Sphere> list(spheres.begin(), spheres.end());
  if (list.empty())
    for (const auto& s : sites) list.push_back({s.position, s.radius});
  InterfaceGeometry g = InterfaceGeometry::sphere_union(std::move(list));
  g.set_allow_multiple_crossings(cfg.crossing_policy == CrossingPolicy::Nearest);
  for (std::size_t n = 0; n < sites.size(); ++n)
    if (g.level_set(sites[n].position) >= 0.0)
      throw GeometryError(fmt::format("site {} lies outside the solute surface", n + 1));
  return g;
}

SolvationResult run_solvation(std::span<const MultipoleSite> sites, const Interface& geometry,
                              const RunConfig& cfg, double h) {
  SolvationResult res;
  res.h = h;
  auto clock = std::chrono::steady_clock::now();
  auto lap = [&](const char* stage) {
    const auto now = std::chrono::steady_clock::now();
    res.timings.emplace_back(stage, std::chrono::duration<double>(now - clock).count());
    clock = now;
  };
  const PolarizationOptions popts = PolarizationOptions::from(cfg);
  res.vacuum = sor_vacuum(sites, popts);
  res.e_vacuum = vacuum_energy(sites, res.vacuum.mu);
  lap("vacuum_scf");

  const ReactionFieldSolver solver(geometry, sites, cfg, h);
  lap("discretization");
  const auto counts = solver.grid().counts();
  res.unknowns = solver.op().A.rows;
  res.irregular_nodes = counts.irregular();
  res.reduced_order_rules = solver.op().rules.reduced_order;
  res.dropped_tangential_rules = solver.op().rules.dropped_tangential;
  res.ill_conditioned_rules = solver.op().rules.ill_conditioned;
  if (cfg.boundary_condition == BoundaryCondition::MDH && cfg.kappa_bar_sq() > 0.0)
    res.warnings.push_back(
        "MDH boundary data with ionic screening uses the sphere approximation of radius "
        "bc_sphere_radius");
  if (res.ill_conditioned_rules > 0)
    res.warnings.push_back(fmt::format("{} interface rules have condition estimates above 1e12",
                                       res.ill_conditioned_rules));
  if (res.dropped_tangential_rules > 0)
    res.warnings.push_back(fmt::format(
        "{} interface rules omit an unsupported tangential derivative; refine the grid spacing",
        res.dropped_tangential_rules));

  std::vector<double> warm;
  auto pde = [&](std::span<const Vec3> mu) {
    auto sol = solver.solve(sites, mu, warm);
    res.solves.push_back(sol.report);
    res.reaction = site_reaction_data(sol.phi, solver.grid(), sites);
    warm = std::move(sol.x);
    std::vector<Vec3> grad(sites.size());
    for (std::size_t n = 0; n < sites.size(); ++n) grad[n] = res.reaction[n].gradient;
    return grad;
  };
  res.solvated = sor_solvated(sites, popts, cfg.scf_max_cycles, res.vacuum.mu, pde);
  lap("solvated_scf");

  std::vector<FieldDerivs> gd(sites.size());
  for (std::size_t n = 0; n < sites.size(); ++n)
    gd[n] = g_delta(sites, res.solvated.mu, res.vacuum.mu, n);
  res.site_energies = solvation_site_energies(sites, res.reaction, gd);
  res.e_sol = 0.0;
  for (double e : res.site_energies) res.e_sol += e;
  lap("energy");
  return res;
}

}  // namespace pmpb
