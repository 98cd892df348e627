#include "pmpb/kirkwood_suite.hpp"

#include "pmpb/errors.hpp"
#include "pmpb/polarization.hpp"
#include "pmpb/solvation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <optional>

namespace pmpb {

std::vector<KirkwoodStudy> run_kirkwood_suite(std::span<const kirkwood::Moments> which,
                                              std::span<const double> levels,
                                              const KirkwoodOptions& opts) {
  std::vector<KirkwoodStudy> studies;
  for (auto m : which) {
    KirkwoodStudy s;
    s.which = m;
    s.kcase = kirkwood::default_case(m);
    s.exact = kirkwood::energies(s.kcase).total;
    studies.push_back(std::move(s));
  }
  if (studies.empty()) return studies;

  const auto& base = studies.front().kcase;
  RunConfig cfg = opts.config;
  cfg.eps_in = base.eps1;
  cfg.eps_out = base.eps2;
  cfg.ionic_strength = 0.0;
  cfg.boundary_condition = BoundaryCondition::MDH;
  const InterfaceGeometry sphere = InterfaceGeometry::sphere(Vec3::Zero(), base.a);
  const double half = base.a + opts.padding;

  for (double h : levels) {
    std::optional<ReactionFieldSolver> solver;
    std::string build_error;
    try {
      const double extent = std::max(half, base.a + 2.0 * h);
      solver.emplace(sphere, Box(Vec3::Constant(-extent), Vec3::Constant(extent)), cfg, h);
    } catch (const Error& e) {
      build_error = e.what();
    }

    // later cases start from the sum of earlier single-moment solutions (linearity)
    std::vector<double> sum;
    for (auto& study : studies) {
      KirkwoodLevel lvl;
      lvl.h = h;
      if (!solver) {
        lvl.failed = true;
        lvl.failure = build_error;
        study.levels.push_back(lvl);
        if (opts.progress) opts.progress(study, lvl);
        continue;
      }
      try {
        const MultipoleSite site = kirkwood::as_site(study.kcase);
        const std::vector<double>& warm =
            study.which == kirkwood::Moments::Multipole ? sum : std::vector<double>{};
        auto sol = solver->solve(std::span(&site, 1), {}, warm);
        lvl.report = sol.report;
        lvl.unknowns = solver->op().A.rows;

        const Grid& g = solver->grid();
        double e_int = 0.0;
        for (std::size_t id = 0; id < g.size(); ++id) {
          if (!is_irregular(g.cls[id])) continue;
          const Vec3 r = g.position(id);
          double num = sol.phi[id];
          if (cfg.regularization == Regularization::Interior && !is_inside(g.cls[id]))
            num -= green_potential(site, r) / cfg.eps_in;
          const double exact = kirkwood::reaction_potential(study.kcase, r).value;
          e_int = std::max(e_int, std::abs(num - exact));
        }
        lvl.e_int = e_int;
        const FieldDerivs rf = reaction_data_at(sol.phi, g, Vec3::Zero());
        lvl.e_sol = solvation_energy(std::span(&site, 1), std::span(&rf, 1));

        if (study.which != kirkwood::Moments::Multipole) {
          if (sum.empty()) sum.assign(sol.x.size(), 0.0);
          for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += sol.x[i];
        }
      } catch (const Error& e) {
        lvl.failed = true;
        lvl.failure = e.what();
      }
      study.levels.push_back(lvl);
      if (opts.progress) opts.progress(study, lvl);
    }
  }

  for (auto& study : studies) {
    std::vector<double> hs, es, ints;
    for (const auto& l : study.levels)
      if (!l.failed) {
        hs.push_back(l.h);
        es.push_back(l.e_sol);
        ints.push_back(l.e_int);
      }
    if (hs.size() < 2) continue;
    auto ok_rows = kirkwood_order_table(hs, es, study.exact, ints);
    std::size_t k = 0;
    for (const auto& l : study.levels) {
      if (l.failed) {
        ConvergenceRow r;
        r.h = l.h;
        r.failed = true;
        study.rows.push_back(r);
      } else {
        study.rows.push_back(ok_rows[k++]);
      }
    }
  }
  return studies;
}

std::vector<KirkwoodCheck> kirkwood_checks(const KirkwoodStudy& study) {
  std::vector<KirkwoodCheck> out;
  const std::string name = kirkwood::to_string(study.which);
  auto add = [&](std::string metric, double value, double limit, bool at_least) {
    const bool pass = std::isfinite(value) && (at_least ? value >= limit : value <= limit);
    out.push_back({std::move(metric), value, limit, at_least, pass});
  };

  std::vector<const KirkwoodLevel*> ok;
  for (const auto& l : study.levels) {
    if (l.failed)
      add(fmt::format("{} level h={} ({})", name, l.h, l.failure), 1.0, 0.0, false);
    else
      ok.push_back(&l);
  }
  if (ok.size() >= 2) {
    const KirkwoodLevel& c = *ok.front();
    const KirkwoodLevel& f = *ok.back();
    const double span = std::log(c.h / f.h);
    const double e_order =
        std::log(std::abs(c.e_sol - study.exact) / std::abs(f.e_sol - study.exact)) / span;
    const double i_order = std::log(c.e_int / f.e_int) / span;
    add(fmt::format("{} energy order h={}->{}", name, c.h, f.h), e_order, 1.8, true);
    add(fmt::format("{} e_int order h={}->{}", name, c.h, f.h), i_order, 1.5, true);
  }
  if (study.which == kirkwood::Moments::Monopole) {
    for (const auto* l : ok) {
      const double rel = std::abs(l->e_sol - study.exact) / std::abs(study.exact);
      if (l->h <= 0.0625 * (1 + 1e-12))
        add(fmt::format("{} relative energy error h={}", name, l->h), rel, 5e-4, false);
      else if (l->h <= 0.25 * (1 + 1e-12))
        add(fmt::format("{} relative energy error h={}", name, l->h), rel, 5e-3, false);
      if (l->h <= 0.25 * (1 + 1e-12))
        add(fmt::format("{} e_int h={}", name, l->h), l->e_int, 1e-4, false);
    }
  }
  return out;
}

}  // namespace pmpb
