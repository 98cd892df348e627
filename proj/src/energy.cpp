#include "pmpb/energy.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pmpb {

FieldDerivs g_delta(std::span<const MultipoleSite> sites, std::span<const Vec3> mu_solvent,
                    std::span<const Vec3> mu_vacuum, std::size_t n) {
  FieldDerivs out;
  for (std::size_t m = 0; m < sites.size(); ++m) {
    if (m == n) continue;
    const Vec3 dmu = mu_solvent[m] - mu_vacuum[m];
    if (dmu.isZero(0.0)) continue;
    out += multipole_derivs(sites[m].position, 0.0, dmu, Mat3::Zero(), sites[n].position);
  }
  return out;
}

double moment_contraction(const MultipoleSite& site, const FieldDerivs& psi) {
  return site.q * psi.value + site.d.dot(psi.gradient) +
         site.Q.cwiseProduct(psi.hessian).sum() / 6.0;
}

std::vector<double> solvation_site_energies(std::span<const MultipoleSite> sites,
                                            std::span<const FieldDerivs> reaction,
                                            std::span<const FieldDerivs> g_delta) {
  if (reaction.size() != sites.size())
    throw std::invalid_argument("reaction data missing for some sites");
  if (!g_delta.empty() && g_delta.size() != sites.size())
    throw std::invalid_argument("G-delta data size does not match site count");
  std::vector<double> e(sites.size());
  for (std::size_t n = 0; n < sites.size(); ++n) {
    FieldDerivs psi = reaction[n];
    if (!g_delta.empty()) psi += g_delta[n];
    e[n] = 0.5 * units::coulomb_constant * moment_contraction(sites[n], psi);
  }
  return e;
}

double solvation_energy(std::span<const MultipoleSite> sites,
                        std::span<const FieldDerivs> reaction,
                        std::span<const FieldDerivs> g_delta) {
  const auto e = solvation_site_energies(sites, reaction, g_delta);
  return std::accumulate(e.begin(), e.end(), 0.0);
}

double vacuum_energy(std::span<const MultipoleSite> sites, std::span<const Vec3> mu_vacuum) {
  double total = 0.0;
  for (std::size_t n = 0; n < sites.size(); ++n) {
    FieldDerivs phi;
    for (std::size_t m = 0; m < sites.size(); ++m) {
      if (m == n) continue;
      const Vec3 p = mu_vacuum.empty() ? sites[m].d : Vec3(sites[m].d + mu_vacuum[m]);
      phi += multipole_derivs(sites[m].position, sites[m].q, p, sites[m].Q, sites[n].position);
    }
    total += moment_contraction(sites[n], phi);
  }
  return 0.5 * units::coulomb_constant * total;
}

std::optional<double> observed_order(double e_prev, double e, double h_prev, double h) {
  if (!(e_prev > 0.0) || !(e > 0.0) || e_prev == e || h_prev == h) return std::nullopt;
  return std::log(e_prev / e) / std::log(h_prev / h);
}

std::vector<ConvergenceRow> kirkwood_order_table(std::span<const double> h,
                                                 std::span<const double> energies,
                                                 double exact, std::span<const double> e_int) {
  if (h.size() < 2) throw std::invalid_argument("a convergence table needs at least two levels");
  if (energies.size() != h.size() || (!e_int.empty() && e_int.size() != h.size()))
    throw std::invalid_argument("level data sizes differ");
  std::vector<ConvergenceRow> rows(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    auto& r = rows[i];
    r.h = h[i];
    r.e_sol = energies[i];
    r.error = std::abs(energies[i] - exact);
    if (!e_int.empty()) r.e_int = e_int[i];
    if (i > 0) {
      r.order = observed_order(*rows[i - 1].error, *r.error, h[i - 1], h[i]);
      if (!e_int.empty()) r.e_int_order = observed_order(e_int[i - 1], e_int[i], h[i - 1], h[i]);
    }
  }
  return rows;
}

double extrapolated_energy(std::span<const double> h, std::span<const double> energies) {
  if (h.size() < 2 || energies.size() != h.size())
    throw std::invalid_argument("extrapolation needs at least two levels");
  const std::size_t a = h.size() - 2, b = h.size() - 1;
  return (h[a] * energies[b] - h[b] * energies[a]) / (h[a] - h[b]);
}

std::vector<ConvergenceRow> protein_table(std::span<const double> h,
                                          std::span<const double> energies) {
  const double ex = extrapolated_energy(h, energies);
  std::vector<ConvergenceRow> rows(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    rows[i].h = h[i];
    rows[i].e_sol = energies[i];
    rows[i].error = std::abs(energies[i] - ex) / std::abs(ex) * 100.0;
  }
  return rows;
}

namespace {

std::string opt(const std::optional<double>& v, const char* spec) {
  return v ? fmt::format(fmt::runtime(spec), *v) : std::string();
}

}  // namespace

std::string format_table(std::span<const ConvergenceRow> rows, bool percent) {
  const bool has_int = std::any_of(rows.begin(), rows.end(), [](auto& r) { return r.e_int.has_value(); });
  std::string out;
  if (has_int)
    out += fmt::format("{:>8} {:>11} {:>7} {:>12} {:>11} {:>7}\n", "h", "e_int", "order", "E_sol",
                       percent ? "Error(%)" : "e_E", "order");
  else
    out += fmt::format("{:>8} {:>12} {:>11} {:>7}\n", "h", "E_sol", percent ? "Error(%)" : "e_E",
                       "order");
  for (const auto& r : rows) {
    if (r.failed) {
      out += fmt::format("{:>8.4g} FAILED\n", r.h);
      continue;
    }
    const std::string err = percent ? opt(r.error, "{:.2f}") : opt(r.error, "{:.2e}");
    if (has_int)
      out += fmt::format("{:>8.4g} {:>11} {:>7} {:>12.4f} {:>11} {:>7}\n", r.h,
                         opt(r.e_int, "{:.2e}"), opt(r.e_int_order, "{:.2f}"), r.e_sol, err,
                         opt(r.order, "{:.2f}"));
    else
      out += fmt::format("{:>8.4g} {:>12.4f} {:>11} {:>7}\n", r.h, r.e_sol, err,
                         opt(r.order, "{:.2f}"));
  }
  return out;
}

std::string format_csv(std::span<const ConvergenceRow> rows, bool percent) {
  std::string out = fmt::format("h,e_int,e_int_order,e_sol,{},order,status\n",
                                percent ? "error_percent" : "error");
  for (const auto& r : rows) {
    if (r.failed) {
      out += fmt::format("{:.6g},,,,,,FAILED\n", r.h);
      continue;
    }
    out += fmt::format("{:.6g},{},{},{:.6g},{},{},ok\n", r.h, opt(r.e_int, "{:.6g}"),
                       opt(r.e_int_order, "{:.6g}"), r.e_sol, opt(r.error, "{:.6g}"),
                       opt(r.order, "{:.6g}"));
  }
  return out;
}

}  // namespace pmpb
