#include "cli.hpp"

#include "pmpb/energy.hpp"
#include "pmpb/errors.hpp"
#include "pmpb/forcefield_io.hpp"
#include "pmpb/kirkwood_suite.hpp"
#include "pmpb/solvation.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <omp.h>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifndef PMPB_VERSION
#define PMPB_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace pmpb::cli {

std::string file_sha256(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

void apply_thread_cap() {
  const char* env = std::getenv("PMPB_THREADS");
  if (!env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (end == env || n <= 0) return;
  omp_set_num_threads(static_cast<int>(std::min<long>(n, omp_get_num_procs())));
}

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json config_json(const RunConfig& cfg) {
  std::ostringstream text;
  write_config(text, cfg);
  std::istringstream lines(text.str());
  json j = json::object();
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq), value = line.substr(eq + 3);
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end && *end == '\0' && !value.empty() && value.find_first_of(".eEn") == std::string::npos)
      j[key] = std::stoll(value);
    else if (end && *end == '\0' && !value.empty())
      j[key] = v;
    else
      j[key] = value;
  }
  return j;
}

// Written before any table and rewritten with timings when the command ends.
class Manifest {
 public:
  Manifest(fs::path dir, const std::string& command, const std::vector<std::string>& args,
           const RunConfig& cfg, const std::vector<std::string>& inputs)
      : path_(std::move(dir) / "manifest.json") {
    j_["tool"] = "pmpb";
    j_["version"] = PMPB_VERSION;
    j_["command"] = command;
    j_["arguments"] = args;
    j_["config"] = config_json(cfg);
    j_["inputs"] = json::array();
    for (const auto& p : inputs)
      j_["inputs"].push_back({{"path", p}, {"sha256", file_sha256(p)}});
    j_["started"] = utc_now();
    j_["timings"] = json::object();
    j_["status"] = "running";
    write();
  }
  void timing(const std::string& stage, double seconds) { j_["timings"][stage] = seconds; }
  void finish(const std::string& status) {
    j_["status"] = status;
    j_["finished"] = utc_now();
    write();
  }

 private:
  void write() const {
    std::ofstream f(path_);
    f << j_.dump(2) << "\n";
  }
  fs::path path_;
  json j_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw ParseError("cannot write " + path.string());
  f << text;
}

struct Loaded {
  RunConfig cfg;
  MoleculeInput mol;
  std::vector<Sphere> spheres;
  std::vector<std::string> inputs;
};

Loaded load_inputs(const std::string& pqr, const std::string& xyzr, const std::string& config,
                   std::ostream& err) {
  Loaded in;
  if (!config.empty()) {
    in.cfg = load_config(config);
    in.inputs.push_back(config);
  }
  ParseOptions po;
  po.trace = in.cfg.trace;
  po.quadrupole_scale = in.cfg.quadrupole_scale;
  in.mol = parse_multipole_pqr(fs::path(pqr), po);
  in.inputs.push_back(pqr);
  for (const auto& w : in.mol.warnings) err << "warning: " << w << "\n";
  if (!xyzr.empty()) {
    in.spheres = parse_xyzr(fs::path(xyzr));
    in.inputs.push_back(xyzr);
  }
  return in;
}

json solve_summary(const SolvationResult& r) {
  json j;
  j["h"] = r.h;
  j["e_sol"] = r.e_sol;
  j["e_vacuum"] = r.e_vacuum;
  j["energy_unit"] = "kcal/mol";
  j["site_energies"] = r.site_energies;
  j["scf"] = {{"vacuum_iterations", r.vacuum.iterations},
              {"vacuum_converged", r.vacuum.converged},
              {"vacuum_rms", r.vacuum.last_rms},
              {"solvated_cycles", r.solvated.iterations},
              {"solvated_converged", r.solvated.converged},
              {"solvated_rms", r.solvated.last_rms},
              {"solvated_history", r.solvated.history}};
  json pde = json::array();
  for (const auto& s : r.solves)
    pde.push_back({{"iterations", s.iterations}, {"residual", s.residual}, {"seconds", s.seconds}});
  j["pde_solves"] = pde;
  j["unknowns"] = r.unknowns;
  j["irregular_nodes"] = r.irregular_nodes;
  j["reduced_order_rules"] = r.reduced_order_rules;
  j["dropped_tangential_rules"] = r.dropped_tangential_rules;
  j["ill_conditioned_rules"] = r.ill_conditioned_rules;
  j["warnings"] = r.warnings;
  return j;
}

int status_code(const std::exception_ptr& ep, std::string& status, std::string& message) {
  try {
    std::rethrow_exception(ep);
  } catch (const ParseError& e) {
    status = "parse_error";
    message = e.what();
    return kParseError;
  } catch (const GeometryError& e) {
    status = "geometry_error";
    message = e.what();
    return kGeometryError;
  } catch (const SingularityError& e) {
    status = "geometry_error";
    message = e.what();
    return kGeometryError;
  } catch (const ConvergenceError& e) {
    status = "not_converged";
    message = e.what();
    return kNotConverged;
  } catch (const std::invalid_argument& e) {
    status = "invalid_input";
    message = e.what();
    return kParseError;
  } catch (const std::exception& e) {
    status = "error";
    message = e.what();
    return kNotConverged;
  }
}

struct SolveArgs {
  std::string pqr, xyzr, config, out = ".";
  double h = 0.0;
  bool dump_mu = false;
};

int cmd_solve(const SolveArgs& a, const std::vector<std::string>& argv, std::ostream& out,
              std::ostream& err) {
  Loaded in;
  try {
    in = load_inputs(a.pqr, a.xyzr, a.config, err);
  } catch (...) {
    std::string status, msg;
    const int code = status_code(std::current_exception(), status, msg);
    err << "error: " << msg << "\n";
    return code;
  }
  const double h = a.h > 0.0 ? a.h : in.cfg.grid_spacing;
  fs::create_directories(a.out);
  Manifest manifest(a.out, "solve", argv, in.cfg, in.inputs);

  json summary;
  summary["sites"] = in.mol.sites.size();
  summary["input"] = a.pqr;
  int code = kOk;
  try {
    const InterfaceGeometry geometry = molecular_interface(in.mol.sites, in.spheres, in.cfg);
    const SolvationResult r = run_solvation(in.mol.sites, geometry, in.cfg, h);
    summary.update(solve_summary(r));
    summary["status"] = "converged";
    for (const auto& [stage, sec] : r.timings) manifest.timing(stage, sec);
    for (const auto& w : r.warnings) err << "warning: " << w << "\n";

    std::string csv = "site,e_sol\n";
    for (std::size_t n = 0; n < r.site_energies.size(); ++n)
      csv += fmt::format("{},{:.6g}\n", n + 1, r.site_energies[n]);
    csv += fmt::format("total,{:.6g}\n", r.e_sol);
    write_text(fs::path(a.out) / "energy.csv", csv);
    if (a.dump_mu) {
      std::string mu = "site,vac_x,vac_y,vac_z,sol_x,sol_y,sol_z\n";
      for (std::size_t n = 0; n < in.mol.sites.size(); ++n) {
        const Vec3& v = r.vacuum.mu[n];
        const Vec3& s = r.solvated.mu[n];
        mu += fmt::format("{},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g}\n", n + 1, v.x(), v.y(),
                          v.z(), s.x(), s.y(), s.z());
      }
      write_text(fs::path(a.out) / "mu.csv", mu);
    }
    out << fmt::format("E_sol = {:.4f} kcal/mol at h = {} ({} sites, {} SCF cycles)\n", r.e_sol,
                       h, in.mol.sites.size(), r.solvated.iterations);
  } catch (...) {
    std::string status, msg;
    code = status_code(std::current_exception(), status, msg);
    summary["status"] = status;
    summary["error"] = msg;
    err << "error: " << msg << "\n";
  }
  summary["h"] = h;
  write_text(fs::path(a.out) / "summary.json", summary.dump(2) + "\n");
  manifest.finish(summary["status"].get<std::string>());
  return code;
}

struct ConvergeArgs {
  std::string which_case = "kirkwood";
  std::string which = "monopole";
  std::string pqr, xyzr, config, out = ".";
  std::vector<double> levels;
};

std::vector<kirkwood::Moments> moment_list(const std::string& which) {
  if (which == "all")
    return {kirkwood::Moments::Monopole, kirkwood::Moments::Dipole,
            kirkwood::Moments::Quadrupole, kirkwood::Moments::Multipole};
  return {kirkwood::parse_moments(which)};
}

KirkwoodOptions kirkwood_options(const std::string& config, std::ostream& err) {
  KirkwoodOptions o;
  if (!config.empty()) o.config = load_config(config);
  o.progress = [&err](const KirkwoodStudy& s, const KirkwoodLevel& l) {
    if (l.failed)
      err << fmt::format("[kirkwood] {} h={} FAILED: {}\n", kirkwood::to_string(s.which), l.h,
                         l.failure);
    else
      err << fmt::format("[kirkwood] {} h={} E={:.6f} ({} iterations, {:.1f} s)\n",
                         kirkwood::to_string(s.which), l.h, l.e_sol, l.report.iterations,
                         l.report.seconds);
  };
  return o;
}

int converge_kirkwood(const ConvergeArgs& a, const std::vector<std::string>& argv,
                      std::ostream& out, std::ostream& err) {
  const auto which = moment_list(a.which);
  KirkwoodOptions opts = kirkwood_options(a.config, err);
  std::vector<std::string> inputs;
  if (!a.config.empty()) inputs.push_back(a.config);
  fs::create_directories(a.out);
  Manifest manifest(a.out, "converge", argv, opts.config, inputs);

  const auto t0 = std::chrono::steady_clock::now();
  const auto studies = run_kirkwood_suite(which, a.levels, opts);
  manifest.timing("kirkwood_suite",
                  std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  bool failed = false;
  for (const auto& s : studies) {
    out << fmt::format("Centered {} in a spherical cavity (a = {} Å, exact E_sol = {:.4f})\n",
                       kirkwood::to_string(s.which), s.kcase.a, s.exact);
    std::vector<ConvergenceRow> rows = s.rows;
    if (rows.empty())
      for (const auto& l : s.levels) {
        ConvergenceRow r;
        r.h = l.h;
        r.failed = l.failed;
        r.e_sol = l.e_sol;
        rows.push_back(r);
      }
    out << format_table(rows) << "\n";
    write_text(fs::path(a.out) / fmt::format("convergence_{}.csv", kirkwood::to_string(s.which)),
               format_csv(rows));
    for (const auto& l : s.levels) failed = failed || l.failed;
  }
  manifest.finish(failed ? "failed" : "ok");
  return failed ? kNotConverged : kOk;
}

int converge_files(const ConvergeArgs& a, const std::vector<std::string>& argv,
                   std::ostream& out, std::ostream& err) {
  if (a.pqr.empty()) throw ParseError("converge --case files needs --pqr");
  Loaded in = load_inputs(a.pqr, a.xyzr, a.config, err);
  fs::create_directories(a.out);
  Manifest manifest(a.out, "converge", argv, in.cfg, in.inputs);
  const InterfaceGeometry geometry = molecular_interface(in.mol.sites, in.spheres, in.cfg);

  std::vector<double> hs, es;
  std::vector<bool> ok;
  json levels = json::array();
  for (double h : a.levels) {
    json lv;
    lv["h"] = h;
    try {
      const SolvationResult r = run_solvation(in.mol.sites, geometry, in.cfg, h);
      lv.update(solve_summary(r));
      lv["status"] = "converged";
      hs.push_back(h);
      es.push_back(r.e_sol);
      ok.push_back(true);
      double total = 0.0;
      for (const auto& [stage, sec] : r.timings) total += sec;
      manifest.timing(fmt::format("level_{}", h), total);
      err << fmt::format("[converge] h={} E_sol={:.6f} ({} SCF cycles, {:.1f} s)\n", h, r.e_sol,
                         r.solvated.iterations, total);
    } catch (const Error& e) {
      lv["status"] = "failed";
      lv["error"] = e.what();
      ok.push_back(false);
      err << fmt::format("[converge] h={} FAILED: {}\n", h, e.what());
    }
    levels.push_back(lv);
  }

  std::vector<ConvergenceRow> rows;
  std::vector<ConvergenceRow> good;
  if (hs.size() >= 2) good = protein_table(hs, es);
  std::size_t k = 0;
  for (std::size_t i = 0; i < a.levels.size(); ++i) {
    if (ok[i] && !good.empty()) {
      rows.push_back(good[k++]);
      continue;
    }
    ConvergenceRow r;
    r.h = a.levels[i];
    r.failed = !ok[i];
    if (ok[i]) r.e_sol = es[k++];
    rows.push_back(r);
  }
  out << fmt::format("{} ({} sites), error relative to the linear extrapolation in h\n", a.pqr,
                     in.mol.sites.size());
  out << format_table(rows, true);
  write_text(fs::path(a.out) / "convergence.csv", format_csv(rows, true));
  write_text(fs::path(a.out) / "levels.json", levels.dump(2) + "\n");
  const bool failed = std::find(ok.begin(), ok.end(), false) != ok.end();
  manifest.finish(failed ? "failed" : "ok");
  return failed ? kNotConverged : kOk;
}

struct CheckArgs {
  std::string which = "all";
  std::string config, out = ".";
  std::vector<double> levels{0.25, 0.125, 0.0625};
};

int cmd_kirkwood_check(const CheckArgs& a, const std::vector<std::string>& argv,
                       std::ostream& out, std::ostream& err) {
  const auto which = moment_list(a.which);
  KirkwoodOptions opts = kirkwood_options(a.config, err);
  std::vector<std::string> inputs;
  if (!a.config.empty()) inputs.push_back(a.config);
  fs::create_directories(a.out);
  Manifest manifest(a.out, "kirkwood-check", argv, opts.config, inputs);

  const auto studies = run_kirkwood_suite(which, a.levels, opts);
  std::vector<std::string> offending;
  for (const auto& s : studies) {
    out << fmt::format("Centered {} in a spherical cavity (a = {} Å, eps {} / {})\n",
                       kirkwood::to_string(s.which), s.kcase.a, s.kcase.eps1, s.kcase.eps2);
    out << fmt::format("{:>8} {:>12} {:>12} {:>11}\n", "h", "E_numeric", "E_analytic", "e_int");
    for (const auto& l : s.levels) {
      if (l.failed)
        out << fmt::format("{:>8.4g} FAILED ({})\n", l.h, l.failure);
      else
        out << fmt::format("{:>8.4g} {:>12.4f} {:>12.4f} {:>11.2e}\n", l.h, l.e_sol, s.exact,
                           l.e_int);
    }
    if (!s.rows.empty()) out << format_table(s.rows);
    for (const auto& c : kirkwood_checks(s)) {
      out << fmt::format("{} {} = {:.4g} ({} {:g})\n", c.pass ? "PASS" : "FAIL", c.metric,
                         c.value, c.at_least ? ">=" : "<=", c.limit);
      if (!c.pass) offending.push_back(c.metric);
    }
    out << "\n";
  }
  for (const auto& m : offending) err << "threshold not met: " << m << "\n";
  manifest.finish(offending.empty() ? "ok" : "failed");
  return offending.empty() ? kOk : kNotConverged;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  apply_thread_cap();
  CLI::App app{"Polarizable multipole Poisson-Boltzmann solver (matched interface and boundary)",
               "pmpb"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PMPB_VERSION);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Solvation energy of one molecule at one spacing");
  solve->set_help_flag("--help", "Print this help message and exit");
  solve->add_option("--pqr", sa.pqr, "Extended PQR with multipoles")->required();
  solve->add_option("--xyzr", sa.xyzr, "Surface spheres (x y z r); default: site radii");
  solve->add_option("--config", sa.config, "key = value run configuration");
  solve->add_option("--h", sa.h, "Grid spacing in Å (overrides grid_spacing)");
  solve->add_flag("--dump-mu", sa.dump_mu, "Write mu.csv with vacuum and solvated dipoles");
  solve->add_option("--out", sa.out, "Output directory")->capture_default_str();

  ConvergeArgs ca;
  auto* converge = app.add_subcommand("converge", "Grid convergence study");
  converge->add_option("--case", ca.which_case, "kirkwood or files")
      ->check(CLI::IsMember({"kirkwood", "files"}))
      ->capture_default_str();
  converge
      ->add_option("--which", ca.which,
                   "Kirkwood moments: monopole, dipole, quadrupole, multipole or all")
      ->check(CLI::IsMember({"monopole", "dipole", "quadrupole", "multipole", "all"}))
      ->capture_default_str();
  converge->add_option("--pqr", ca.pqr, "Extended PQR (files case)");
  converge->add_option("--xyzr", ca.xyzr, "Surface spheres (files case)");
  converge->add_option("--config", ca.config, "key = value run configuration");
  converge->add_option("--levels", ca.levels, "Grid spacings, e.g. 1,0.5,0.25")
      ->delimiter(',')
      ->required();
  converge->add_option("--out", ca.out, "Output directory")->capture_default_str();

  CheckArgs ka;
  auto* check = app.add_subcommand(
      "kirkwood-check",
      "Kirkwood sphere (a = 2, eps 1/80, kappa 0) against the analytic solution. Default "
      "moments: q = 1, d = (0, 0, 0.343), Q = c diag(-1, -1, 2) with c chosen so that the "
      "quadrupole energy is -1.7924 kcal/mol; these are conventions, not published values.");
  check->add_option("--which", ka.which, "monopole, dipole, quadrupole, multipole or all")
      ->check(CLI::IsMember({"monopole", "dipole", "quadrupole", "multipole", "all"}))
      ->capture_default_str();
  check->add_option("--levels", ka.levels, "Grid spacings")->delimiter(',')->capture_default_str();
  check->add_option("--config", ka.config, "Solver settings (default tolerance 1e-12)");
  check->add_option("--out", ka.out, "Directory for manifest.json")->capture_default_str();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    for (auto* sub : {solve, converge, check})
      if (sub->parsed()) err << sub->help();
    if (!solve->parsed() && !converge->parsed() && !check->parsed()) err << app.help();
    return kParseError;
  }

  try {
    if (solve->parsed()) return cmd_solve(sa, args, out, err);
    if (converge->parsed()) {
      std::sort(ca.levels.begin(), ca.levels.end(), std::greater<>());
      if (ca.levels.size() < 2) {
        err << "error: converge needs at least two --levels\n";
        return kParseError;
      }
      if (std::any_of(ca.levels.begin(), ca.levels.end(), [](double h) { return !(h > 0.0); })) {
        err << "error: grid spacings must be positive\n";
        return kParseError;
      }
      return ca.which_case == "kirkwood" ? converge_kirkwood(ca, args, out, err)
                                         : converge_files(ca, args, out, err);
    }
    std::sort(ka.levels.begin(), ka.levels.end(), std::greater<>());
    if (ka.levels.size() < 2) {
      err << "error: kirkwood-check needs at least two --levels\n";
      return kParseError;
    }
    return cmd_kirkwood_check(ka, args, out, err);
  } catch (...) {
    std::string status, msg;
    const int code = status_code(std::current_exception(), status, msg);
    err << "error: " << msg << "\n";
    return code;
  }
}

}  // namespace pmpb::cli
