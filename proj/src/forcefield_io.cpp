#include "pmpb/forcefield_io.hpp"

#include "pmpb/errors.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace pmpb {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<double> to_double(std::string_view tok) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

bool is_integer(std::string_view tok) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  return ec == std::errc{} && ptr == tok.data() + tok.size();
}

double number(std::string_view tok, const char* field, std::size_t line) {
  const auto v = to_double(tok);
  if (!v) throw ParseError(fmt::format("non-numeric {} '{}'", field, tok), line);
  if (!std::isfinite(*v)) throw ParseError(fmt::format("non-finite {}", field), line);
  return *v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::ifstream open_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

}  // namespace

MoleculeInput parse_multipole_pqr(std::istream& in, const ParseOptions& opts,
                                  std::string source) {
  MoleculeInput mol;
  mol.source_path = std::move(source);
  std::set<std::tuple<double, double, double>> centers;
  std::string raw;
  std::size_t lineno = 0;
  static const std::set<std::string_view> skipped{"REMARK", "TER",    "END",
                                                  "MODEL",  "ENDMDL", "CRYST1"};
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    const auto tok = split(line);
    if (tok.empty() || skipped.contains(tok[0])) continue;
    if (tok[0] != "ATOM" && tok[0] != "HETATM")
      throw ParseError(fmt::format("unexpected record '{}'", tok[0]), lineno);
    if (tok.size() < 5) throw ParseError("truncated atom record", lineno);
    // optional chain identifier between residue name and residue number
    const std::size_t first = is_integer(tok[4]) ? 5 : 6;
    const std::size_t nnum = tok.size() > first ? tok.size() - first : 0;
    if (nnum < 5) {
      throw ParseError(nnum == 4 ? "missing radius" : "truncated atom record", lineno);
    }
    if (nnum != 5 && nnum != 14 && nnum != 15)
      throw ParseError(fmt::format("expected 5, 14 or 15 numeric fields, found {}", nnum),
                       lineno);
    std::vector<double> v(nnum);
    static const char* names[] = {"x", "y", "z", "charge", "radius", "dx", "dy", "dz",
                                  "Qxx", "Qxy", "Qxz", "Qyy", "Qyz", "Qzz", "alpha"};
    for (std::size_t k = 0; k < nnum; ++k) v[k] = number(tok[first + k], names[k], lineno);

    MultipoleSite site;
    site.position = Vec3(v[0], v[1], v[2]);
    site.q = v[3];
    site.radius = v[4];
    if (site.radius <= 0.0) throw ParseError("radius must be positive", lineno);
    if (nnum >= 14) {
      site.d = Vec3(v[5], v[6], v[7]);
      Mat3 Q;
      Q << v[8], v[9], v[10], v[9], v[11], v[12], v[10], v[12], v[13];
      site.Q = opts.quadrupole_scale * Q;
    }
    if (nnum == 15) {
      site.alpha = v[14];
      if (site.alpha < 0.0) throw ParseError("polarizability must be non-negative", lineno);
    }
    const double tr = site.Q.trace();
    if (opts.trace == TracePolicy::Detrace) {
      if (std::abs(tr) > 1e-12)
        mol.warnings.push_back(
            fmt::format("line {}: quadrupole trace {:.3g} removed", lineno, tr));
      detrace(site.Q);
    } else if (std::abs(tr) > 1e-10) {
      mol.traceless = false;
    }
    if (!centers.emplace(v[0], v[1], v[2]).second)
      throw ParseError("two sites share the same center", lineno);
    mol.sites.push_back(site);
  }
  if (mol.sites.empty()) throw ParseError("no sites");
  return mol;
}

MoleculeInput parse_multipole_pqr(const std::filesystem::path& path, const ParseOptions& opts) {
  auto in = open_file(path);
  return parse_multipole_pqr(in, opts, path.string());
}

void write_multipole_pqr(std::ostream& out, const MoleculeInput& mol) {
  std::size_t idx = 1;
  for (const auto& s : mol.sites) {
    out << fmt::format(
        "ATOM {} X MOL {} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} "
        "{:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g}\n",
        idx, idx, s.position.x(), s.position.y(), s.position.z(), s.q, s.radius, s.d.x(),
        s.d.y(), s.d.z(), s.Q(0, 0), s.Q(0, 1), s.Q(0, 2), s.Q(1, 1), s.Q(1, 2), s.Q(2, 2),
        s.alpha);
    ++idx;
  }
}

std::vector<Sphere> parse_xyzr(std::istream& in) {
  std::vector<Sphere> out;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto tok = split(raw);
    if (tok.empty()) continue;
    if (tok.size() != 4)
      throw ParseError(fmt::format("expected 4 fields, found {}", tok.size()), lineno);
    Sphere s;
    s.center = Vec3(number(tok[0], "x", lineno), number(tok[1], "y", lineno),
                    number(tok[2], "z", lineno));
    s.radius = number(tok[3], "radius", lineno);
    if (s.radius <= 0.0) throw ParseError("radius must be positive", lineno);
    out.push_back(s);
  }
  return out;
}

std::vector<Sphere> parse_xyzr(const std::filesystem::path& path) {
  auto in = open_file(path);
  return parse_xyzr(in);
}

void RunConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(eps_in > 0.0, "eps_in must be positive");
  require(eps_out > 0.0, "eps_out must be positive");
  require(ionic_strength >= 0.0, "ionic_strength must be non-negative");
  require(grid_spacing > 0.0, "grid_spacing must be positive");
  require(padding >= 0.0, "padding must be non-negative");
  require(bc_sphere_radius > 0.0, "bc_sphere_radius must be positive");
  require(scf_omega > 0.0 && scf_omega < 2.0, "scf_omega must lie in (0, 2)");
  require(scf_tolerance > 0.0, "scf_tolerance must be positive");
  require(scf_max_iters > 0, "scf_max_iters must be positive");
  require(scf_max_cycles > 0, "scf_max_cycles must be positive");
  require(solver_tolerance > 0.0, "solver_tolerance must be positive");
  require(solver_max_iters >= 0, "solver_max_iters must be non-negative");
  require(quadrupole_scale > 0.0 && std::isfinite(quadrupole_scale),
          "quadrupole_scale must be positive");
  require(max_nodes > 0, "max_nodes must be positive");
}

namespace {

template <class E>
E pick(std::string_view v, std::initializer_list<std::pair<std::string_view, E>> options,
       std::size_t line) {
  for (const auto& [name, e] : options)
    if (v == name) return e;
  throw ParseError(fmt::format("invalid value '{}'", v), line);
}

using Setter = std::function<void(RunConfig&, std::string_view, std::size_t)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  auto real = [](double RunConfig::*field) -> Setter {
    return [field](RunConfig& c, std::string_view v, std::size_t line) {
      c.*field = number(v, "value", line);
    };
  };
  auto integer = [](auto field) -> Setter {
    return [field](RunConfig& c, std::string_view v, std::size_t line) {
      long long x = 0;
      const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
      if (ec != std::errc{} || ptr != v.data() + v.size())
        throw ParseError(fmt::format("expected an integer, found '{}'", v), line);
      using T = std::remove_reference_t<decltype(c.*field)>;
      if (x < 0) throw ParseError("value must be non-negative", line);
      c.*field = static_cast<T>(x);
    };
  };
  static const std::map<std::string, Setter, std::less<>> table{
      {"eps_in", real(&RunConfig::eps_in)},
      {"eps_out", real(&RunConfig::eps_out)},
      {"ionic_strength", real(&RunConfig::ionic_strength)},
      {"kappa",
       [](RunConfig& c, std::string_view v, std::size_t line) {
         const double k = number(v, "kappa", line);
         if (k < 0.0) throw ParseError("kappa must be non-negative", line);
         c.ionic_strength = k * k / units::kappa_bar_coeff;
       }},
      {"grid_spacing", real(&RunConfig::grid_spacing)},
      {"padding", real(&RunConfig::padding)},
      {"boundary_condition",
       [](RunConfig& c, std::string_view v, std::size_t line) {
         c.boundary_condition = pick<BoundaryCondition>(
             v, {{"sdh", BoundaryCondition::SDH}, {"mdh", BoundaryCondition::MDH},
                 {"SDH", BoundaryCondition::SDH}, {"MDH", BoundaryCondition::MDH}},
             line);
       }},
      {"bc_sphere_radius", real(&RunConfig::bc_sphere_radius)},
      {"scf_omega", real(&RunConfig::scf_omega)},
      {"scf_tolerance", real(&RunConfig::scf_tolerance)},
      {"scf_max_iters", integer(&RunConfig::scf_max_iters)},
      {"scf_max_cycles", integer(&RunConfig::scf_max_cycles)},
      {"solver_tolerance", real(&RunConfig::solver_tolerance)},
      {"solver_max_iters", integer(&RunConfig::solver_max_iters)},
      {"preconditioner",
       [](RunConfig& c, std::string_view v, std::size_t line) {
         c.preconditioner = pick<Preconditioner>(
             v, {{"jacobi", Preconditioner::Jacobi}, {"none", Preconditioner::None}}, line);
       }},
      {"trace_policy",
       [](RunConfig& c, std::string_view v, std::size_t line) {
         c.trace = pick<TracePolicy>(
             v, {{"detrace", TracePolicy::Detrace}, {"as_is", TracePolicy::AsIs}}, line);
       }},
      {"quadrupole_scale", real(&RunConfig::quadrupole_scale)},
      {"max_nodes", integer(&RunConfig::max_nodes)},
      {"tangential_side",
       [](RunConfig& c, std::string_view v, std::size_t line) {
         c.tangential_side = pick<TangentialSide>(
             v, {{"inside", TangentialSide::Inside}, {"outside", TangentialSide::Outside}},
             line);
       }},
      {"crossing_policy",
       [](RunConfig& c, std::string_view v, std::size_t line) {
         c.crossing_policy = pick<CrossingPolicy>(
             v, {{"error", CrossingPolicy::Error}, {"nearest", CrossingPolicy::Nearest}},
             line);
       }},
      {"regularization",
       [](RunConfig& c, std::string_view v, std::size_t line) {
         c.regularization = pick<Regularization>(
             v, {{"global", Regularization::Global}, {"interior", Regularization::Interior}},
             line);
       }},
      {"probe_radius", real(&RunConfig::probe_radius)},
  };
  return table;
}

}  // namespace

RunConfig parse_config(std::istream& in, bool lenient, std::vector<std::string>* warnings) {
  RunConfig cfg;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", lineno);
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "h") {
      cfg.grid_spacing = number(value, "value", lineno);
      continue;
    }
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) {
      const std::string msg = fmt::format("unknown key '{}'", key);
      if (!lenient) throw ParseError(msg, lineno);
      if (warnings) warnings->push_back(fmt::format("line {}: {}", lineno, msg));
      continue;
    }
    it->second(cfg, value, lineno);
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, bool lenient,
                      std::vector<std::string>* warnings) {
  auto in = open_file(path);
  return parse_config(in, lenient, warnings);
}

void write_config(std::ostream& out, const RunConfig& c) {
  auto real = [&](const char* k, double v) { out << fmt::format("{} = {:.17g}\n", k, v); };
  auto word = [&](const char* k, std::string_view v) { out << fmt::format("{} = {}\n", k, v); };
  real("eps_in", c.eps_in);
  real("eps_out", c.eps_out);
  real("ionic_strength", c.ionic_strength);
  real("grid_spacing", c.grid_spacing);
  real("padding", c.padding);
  word("boundary_condition", c.boundary_condition == BoundaryCondition::SDH ? "sdh" : "mdh");
  real("bc_sphere_radius", c.bc_sphere_radius);
  real("scf_omega", c.scf_omega);
  real("scf_tolerance", c.scf_tolerance);
  out << fmt::format("scf_max_iters = {}\n", c.scf_max_iters);
  out << fmt::format("scf_max_cycles = {}\n", c.scf_max_cycles);
  real("solver_tolerance", c.solver_tolerance);
  out << fmt::format("solver_max_iters = {}\n", c.solver_max_iters);
  word("preconditioner", c.preconditioner == Preconditioner::Jacobi ? "jacobi" : "none");
  word("trace_policy", c.trace == TracePolicy::Detrace ? "detrace" : "as_is");
  real("quadrupole_scale", c.quadrupole_scale);
  out << fmt::format("max_nodes = {}\n", c.max_nodes);
  word("tangential_side", c.tangential_side == TangentialSide::Inside ? "inside" : "outside");
  word("crossing_policy", c.crossing_policy == CrossingPolicy::Error ? "error" : "nearest");
  word("regularization", c.regularization == Regularization::Global ? "global" : "interior");
  real("probe_radius", c.probe_radius);
}

}  // namespace pmpb
