#include "pmpb/mib.hpp"

#include "pmpb/errors.hpp"
#include "pmpb/kernels.hpp"
#include "pmpb/linsolve.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>

namespace pmpb {

JumpData jump_data(const Crossing& crossing, std::span<const MultipoleSite> sites,
                   std::span<const Vec3> induced, double eps_in, double eps_out) {
  JumpData j;
  if (sites.empty()) return j;
  const FieldDerivs G = total_coulomb_derivs(sites, induced, crossing.point, eps_in);
  j.g1 = (eps_in - eps_out) * G.gradient.dot(crossing.normal);
  return j;
}

JumpData interior_jump_data(const Crossing& crossing, std::span<const MultipoleSite> sites,
                            std::span<const Vec3> induced, double eps_in) {
  JumpData j;
  if (sites.empty()) return j;
  const FieldDerivs G = total_coulomb_derivs(sites, induced, crossing.point, eps_in);
  const double dn = G.gradient.dot(crossing.normal);
  j.g0 = G.value;
  j.g1 = eps_in * dn;
  j.g2 = G.gradient[crossing.axis] - crossing.normal[crossing.axis] * dn;
  return j;
}

long RuleSet::find(std::size_t owner, int dir) const {
  const auto it = lookup.find(static_cast<std::uint64_t>(owner) * 6 + static_cast<std::uint64_t>(dir));
  return it == lookup.end() ? -1 : static_cast<long>(it->second);
}

namespace {

/// Linear form over nodal values, the two fictitious unknowns and the jump data.
struct Lin {
  std::vector<std::pair<std::size_t, double>> terms;
  double fa = 0.0;
  double fb = 0.0;
  double g0 = 0.0;
  double g1 = 0.0;
  double g2 = 0.0;

  void add(const Lin& o, double s) {
    for (const auto& [n, w] : o.terms) terms.emplace_back(n, s * w);
    fa += s * o.fa;
    fb += s * o.fb;
    g0 += s * o.g0;
    g1 += s * o.g1;
    g2 += s * o.g2;
  }
};

/// Lagrange value and derivative weights at x for the given abscissae.
void lagrange(std::span<const double> u, double x, std::span<double> val,
              std::span<double> der) {
  const std::size_t n = u.size();
  for (std::size_t m = 0; m < n; ++m) {
    double denom = 1.0, prod = 1.0, dsum = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      if (l == m) continue;
      denom *= u[m] - u[l];
      prod *= x - u[l];
    }
    for (std::size_t l = 0; l < n; ++l) {
      if (l == m) continue;
      double p = 1.0;
      for (std::size_t k = 0; k < n; ++k)
        if (k != m && k != l) p *= x - u[k];
      dsum += p;
    }
    val[m] = prod / denom;
    der[m] = dsum / denom;
  }
}

enum class Support { Full, SingleStation, TwoPoint, Drop };

/// Real nodes per side in the line interpolants (cubic with the fictitious value).
constexpr std::size_t kLineNodes = 3;

class RuleBuilder {
 public:
  RuleBuilder(const Grid& g, const MibOptions& o) : grid_(g), opts_(o) {}

  struct Result {
    FictitiousRule lower_rule;  // owner = lower node (fictitious value at upper)
    FictitiousRule upper_rule;  // owner = upper node
    bool reduced = false;
    bool dropped = false;
    bool ill = false;
  };

  Result build(const CrossingRecord& rec, std::size_t crossing_index) const {
    const int axis = rec.crossing.axis;
    const auto pc = grid_.ijk(rec.lower);
    const auto qc = grid_.ijk(rec.upper);
    const Side sa = grid_.side(rec.lower);
    const Side sb = grid_.side(rec.upper);
    const double theta = rec.crossing.theta;
    const double h = grid_.h;
    bool reduced = false;

    // line interpolants: side A on u = {.., -1, 0} plus fa at u = 1, side B on fb at
    // u = 0 plus u = {1, 2, ..}; each uses up to kLineNodes consecutive same-side nodes
    Lin val_a, der_a, val_b, der_b;
    auto line = [&](const std::array<int, 3>& from, int step, Side s, double fict_u,
                    double first_u, Lin& val, Lin& der, double Lin::*slot) {
      std::array<double, kLineNodes + 1> u{}, wv{}, wd{};
      std::array<std::size_t, kLineNodes> nodes{};
      std::size_t n = 0;
      auto c = from;
      while (n < kLineNodes && node_on(c, s)) {
        nodes[n] = id(c);
        u[n] = first_u + step * static_cast<double>(n);
        ++n;
        c[axis] += step;
      }
      if (n < 2) reduced = true;
      u[n] = fict_u;
      lagrange(std::span(u.data(), n + 1), theta, std::span(wv.data(), n + 1),
               std::span(wd.data(), n + 1));
      for (std::size_t m = 0; m < n; ++m) {
        val.terms.emplace_back(nodes[m], wv[m]);
        der.terms.emplace_back(nodes[m], wd[m] / h);
      }
      val.*slot = wv[n];
      der.*slot = wd[n] / h;
    };
    line(pc, -1, sa, 1.0, 0.0, val_a, der_a, &Lin::fa);
    line(qc, +1, sb, 0.0, 1.0, val_b, der_b, &Lin::fb);

    const bool a_inside = sa == Side::Inside;
    const Lin& val_in = a_inside ? val_a : val_b;
    const Lin& val_out = a_inside ? val_b : val_a;
    const Lin& der_in = a_inside ? der_a : der_b;
    const Lin& der_out = a_inside ? der_b : der_a;

    // value jump: phi_out - phi_in - g0 = 0
    Lin eq1;
    eq1.add(val_out, 1.0);
    eq1.add(val_in, -1.0);
    eq1.g0 -= 1.0;

    // flux jump with tangential derivatives from one side
    const Vec3& nrm = rec.crossing.normal;
    const double nl = nrm[axis];
    const Side preferred =
        opts_.tangential_side == TangentialSide::Inside ? Side::Inside : Side::Outside;
    std::optional<std::pair<Side, std::array<Lin, 3>>> tang;
    bool dropped = false;
    for (int pass = 0; pass < 4 && !tang; ++pass) {
      for (Side s : {preferred, preferred == Side::Inside ? Side::Outside : Side::Inside}) {
        auto t = tangential(rec, s, sa, static_cast<Support>(pass));
        if (t) {
          tang.emplace(s, std::move(*t));
          if (pass > 0) reduced = true;
          dropped = pass == static_cast<int>(Support::Drop);
          break;
        }
      }
    }
    if (!tang)
      throw GeometryError(
          "insufficient grid support for interface stencil; refine the grid spacing");

    const double ein = opts_.eps_in, eout = opts_.eps_out;
    Lin eq2;
    Lin normal_der;  // normal derivative on the tangential side
    if (tang->first == Side::Inside) {
      normal_der.add(der_in, nl);
      for (int t = 0; t < 3; ++t)
        if (t != axis) normal_der.add(tang->second[t], nrm[t]);
      // phi_out' = phi_in' + n_l (g1/eout + (ein/eout - 1) dphi_in/dn) + g2
      eq2.add(der_out, 1.0);
      eq2.add(der_in, -1.0);
      eq2.g1 -= nl / eout;
      eq2.g2 -= 1.0;
      eq2.add(normal_der, -nl * (ein / eout - 1.0));
    } else {
      normal_der.add(der_out, nl);
      for (int t = 0; t < 3; ++t)
        if (t != axis) normal_der.add(tang->second[t], nrm[t]);
      // phi_in' = phi_out' + n_l (-g1/ein + (eout/ein - 1) dphi_out/dn) - g2
      eq2.add(der_in, 1.0);
      eq2.add(der_out, -1.0);
      eq2.g1 += nl / ein;
      eq2.g2 += 1.0;
      eq2.add(normal_der, -nl * (eout / ein - 1.0));
    }

    const double a1 = eq1.fa, b1 = eq1.fb, a2 = eq2.fa, b2 = eq2.fb;
    const double det = a1 * b2 - a2 * b1;
    const double scale = std::max({std::abs(a1), std::abs(b1)}) *
                         std::max({std::abs(a2), std::abs(b2)});
    if (det == 0.0 || !std::isfinite(det))
      throw GeometryError("singular fictitious-value system at interface crossing");
    Result res;
    res.ill = std::abs(scale / det) > 1e12;
    res.reduced = reduced;
    res.dropped = dropped;

    auto strip = [](Lin l) {
      l.fa = 0.0;
      l.fb = 0.0;
      return l;
    };
    const Lin r1 = strip(eq1), r2 = strip(eq2);
    Lin fa, fb;
    fa.add(r2, b1 / det);
    fa.add(r1, -b2 / det);
    fb.add(r1, a2 / det);
    fb.add(r2, -a1 / det);

    res.lower_rule = to_rule(fa, rec.upper, rec.lower, sa, crossing_index);
    res.upper_rule = to_rule(fb, rec.lower, rec.upper, sb, crossing_index);
    return res;
  }

 private:
  std::size_t id(const std::array<int, 3>& c) const { return grid_.index(c[0], c[1], c[2]); }
  bool node_on(const std::array<int, 3>& c, Side s) const {
    return grid_.contains(c[0], c[1], c[2]) && grid_.side(id(c)) == s;
  }

  /// Derivative along axis t at node c from nodes on side s. `two_point` admits a
  /// first-order one-sided difference when no second-order one exists.
  std::optional<Lin> axis_derivative(std::array<int, 3> c, int t, Side s,
                                     bool two_point = false) const {
    const double h = grid_.h;
    auto off = [&](int k) {
      auto o = c;
      o[t] += k;
      return o;
    };
    Lin d;
    if (node_on(off(1), s) && node_on(off(-1), s)) {
      d.terms = {{id(off(1)), 0.5 / h}, {id(off(-1)), -0.5 / h}};
      return d;
    }
    if (node_on(off(1), s) && node_on(off(2), s)) {
      d.terms = {{id(c), -1.5 / h}, {id(off(1)), 2.0 / h}, {id(off(2)), -0.5 / h}};
      return d;
    }
    if (node_on(off(-1), s) && node_on(off(-2), s)) {
      d.terms = {{id(c), 1.5 / h}, {id(off(-1)), -2.0 / h}, {id(off(-2)), 0.5 / h}};
      return d;
    }
    if (two_point && node_on(off(1), s)) {
      d.terms = {{id(off(1)), 1.0 / h}, {id(c), -1.0 / h}};
      return d;
    }
    if (two_point && node_on(off(-1), s)) {
      d.terms = {{id(c), 1.0 / h}, {id(off(-1)), -1.0 / h}};
      return d;
    }
    return std::nullopt;
  }

  /// Tangential derivatives at the crossing point on side s: extrapolated along the mesh
  /// line from two stations (Full), else taken at one station (SingleStation), else from
  /// two-point differences (TwoPoint), else a component without any support is dropped
  /// (Drop). Everything past Full is locally first order.
  std::optional<std::array<Lin, 3>> tangential(const CrossingRecord& rec, Side s, Side sa,
                                               Support support) const {
    const bool single = support != Support::Full;
    const int axis = rec.crossing.axis;
    const bool from_lower = s == sa;
    const auto start = grid_.ijk(from_lower ? rec.lower : rec.upper);
    const int step = from_lower ? -1 : 1;
    const double first = from_lower ? rec.crossing.theta : 1.0 - rec.crossing.theta;

    constexpr int kStations = 3;
    std::array<std::array<int, 3>, kStations> station{};
    int valid = 0;
    for (int k = 0; k < kStations; ++k) {
      auto c = start;
      c[axis] += step * k;
      if (!node_on(c, s)) break;
      station[k] = c;
      ++valid;
    }

    std::array<Lin, 3> out;
    for (int t = 0; t < 3; ++t) {
      if (t == axis || std::abs(rec.crossing.normal[t]) <= 1e-12) continue;
      bool done = false;
      if (!single) {
        for (int k = 0; k + 1 < valid && !done; ++k) {
          auto d1 = axis_derivative(station[k], t, s);
          auto d2 = axis_derivative(station[k + 1], t, s);
          if (d1 && d2) {
            const double dist1 = first + k, dist2 = first + k + 1;
            out[t].add(*d1, dist2);
            out[t].add(*d2, -dist1);
            done = true;
          }
        }
      } else {
        for (int k = 0; k < valid && !done; ++k) {
          if (auto d = axis_derivative(station[k], t, s, support >= Support::TwoPoint)) {
            out[t] = std::move(*d);
            done = true;
          }
        }
      }
      if (!done && !(support == Support::Drop && valid > 0)) return std::nullopt;
    }
    return out;
  }

  static FictitiousRule to_rule(Lin l, std::size_t target, std::size_t owner, Side side,
                                std::size_t crossing) {
    std::sort(l.terms.begin(), l.terms.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    FictitiousRule r;
    r.target = target;
    r.owner = owner;
    r.side = side;
    r.crossing = crossing;
    r.w0 = l.g0;
    r.w1 = l.g1;
    r.w2 = l.g2;
    for (const auto& [n, w] : l.terms) {
      if (!r.stencil.empty() && r.stencil.back().node == n)
        r.stencil.back().weight += w;
      else
        r.stencil.push_back({n, w});
    }
    std::erase_if(r.stencil, [](const StencilTerm& t) { return t.weight == 0.0; });
    return r;
  }

  const Grid& grid_;
  MibOptions opts_;
};

}  // namespace

RuleSet fictitious_rules(const Grid& grid, const Interface& geometry, const MibOptions& opts) {
  RuleSet set;
  // crossings on positive-direction segments
  for (int k = 0; k < grid.dims[2]; ++k)
    for (int j = 0; j < grid.dims[1]; ++j)
      for (int i = 0; i < grid.dims[0]; ++i) {
        const std::size_t p = grid.index(i, j, k);
        if (!is_irregular(grid.cls[p])) continue;
        for (int a = 0; a < 3; ++a) {
          std::array<int, 3> c{i, j, k};
          c[a] += 1;
          if (!grid.contains(c[0], c[1], c[2])) continue;
          const std::size_t q = grid.index(c[0], c[1], c[2]);
          if (grid.side(p) == grid.side(q)) continue;
          auto x = geometry.find_crossing(grid.position(i, j, k), grid.position(c[0], c[1], c[2]));
          if (!x) throw GeometryError("node classification disagrees with interface crossing");
          x->axis = a;
          set.crossings.push_back({*x, p, q});
        }
      }

  const std::size_t n = set.crossings.size();
  set.rules.resize(2 * n);
  RuleBuilder builder(grid, opts);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::size_t reduced = 0, dropped = 0, ill = 0;
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 64) reduction(+ : reduced, dropped, ill) \
    num_threads(kernels::thread_count())
  for (std::int64_t c = 0; c < count; ++c) {
    try {
      auto res = builder.build(set.crossings[static_cast<std::size_t>(c)], static_cast<std::size_t>(c));
      set.rules[2 * static_cast<std::size_t>(c)] = std::move(res.lower_rule);
      set.rules[2 * static_cast<std::size_t>(c) + 1] = std::move(res.upper_rule);
      reduced += res.reduced ? 1 : 0;
      dropped += res.dropped ? 1 : 0;
      ill += res.ill ? 1 : 0;
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  set.reduced_order = reduced;
  set.dropped_tangential = dropped;
  set.ill_conditioned = ill;

  set.lookup.reserve(2 * n);
  for (std::size_t c = 0; c < n; ++c) {
    const int a = set.crossings[c].crossing.axis;
    set.lookup[static_cast<std::uint64_t>(set.crossings[c].lower) * 6 + 2 * a + 1] =
        static_cast<std::uint32_t>(2 * c);
    set.lookup[static_cast<std::uint64_t>(set.crossings[c].upper) * 6 + 2 * a] =
        static_cast<std::uint32_t>(2 * c + 1);
  }
  return set;
}

MibOperator assemble_operator(Grid grid, RuleSet rules, double eps_in, double eps_out,
                              double kappa_bar_sq) {
  MibOperator op;
  op.grid = std::move(grid);
  op.rules = std::move(rules);
  op.eps_in = eps_in;
  op.eps_out = eps_out;
  op.kappa_bar_sq = kappa_bar_sq;
  const Grid& g = op.grid;

  op.row_of.assign(g.size(), -1);
  std::vector<std::int64_t> slot_of(g.size(), -1);
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const std::size_t id = g.index(i, j, k);
        if (g.on_boundary(i, j, k)) {
          slot_of[id] = static_cast<std::int64_t>(op.boundary_nodes.size());
          op.boundary_nodes.push_back(id);
        } else {
          op.row_of[id] = static_cast<std::int64_t>(op.node_of.size());
          op.node_of.push_back(id);
        }
      }

  const std::size_t rows = op.node_of.size();
  op.A.rows = rows;
  op.A.cols = rows;
  op.A.row_ptr.assign(rows + 1, 0);
  op.A.col.reserve(rows * 7);
  op.A.val.reserve(rows * 7);

  const double h2 = g.h * g.h;
  const std::array<std::array<int, 3>, 6> dirs{{{-1, 0, 0}, {1, 0, 0}, {0, -1, 0},
                                                {0, 1, 0}, {0, 0, -1}, {0, 0, 1}}};
  std::vector<std::pair<std::size_t, double>> entries;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t p = op.node_of[r];
    const auto c = g.ijk(p);
    const bool inside = is_inside(g.cls[p]);
    const double eps = inside ? eps_in : eps_out;
    const double off = eps / h2;
    entries.clear();
    entries.emplace_back(p, 6.0 * off + (inside ? 0.0 : kappa_bar_sq));
    for (int d = 0; d < 6; ++d) {
      const std::size_t q =
          g.index(c[0] + dirs[d][0], c[1] + dirs[d][1], c[2] + dirs[d][2]);
      if (g.side(q) == g.side(p)) {
        entries.emplace_back(q, -off);
        continue;
      }
      const long ri = op.rules.find(p, d);
      if (ri < 0) throw GeometryError("missing fictitious-value rule at irregular node");
      const auto& rule = op.rules.rules[static_cast<std::size_t>(ri)];
      for (const auto& t : rule.stencil) entries.emplace_back(t.node, -off * t.weight);
      op.jump_couplings.push_back(
          {r, rule.crossing, off * rule.w0, off * rule.w1, off * rule.w2});
    }
    std::sort(entries.begin(), entries.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    std::size_t w = 0;
    for (std::size_t e = 0; e < entries.size(); ++e) {
      if (w > 0 && entries[w - 1].first == entries[e].first)
        entries[w - 1].second += entries[e].second;
      else
        entries[w++] = entries[e];
    }
    entries.resize(w);
    for (const auto& [node, coeff] : entries) {
      if (coeff == 0.0) continue;
      const auto col = op.row_of[node];
      if (col >= 0) {
        op.A.col.push_back(static_cast<std::int32_t>(col));
        op.A.val.push_back(coeff);
      } else {
        op.boundary_couplings.push_back(
            {r, static_cast<std::size_t>(slot_of[node]), -coeff});
      }
    }
    op.A.row_ptr[r + 1] = static_cast<std::int64_t>(op.A.col.size());
  }
  return op;
}

std::vector<double> assemble_rhs(const MibOperator& op, const SourceData& src) {
  const std::size_t rows = op.A.rows;
  std::vector<double> b(rows, 0.0);
  if (!src.outside_source.empty()) {
    if (src.outside_source.size() != rows)
      throw std::invalid_argument("outside source size does not match operator rows");
    for (std::size_t r = 0; r < rows; ++r)
      if (!is_inside(op.grid.cls[op.node_of[r]])) b[r] = src.outside_source[r];
  }
  if (src.jumps.size() != op.rules.crossings.size())
    throw std::invalid_argument("jump data size does not match crossing count");
  for (const auto& jc : op.jump_couplings)
    b[jc.row] += jc.c0 * src.jumps[jc.crossing].g0 + jc.c1 * src.jumps[jc.crossing].g1 +
                 jc.c2 * src.jumps[jc.crossing].g2;
  if (src.dirichlet.size() != op.boundary_nodes.size())
    throw std::invalid_argument("Dirichlet data size does not match boundary node count");
  for (const auto& bc : op.boundary_couplings) b[bc.row] += bc.coeff * src.dirichlet[bc.slot];
  return b;
}

MibSystem assemble(std::shared_ptr<const MibOperator> op, std::span<const MultipoleSite> sites,
                   std::span<const Vec3> induced, const RunConfig& cfg) {
  const MibOperator& o = *op;
  const Grid& g = o.grid;
  SourceData src;

  const bool interior = cfg.regularization == Regularization::Interior;
  src.jumps.resize(o.rules.crossings.size());
  const auto nc = static_cast<std::int64_t>(src.jumps.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(static) num_threads(kernels::thread_count())
  for (std::int64_t c = 0; c < nc; ++c) {
    try {
      const Crossing& x = o.rules.crossings[static_cast<std::size_t>(c)].crossing;
      src.jumps[static_cast<std::size_t>(c)] =
          interior ? interior_jump_data(x, sites, induced, o.eps_in)
                   : jump_data(x, sites, induced, o.eps_in, o.eps_out);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<Vec3> bpos(o.boundary_nodes.size());
  for (std::size_t s = 0; s < bpos.size(); ++s) bpos[s] = g.position(o.boundary_nodes[s]);
  src.dirichlet = boundary_values(sites, induced, cfg, bpos);
  if (!interior) {
    std::vector<double> coul(bpos.size());
    kernels::omp::coulomb_at(sites, induced, bpos, 1.0 / o.eps_in, coul);
    for (std::size_t s = 0; s < bpos.size(); ++s) src.dirichlet[s] -= coul[s];
  }

  if (!interior && o.kappa_bar_sq > 0.0 && !sites.empty()) {
    std::vector<std::size_t> rows;
    std::vector<Vec3> pos;
    for (std::size_t r = 0; r < o.A.rows; ++r)
      if (!is_inside(g.cls[o.node_of[r]])) {
        rows.push_back(r);
        pos.push_back(g.position(o.node_of[r]));
      }
    std::vector<double> G(pos.size());
    kernels::omp::coulomb_at(sites, induced, pos, 1.0 / o.eps_in, G);
    src.outside_source.assign(o.A.rows, 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i)
      src.outside_source[rows[i]] = -o.kappa_bar_sq * G[i];
  }

  MibSystem sys;
  sys.rhs = assemble_rhs(o, src);
  sys.dirichlet = std::move(src.dirichlet);
  sys.regularization = cfg.regularization;
  sys.op = std::move(op);
  return sys;
}

std::vector<double> expand_solution(const MibSystem& sys, std::span<const double> x) {
  const MibOperator& o = *sys.op;
  std::vector<double> full(o.grid.size(), 0.0);
  for (std::size_t r = 0; r < o.node_of.size(); ++r) full[o.node_of[r]] = x[r];
  for (std::size_t s = 0; s < o.boundary_nodes.size(); ++s)
    full[o.boundary_nodes[s]] = sys.dirichlet[s];
  return full;
}

}  // namespace pmpb
