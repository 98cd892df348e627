#include "pmpb/polarization.hpp"

#include "pmpb/kernels.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <array>
#include <cmath>

namespace pmpb {

Vec3 direct_field(std::span<const MultipoleSite> sites, std::size_t n, const PairMask* mask) {
  Vec3 e = Vec3::Zero();
  for (std::size_t m = 0; m < sites.size(); ++m) {
    if (m == n || (mask && mask->masked(n, m))) continue;
    e -= green_gradient(sites[m], sites[n].position);
  }
  return e;
}

std::vector<Vec3> direct_fields(std::span<const MultipoleSite> sites, const PairMask* mask) {
  std::vector<Vec3> out(sites.size());
  const auto n = static_cast<std::int64_t>(sites.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 8) num_threads(kernels::thread_count())
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = direct_field(sites, static_cast<std::size_t>(i), mask);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

double rms_difference(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]).squaredNorm();
  return std::sqrt(s / static_cast<double>(a.size()));
}

namespace {

/// Dipole field tensors between polarizable sites, cached when the count is modest.
class TensorTable {
 public:
  TensorTable(std::span<const MultipoleSite> sites, const PolarizationOptions& opts)
      : sites_(sites), opts_(opts) {
    for (std::size_t n = 0; n < sites.size(); ++n)
      if (sites[n].alpha > 0.0) polar_.push_back(n);
    if (polar_.size() <= 1500) {
      const std::size_t p = polar_.size();
      cache_.resize(p * p, Mat3::Zero());
      for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = a + 1; b < p; ++b) {
          const Mat3 t = compute(polar_[a], polar_[b]);
          cache_[a * p + b] = t;
          cache_[b * p + a] = t;
        }
    }
  }

  const std::vector<std::size_t>& polar() const { return polar_; }

  /// Tensor between polarizable entries a and b (indices into polar()).
  Mat3 get(std::size_t a, std::size_t b) const {
    if (!cache_.empty()) return cache_[a * polar_.size() + b];
    return compute(polar_[a], polar_[b]);
  }

 private:
  Mat3 compute(std::size_t n, std::size_t m) const {
    if (opts_.mask && opts_.mask->masked(n, m)) return Mat3::Zero();
    static const IdentityDamping identity;
    return interaction_tensor(sites_[n], sites_[m], opts_.damping ? *opts_.damping : identity);
  }

  std::span<const MultipoleSite> sites_;
  const PolarizationOptions& opts_;
  std::vector<std::size_t> polar_;
  std::vector<Mat3> cache_;
};

}  // namespace

InducedDipoleState sor_vacuum(std::span<const MultipoleSite> sites,
                              const PolarizationOptions& opts, std::span<const Vec3> external,
                              std::span<const Vec3> guess) {
  if (!(opts.omega > 0.0 && opts.omega < 2.0))
    throw std::invalid_argument("SOR relaxation factor must lie in (0, 2)");
  const std::size_t n = sites.size();
  InducedDipoleState st;
  st.mu.assign(n, Vec3::Zero());
  if (guess.size() == n)
    for (std::size_t i = 0; i < n; ++i)
      if (sites[i].alpha > 0.0) st.mu[i] = guess[i];

  TensorTable T(sites, opts);
  const auto& polar = T.polar();
  if (polar.empty()) {
    st.iterations = 1;
    st.converged = true;
    st.history.push_back(0.0);
    return st;
  }

  std::vector<Vec3> field = direct_fields(sites, opts.mask);
  if (!external.empty())
    for (std::size_t i = 0; i < n; ++i) field[i] += external[i];

  const double nn = static_cast<double>(n);
  for (int it = 1; it <= opts.max_iters; ++it) {
    double change = 0.0;
    for (std::size_t a = 0; a < polar.size(); ++a) {
      const std::size_t i = polar[a];
      Vec3 e = field[i];
      for (std::size_t b = 0; b < polar.size(); ++b)
        if (b != a) e += T.get(a, b) * st.mu[polar[b]];
      const Vec3 next = (1.0 - opts.omega) * st.mu[i] + opts.omega * sites[i].alpha * e;
      change += (next - st.mu[i]).squaredNorm();
      st.mu[i] = next;
    }
    st.last_rms = std::sqrt(change / nn);
    st.history.push_back(st.last_rms);
    st.iterations = it;
    if (st.last_rms <= opts.tolerance) {
      st.converged = true;
      return st;
    }
    if (!std::isfinite(st.last_rms)) break;
  }
  throw ScfFailure(fmt::format("induced-dipole SOR did not converge in {} sweeps (rms change {:.3g})",
                               st.iterations, st.last_rms),
                   st);
}

InducedDipoleState sor_solvated(std::span<const MultipoleSite> sites,
                                const PolarizationOptions& opts, int max_cycles,
                                std::span<const Vec3> initial, const ReactionGradient& pde) {
  const std::size_t n = sites.size();
  InducedDipoleState st;
  st.mu.assign(n, Vec3::Zero());
  if (initial.size() == n) st.mu.assign(initial.begin(), initial.end());
  for (std::size_t i = 0; i < n; ++i)
    if (sites[i].alpha == 0.0) st.mu[i] = Vec3::Zero();

  for (int cycle = 1; cycle <= max_cycles; ++cycle) {
    const std::vector<Vec3> grad = pde(st.mu);
    std::vector<Vec3> ext(n);
    for (std::size_t i = 0; i < n; ++i) ext[i] = -grad[i];
    const InducedDipoleState inner = sor_vacuum(sites, opts, ext, st.mu);
    st.last_rms = rms_difference(inner.mu, st.mu);
    st.history.push_back(st.last_rms);
    st.iterations = cycle;
    if (st.last_rms <= opts.tolerance) {
      st.converged = true;
      return st;
    }
    st.mu = inner.mu;
  }
  throw ScfFailure(fmt::format("solvated induction did not converge in {} cycles (rms change {:.3g})",
                               max_cycles, st.last_rms),
                   st);
}

namespace {

// monomial exponents up to total degree 3, ordered by degree
constexpr std::array<std::array<int, 3>, 20> kMonomials{{
    {0, 0, 0},
    {1, 0, 0}, {0, 1, 0}, {0, 0, 1},
    {2, 0, 0}, {0, 2, 0}, {0, 0, 2}, {1, 1, 0}, {1, 0, 1}, {0, 1, 1},
    {3, 0, 0}, {0, 3, 0}, {0, 0, 3}, {2, 1, 0}, {2, 0, 1}, {1, 2, 0},
    {0, 2, 1}, {1, 0, 2}, {0, 1, 2}, {1, 1, 1},
}};
constexpr std::array<int, 4> kTerms{1, 4, 10, 20};

std::optional<FieldDerivs> fit(std::span<const double> phi, const Grid& g, const Vec3& r,
                               int width, int degree) {
  const Vec3 u = (r - g.origin) / g.h;
  std::array<int, 3> lo{};
  for (int a = 0; a < 3; ++a) {
    lo[a] = static_cast<int>(std::floor(u[a])) - (width / 2 - 1);
    lo[a] = std::clamp(lo[a], 0, g.dims[a] - width);
  }
  std::vector<std::array<double, 3>> pts;
  std::vector<double> vals;
  for (int k = lo[2]; k < lo[2] + width; ++k)
    for (int j = lo[1]; j < lo[1] + width; ++j)
      for (int i = lo[0]; i < lo[0] + width; ++i) {
        const std::size_t id = g.index(i, j, k);
        if (!is_inside(g.cls[id])) continue;
        const Vec3 x = (g.position(i, j, k) - r) / g.h;
        pts.push_back({x[0], x[1], x[2]});
        vals.push_back(phi[id]);
      }
  const int m = kTerms[degree];
  if (static_cast<int>(pts.size()) < m + m / 2) return std::nullopt;

  Eigen::MatrixXd A(pts.size(), m);
  Eigen::VectorXd b(pts.size());
  for (std::size_t p = 0; p < pts.size(); ++p) {
    for (int t = 0; t < m; ++t) {
      double v = 1.0;
      for (int a = 0; a < 3; ++a)
        for (int e = 0; e < kMonomials[t][a]; ++e) v *= pts[p][a];
      A(static_cast<Eigen::Index>(p), t) = v;
    }
    b(static_cast<Eigen::Index>(p)) = vals[p];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  if (qr.rank() < m) return std::nullopt;
  const Eigen::VectorXd c = qr.solve(b);

  FieldDerivs f;
  const double h = g.h;
  f.value = c(0);
  if (degree >= 1) f.gradient = Vec3(c(1), c(2), c(3)) / h;
  if (degree >= 2) {
    Mat3 H;
    H << 2 * c(4), c(7), c(8), c(7), 2 * c(5), c(9), c(8), c(9), 2 * c(6);
    f.hessian = H / (h * h);
  }
  return f;
}

}  // namespace

FieldDerivs reaction_data_at(std::span<const double> phi, const Grid& grid, const Vec3& r) {
  if (phi.size() != grid.size()) throw std::invalid_argument("field size does not match grid");
  for (int degree = 3; degree >= 1; --degree)
    for (int width : {4, 6}) {
      if (width > std::min({grid.dims[0], grid.dims[1], grid.dims[2]})) continue;
      if (auto f = fit(phi, grid, r, width, degree)) return *f;
    }
  throw GeometryError(fmt::format(
      "too few solute-side grid nodes near ({:.3f}, {:.3f}, {:.3f}) to reconstruct the "
      "reaction field; refine the grid spacing",
      r.x(), r.y(), r.z()));
}

std::vector<FieldDerivs> site_reaction_data(std::span<const double> phi, const Grid& grid,
                                            std::span<const MultipoleSite> sites) {
  std::vector<FieldDerivs> out(sites.size());
  const auto n = static_cast<std::int64_t>(sites.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 4) num_threads(kernels::thread_count())
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          reaction_data_at(phi, grid, sites[static_cast<std::size_t>(i)].position);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace pmpb
