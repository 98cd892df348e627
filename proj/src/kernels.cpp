#include "pmpb/kernels.hpp"

#include "pmpb/errors.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace pmpb::kernels {

int thread_count() {
  static const int n = [] {
    if (const char* env = std::getenv("PMPB_THREADS")) {
      const int v = std::atoi(env);
      if (v > 0) return v;
    }
    return omp_get_max_threads();
  }();
  return n;
}

namespace serial {

void spmv(const CsrMatrix& A, std::span<const double> x, std::span<double> y) {
  for (std::size_t r = 0; r < A.rows; ++r) {
    double s = 0.0;
    for (auto p = A.row_ptr[r]; p < A.row_ptr[r + 1]; ++p) s += A.val[p] * x[A.col[p]];
    y[r] = s;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void classify_sides(const Interface& geometry, const Grid& grid,
                    std::span<std::uint8_t> outside) {
  for (int k = 0; k < grid.dims[2]; ++k)
    for (int j = 0; j < grid.dims[1]; ++j)
      for (int i = 0; i < grid.dims[0]; ++i)
        outside[grid.index(i, j, k)] =
            geometry.classify(grid.position(i, j, k)) == Side::Outside ? 1 : 0;
}

void coulomb_at(std::span<const MultipoleSite> sites, std::span<const Vec3> induced,
                std::span<const Vec3> points, double scale, std::span<double> out) {
  for (std::size_t i = 0; i < points.size(); ++i)
    out[i] = scale * total_coulomb(sites, induced, points[i]);
}

}  // namespace serial

namespace omp {

void spmv(const CsrMatrix& A, std::span<const double> x, std::span<double> y) {
  const auto rows = static_cast<std::int64_t>(A.rows);
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (std::int64_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (auto p = A.row_ptr[r]; p < A.row_ptr[r + 1]; ++p) s += A.val[p] * x[A.col[p]];
    y[r] = s;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<std::int64_t>(a.size());
  double s = 0.0;
#pragma omp parallel for reduction(+ : s) schedule(static) num_threads(thread_count())
  for (std::int64_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void classify_sides(const Interface& geometry, const Grid& grid,
                    std::span<std::uint8_t> outside) {
  const int nz = grid.dims[2];
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < grid.dims[1]; ++j)
      for (int i = 0; i < grid.dims[0]; ++i)
        outside[grid.index(i, j, k)] =
            geometry.classify(grid.position(i, j, k)) == Side::Outside ? 1 : 0;
}

void coulomb_at(std::span<const MultipoleSite> sites, std::span<const Vec3> induced,
                std::span<const Vec3> points, double scale, std::span<double> out) {
  const auto n = static_cast<std::int64_t>(points.size());
  bool singular = false;
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[i] = scale * total_coulomb(sites, induced, points[i]);
    } catch (const SingularityError&) {
#pragma omp atomic write
      singular = true;
    }
  }
  if (singular) throw SingularityError("Coulomb potential evaluated at a site center");
}

}  // namespace omp

void mark_irregular(Grid& grid, std::span<const std::uint8_t> outside) {
  const int nx = grid.dims[0], ny = grid.dims[1], nz = grid.dims[2];
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const std::size_t id = grid.index(i, j, k);
        const std::uint8_t s = outside[id];
        bool irregular = false;
        if (i > 0 && outside[id - 1] != s) irregular = true;
        if (i + 1 < nx && outside[id + 1] != s) irregular = true;
        if (j > 0 && outside[id - nx] != s) irregular = true;
        if (j + 1 < ny && outside[id + nx] != s) irregular = true;
        const std::size_t plane = static_cast<std::size_t>(nx) * ny;
        if (k > 0 && outside[id - plane] != s) irregular = true;
        if (k + 1 < nz && outside[id + plane] != s) irregular = true;
        if (s)
          grid.cls[id] = irregular ? NodeClass::IrregularOutside : NodeClass::RegularOutside;
        else
          grid.cls[id] = irregular ? NodeClass::IrregularInside : NodeClass::RegularInside;
      }
}

}  // namespace pmpb::kernels
