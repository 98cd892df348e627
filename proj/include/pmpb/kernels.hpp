#pragma once

// Data-parallel inner loops. Every kernel in `omp` has a twin in `serial` that
// defines the reference result; tests compare the two and bench/ times them.

#include "pmpb/geometry.hpp"
#include "pmpb/grid.hpp"
#include "pmpb/multipole.hpp"
#include "pmpb/sparse.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace pmpb::kernels {

/// Threads used by the omp kernels; honours PMPB_THREADS when set.
int thread_count();

namespace serial {
void spmv(const CsrMatrix& A, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
void classify_sides(const Interface& geometry, const Grid& grid,
                    std::span<std::uint8_t> outside);
/// out[i] = scale * total_coulomb(sites, induced, points[i])
void coulomb_at(std::span<const MultipoleSite> sites, std::span<const Vec3> induced,
                std::span<const Vec3> points, double scale, std::span<double> out);
}  // namespace serial

namespace omp {
void spmv(const CsrMatrix& A, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
void classify_sides(const Interface& geometry, const Grid& grid,
                    std::span<std::uint8_t> outside);
void coulomb_at(std::span<const MultipoleSite> sites, std::span<const Vec3> induced,
                std::span<const Vec3> points, double scale, std::span<double> out);
}  // namespace omp

/// Fills grid.cls from per-node outside flags (a node is irregular when one of its six
/// neighbours lies on the other side).
void mark_irregular(Grid& grid, std::span<const std::uint8_t> outside);

}  // namespace pmpb::kernels
