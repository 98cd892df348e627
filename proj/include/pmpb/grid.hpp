#pragma once

#include "pmpb/geometry.hpp"
#include "pmpb/multipole.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pmpb {

enum class NodeClass : std::uint8_t {
  RegularInside,
  RegularOutside,
  IrregularInside,
  IrregularOutside
};

inline bool is_inside(NodeClass c) {
  return c == NodeClass::RegularInside || c == NodeClass::IrregularInside;
}
inline bool is_irregular(NodeClass c) {
  return c == NodeClass::IrregularInside || c == NodeClass::IrregularOutside;
}

/// Uniform Cartesian grid with cubic cells. Node (i,j,k) sits at origin + h*(i,j,k);
/// flat index i + nx*(j + ny*k).
struct Grid {
  Vec3 origin = Vec3::Zero();
  double h = 1.0;
  std::array<int, 3> dims{0, 0, 0};
  std::vector<NodeClass> cls;

  std::size_t size() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * k);
  }
  std::array<int, 3> ijk(std::size_t idx) const {
    const int i = static_cast<int>(idx % dims[0]);
    idx /= dims[0];
    const int j = static_cast<int>(idx % dims[1]);
    return {i, j, static_cast<int>(idx / dims[1])};
  }
  Vec3 position(int i, int j, int k) const { return origin + h * Vec3(i, j, k); }
  Vec3 position(std::size_t idx) const {
    const auto c = ijk(idx);
    return position(c[0], c[1], c[2]);
  }
  bool contains(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
  }
  bool on_boundary(int i, int j, int k) const {
    return i == 0 || j == 0 || k == 0 || i == dims[0] - 1 || j == dims[1] - 1 ||
           k == dims[2] - 1;
  }
  Side side(std::size_t idx) const { return is_inside(cls[idx]) ? Side::Inside : Side::Outside; }

  struct Counts {
    std::size_t regular_inside = 0, regular_outside = 0, irregular_inside = 0,
                irregular_outside = 0;
    std::size_t irregular() const { return irregular_inside + irregular_outside; }
  };
  Counts counts() const;
};

struct GridOptions {
  double h = 0.5;
  double padding = 3.0;
  std::size_t max_nodes = 40'000'000;
};

/// Grid aligned to the lattice h*Z^3 covering the interface bounds and all site
/// centers plus padding (at least two cells). Throws GeometryError when the node
/// budget is exceeded, no node falls inside, or the boundary layer touches the solute.
Grid build_grid(const Interface& geometry, std::span<const MultipoleSite> sites,
                const GridOptions& opts);

/// Grid over an explicit box, classified against `geometry`.
Grid build_grid_box(const Interface& geometry, const Box& box, double h,
                    std::size_t max_nodes = 40'000'000);

/// Marks each node Inside/Outside (0/1) then regular/irregular.
void classify_nodes(const Interface& geometry, Grid& grid);

}  // namespace pmpb
