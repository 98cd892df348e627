#include "pmpb/grid.hpp"

#include "pmpb/errors.hpp"
#include "pmpb/kernels.hpp"

#include <cmath>
#include <sstream>

namespace pmpb {

Grid::Counts Grid::counts() const {
  Counts c;
  for (auto v : cls) {
    switch (v) {
      case NodeClass::RegularInside: ++c.regular_inside; break;
      case NodeClass::RegularOutside: ++c.regular_outside; break;
      case NodeClass::IrregularInside: ++c.irregular_inside; break;
      case NodeClass::IrregularOutside: ++c.irregular_outside; break;
    }
  }
  return c;
}

void classify_nodes(const Interface& geometry, Grid& grid) {
  std::vector<std::uint8_t> outside(grid.size());
  kernels::omp::classify_sides(geometry, grid, outside);
  kernels::mark_irregular(grid, outside);
}

Grid build_grid_box(const Interface& geometry, const Box& box, double h,
                    std::size_t max_nodes) {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("grid spacing must be > 0");
  Grid g;
  g.h = h;
  std::array<long long, 3> lo{}, hi{};
  double total = 1.0;
  for (int a = 0; a < 3; ++a) {
    lo[a] = static_cast<long long>(std::floor(box.min()[a] / h + 1e-9));
    hi[a] = static_cast<long long>(std::ceil(box.max()[a] / h - 1e-9));
    total *= static_cast<double>(hi[a] - lo[a] + 1);
  }
  if (total > static_cast<double>(max_nodes)) {
    const double scale = std::cbrt(total / static_cast<double>(max_nodes));
    std::ostringstream msg;
    msg << "grid of " << static_cast<long long>(total) << " nodes exceeds the budget of "
        << max_nodes << "; try h >= " << h * scale;
    throw GeometryError(msg.str());
  }
  for (int a = 0; a < 3; ++a) {
    g.origin[a] = static_cast<double>(lo[a]) * h;
    g.dims[a] = static_cast<int>(hi[a] - lo[a] + 1);
  }
  g.cls.assign(g.size(), NodeClass::RegularOutside);
  classify_nodes(geometry, g);
  return g;
}

Grid build_grid(const Interface& geometry, std::span<const MultipoleSite> sites,
                const GridOptions& opts) {
  if (!(opts.padding >= 0.0)) throw std::invalid_argument("padding must be >= 0");
  Box box = geometry.bounds();
  for (const auto& s : sites) box.extend(s.position);
  const double pad = std::max(opts.padding, 2.0 * opts.h);
  box.min().array() -= pad;
  box.max().array() += pad;
  Grid g = build_grid_box(geometry, box, opts.h, opts.max_nodes);

  const auto c = g.counts();
  if (c.regular_inside + c.irregular_inside == 0)
    throw GeometryError("no grid node falls inside the solute; refine the grid spacing");
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i)
        if (g.on_boundary(i, j, k) && is_inside(g.cls[g.index(i, j, k)]))
          throw GeometryError("solute touches the grid boundary; increase padding");
  return g;
}

}  // namespace pmpb
