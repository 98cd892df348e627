#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace pmpb {

/// Row-compressed sparse matrix.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int64_t> row_ptr{0};
  std::vector<std::int32_t> col;
  std::vector<double> val;

  std::size_t nnz() const { return val.size(); }
  double diagonal(std::size_t r) const {
    for (auto p = row_ptr[r]; p < row_ptr[r + 1]; ++p)
      if (static_cast<std::size_t>(col[p]) == r) return val[p];
    return 0.0;
  }
  double at(std::size_t r, std::size_t c) const {
    for (auto p = row_ptr[r]; p < row_ptr[r + 1]; ++p)
      if (static_cast<std::size_t>(col[p]) == c) return val[p];
    return 0.0;
  }
};

}  // namespace pmpb
