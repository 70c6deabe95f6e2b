#pragma once

#include <span>
#include <vector>

#include "npspec/qcmatrix.hpp"

namespace npspec::qc::detail {

/// n_points x m matrix of column values on the ascending Chebyshev grid.
Matrix grid_values(std::span<const ChebSeries> cols, std::size_t n_points);

/// Columns of V (grid values) back to series, truncated at max_degree.
std::vector<ChebSeries> from_grid(const Matrix& V, const Interval& interval,
                                  std::size_t max_degree);

}  // namespace npspec::qc::detail
