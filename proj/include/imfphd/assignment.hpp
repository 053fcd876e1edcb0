#pragma once

#include <vector>

#include "imfphd/gaussian.hpp"

namespace imfphd {

// Exact minimum-cost assignment on a square cost matrix (Kuhn-Munkres with
// potentials, O(n^3)).  Returns rowToCol: rowToCol[i] is the column assigned
// to row i.
std::vector<int> solve_assignment(const Matrix& cost);

}  // namespace imfphd
