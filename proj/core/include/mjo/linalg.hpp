#pragma once

#include <vector>

namespace mjo {

/// Solves A x = b for small dense systems by Gaussian elimination with
/// partial pivoting. A is n x n row-major and is destroyed; the solution
/// replaces b. Throws DataError on singular systems.
void solve_linear_system(std::vector<double>& a, std::vector<double>& b, int n);

}  // namespace mjo
