#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mwsla {

// A point of the truncated simplex {x : sum x = 1, x(i) >= eps / N}.
struct TruncatedSimplexPoint {
  std::vector<double> x;
  double epsilon = 0.0;
  // Number of coordinates pinned at the floor eps / N.
  std::size_t clipped = 0;
};

// KL projection argmin_{x in truncated simplex} sum_i x(i) log(x(i) / y(i)).
//
// The minimiser has the form x(i) = max(eps/N, C y(i)) and the clipped
// coordinates form a prefix of y sorted ascending. After one stable sort the
// first prefix k whose (k+1)-th entry clears the floor under
//   C_k = (1 - k eps / N) / sum_{j >= k} y_(j)
// is optimal. O(N log N). Input is rescaled by max(y) first, which is exact
// because the projection depends on y only through ratios.
//
// Throws DomainError if any y(i) <= 0 (or is not finite), if eps is outside
// (0, 1), and StructuralError if N < 2.
TruncatedSimplexPoint project_truncated_simplex(std::span<const double> y, double epsilon);

// sum_i x(i) log(x(i) / y(i)) with 0 log 0 = 0. Throws DomainError for
// y(i) <= 0 or x(i) < 0, StructuralError for a length mismatch.
double kl_divergence(std::span<const double> x, std::span<const double> y);

}  // namespace mwsla
