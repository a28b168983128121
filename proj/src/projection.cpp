#include "mwsla/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mwsla/errors.hpp"

namespace mwsla {

TruncatedSimplexPoint project_truncated_simplex(std::span<const double> y, double epsilon) {
  const std::size_t n = y.size();
  if (n < 2) throw StructuralError("projection needs at least two coordinates");
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw DomainError("projection epsilon must lie in (0, 1)");
  }
  double scale = 0.0;
  for (double v : y) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DomainError("KL projection needs strictly positive finite input");
    }
    scale = std::max(scale, v);
  }

  std::vector<double> z(n);
  std::transform(y.begin(), y.end(), z.begin(), [scale](double v) { return v / scale; });

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return z[a] < z[b]; });

  // suffix[k] = sum of the n - k largest entries.
  std::vector<double> suffix(n + 1, 0.0);
  for (std::size_t k = n; k-- > 0;) suffix[k] = suffix[k + 1] + z[order[k]];

  const double floor = epsilon / static_cast<double>(n);
  std::size_t clipped = n - 1;
  double c = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    c = (1.0 - floor * static_cast<double>(k)) / suffix[k];
    if (z[order[k]] * c >= floor) {
      clipped = k;
      break;
    }
  }

  TruncatedSimplexPoint out{std::vector<double>(n), epsilon, clipped};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    out.x[i] = k < clipped ? floor : z[i] * c;
  }
  return out;
}

double kl_divergence(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw StructuralError("kl_divergence: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > 0.0)) throw DomainError("kl_divergence: reference must be positive");
    if (x[i] < 0.0) throw DomainError("kl_divergence: point must be non-negative");
    if (x[i] > 0.0) sum += x[i] * std::log(x[i] / y[i]);
  }
  return sum;
}

}  // namespace mwsla
