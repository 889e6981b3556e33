#include "interleave/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace interleave::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

inline double backup(const BellmanGraph& g, std::span<const double> v, std::size_t n) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t e = g.offset[n]; e < g.offset[n + 1]; ++e) {
    const double cont = g.next[e] < 0 ? 0.0 : v[static_cast<std::size_t>(g.next[e])];
    best = std::max(best, g.reward[e] + g.discount[e] * cont);
  }
  return best;
}

}  // namespace

double bellman_sweep_serial(const BellmanGraph& g, std::span<const double> v, std::span<double> out) {
  double residual = 0.0;
  for (std::size_t n = 0; n < g.num_nodes(); ++n) {
    out[n] = backup(g, v, n);
    residual = std::max(residual, std::abs(out[n] - v[n]));
  }
  return residual;
}

double bellman_sweep_parallel(const BellmanGraph& g, std::span<const double> v, std::span<double> out) {
  double residual = 0.0;
  const auto nodes = static_cast<std::int64_t>(g.num_nodes());
#pragma omp parallel for schedule(static) reduction(max : residual)
  for (std::int64_t k = 0; k < nodes; ++k) {
    const auto n = static_cast<std::size_t>(k);
    out[n] = backup(g, v, n);
    residual = std::max(residual, std::abs(out[n] - v[n]));
  }
  return residual;
}

}  // namespace interleave::kernels
