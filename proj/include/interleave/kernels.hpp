#pragma once

// Data-parallel kernels. Every OpenMP kernel has a serial twin that is the
// reference in tests; both produce bit-identical results because work items
// are independent and results are stored by index.

#include <cstddef>
#include <cstdint>
#include <exception>
#include <span>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace interleave::kernels {

/// out[k] = fn(k) for k in [0, n), serially.
template <class T, class Fn>
std::vector<T> map_serial(std::size_t n, Fn&& fn) {
  std::vector<T> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = fn(k);
  return out;
}

/// out[k] = fn(k) for k in [0, n), one work item per OpenMP iteration.
/// Exceptions thrown inside the loop are rethrown after it.
template <class T, class Fn>
std::vector<T> map_parallel(std::size_t n, Fn&& fn) {
  std::vector<T> out(n);
  std::exception_ptr error;
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t k = 0; k < count; ++k) {
    try {
      out[static_cast<std::size_t>(k)] = fn(static_cast<std::size_t>(k));
    } catch (...) {
#pragma omp critical(interleave_map_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

int max_threads();

/// Deterministic decision graph in CSR layout: node n owns action edges
/// [offset[n], offset[n+1]); edge e pays reward[e], then continues at
/// next[e] (or terminates when next[e] < 0) with weight discount[e].
struct BellmanGraph {
  std::vector<std::size_t> offset{0};
  std::vector<double> reward;
  std::vector<double> discount;
  std::vector<std::int64_t> next;

  std::size_t num_nodes() const { return offset.size() - 1; }
  std::size_t num_edges() const { return reward.size(); }
};

/// One synchronous (Jacobi) Bellman sweep: out[n] = max_e reward + discount * v[next].
/// Returns the sup-norm change.
double bellman_sweep_serial(const BellmanGraph& g, std::span<const double> v, std::span<double> out);
double bellman_sweep_parallel(const BellmanGraph& g, std::span<const double> v, std::span<double> out);

}  // namespace interleave::kernels
