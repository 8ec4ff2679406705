#pragma once

// Hand-rolled generators for property tests. Each case draws from its own
// stream so a failing case can be replayed from (seed, index) alone.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "fit4control/galerkin.hpp"
#include "fit4control/random.hpp"

namespace gen {

using fit4control::Complex;
using fit4control::ComplexVector;
using fit4control::Rng;

inline void for_all(std::uint64_t seed, std::size_t cases,
                    const std::function<void(Rng&, std::size_t)>& property) {
  for (std::size_t i = 0; i < cases; ++i) {
    Rng rng(fit4control::derive_seed(seed, i));
    property(rng, i);
  }
}

inline std::vector<double> reals(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline ComplexVector unit_state(Rng& rng, std::size_t n) {
  ComplexVector v(n);
  double s = 0.0;
  for (auto& c : v) {
    c = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    s += std::norm(c);
  }
  for (auto& c : v) c /= std::sqrt(s);
  return v;
}

inline fit4control::TruncatedSystem system(Rng& rng, std::size_t n) {
  auto drift = reals(rng, n, 0.0, 20.0);
  std::sort(drift.begin(), drift.end());
  fit4control::linalg::DenseMatrix b(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) b(i, j) = b(j, i) = rng.uniform(-1.0, 1.0);
  return fit4control::make_truncated_system(drift, b);
}

inline fit4control::ControlSchedule schedule(Rng& rng, std::size_t max_segments, double u_bound,
                                             double max_duration) {
  fit4control::ControlSchedule s;
  const auto m = static_cast<std::size_t>(rng.integer(1, static_cast<std::int64_t>(max_segments)));
  for (std::size_t k = 0; k < m; ++k)
    s.segments.push_back({rng.uniform(-u_bound, u_bound), rng.uniform(1e-3, max_duration)});
  return s;
}

inline fit4control::DensityMatrix density(Rng& rng, std::size_t n) {
  const auto m = static_cast<std::size_t>(rng.integer(1, static_cast<std::int64_t>(n)));
  std::vector<double> w = reals(rng, m, 0.05, 1.0);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= total;
  std::vector<ComplexVector> states;
  for (std::size_t k = 0; k < m; ++k) states.push_back(unit_state(rng, n));
  auto rho = fit4control::DensityMatrix::mixture(w, states);
  return rho;
}

/// Symmetric 0/1 adjacency on 1..n, connected: a random spanning tree plus
/// extra edges with probability p.
inline std::vector<std::vector<bool>> connected_pattern(Rng& rng, std::size_t n, double p) {
  std::vector<std::vector<bool>> a(n + 1, std::vector<bool>(n + 1, false));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 1);
  for (std::size_t i = n; i > 1; --i)
    std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(i) - 1))]);
  for (std::size_t i = 1; i < n; ++i) {
    const auto j = perm[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(i) - 1))];
    a[perm[i]][j] = a[j][perm[i]] = true;
  }
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = i + 1; j <= n; ++j)
      if (rng.uniform() < p) a[i][j] = a[j][i] = true;
  return a;
}

/// Values with a planted relation sum q_i mu_i = 0: mu_1..mu_{K-1} random,
/// the last solved from q (whose last entry is nonzero).
struct Planted {
  std::vector<double> values;
  std::vector<std::int64_t> relation;
};

inline Planted planted_relation(Rng& rng, std::size_t k, std::int64_t bound) {
  Planted p;
  p.relation.resize(k);
  for (auto& q : p.relation) q = rng.integer(-bound, bound);
  while (p.relation.back() == 0) p.relation.back() = rng.integer(-bound, bound);
  long double acc = 0.0L;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    p.values.push_back(rng.uniform(1.0, 10.0));
    acc += static_cast<long double>(p.relation[i]) * p.values.back();
  }
  p.values.push_back(static_cast<double>(-acc / static_cast<long double>(p.relation.back())));
  return p;
}

}  // namespace gen
