#include "fit4control/coupling.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>

#include "fit4control/errors.hpp"
#include "fit4control/spectral.hpp"

namespace fit4control {

double coupling_entry(std::span<const double> w, std::span<const double> a,
                      std::span<const double> b, std::span<const double> weights) {
  if (w.size() != a.size() || a.size() != b.size() || b.size() != weights.size())
    throw InvalidArgument("coupling_entry: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += weights[i] * w[i] * a[i] * b[i];
  return s;
}

CouplingMatrix CouplingMatrix::leading(std::size_t m) const {
  if (m > n) throw InvalidArgument("leading block larger than the matrix");
  CouplingMatrix out;
  out.n = m;
  out.entries.resize(m * m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < m; ++k) out.entries[j * m + k] = entries[j * n + k];
  out.ordering.assign(ordering.begin(), ordering.begin() + static_cast<std::ptrdiff_t>(m));
  out.zero_threshold = zero_threshold;
  out.spectrum_fingerprint = spectrum_fingerprint;
  if (!collar_mass.empty())
    out.collar_mass.assign(collar_mass.begin(), collar_mass.begin() + static_cast<std::ptrdiff_t>(m));
  out.collar_fraction = collar_fraction;
  return out;
}

double CouplingMatrix::max_abs() const {
  double m = 0.0;
  for (double v : entries) m = std::max(m, std::abs(v));
  return m;
}

std::string spectrum_fingerprint(const SpectralDecomposition& spectrum) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (v >> (8 * byte)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  for (double l : spectrum.eigenvalues) mix(std::bit_cast<std::uint64_t>(l));
  for (int g : spectrum.grid_shape) mix(static_cast<std::uint64_t>(g));
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(h));
  return buffer;
}

std::vector<std::size_t> identity_ordering(std::size_t n) {
  std::vector<std::size_t> h(n);
  std::iota(h.begin(), h.end(), 1);
  return h;
}

CouplingMatrix coupling_matrix(const SpectralDecomposition& spectrum, const Potential& w,
                               std::span<const std::size_t> ordering, std::size_t n,
                               const CouplingOptions& options) {
  if (n == 0) throw InvalidArgument("coupling matrix needs n >= 1");
  if (ordering.size() < n) throw InvalidArgument("ordering shorter than n");
  const std::size_t levels = spectrum.count();
  if (spectrum.eigenfunctions.size() != levels)
    throw InvalidArgument("spectrum has no sampled eigenfunctions");
  for (std::size_t j = 0; j < n; ++j) {
    if (ordering[j] < 1 || ordering[j] > levels)
      throw InvalidArgument("ordering entry " + std::to_string(ordering[j]) +
                            " outside the computed spectrum of " + std::to_string(levels) +
                            " levels");
    for (std::size_t k = 0; k < j; ++k)
      if (ordering[k] == ordering[j]) throw InvalidArgument("ordering repeats an index");
  }
  const double simple_tol =
      options.simplicity_tolerance.value_or(default_simplicity_tolerance(spectrum));
  const auto simple = simplicity_check(spectrum, simple_tol);
  for (std::size_t j = 0; j < n; ++j)
    if (!std::binary_search(simple.begin(), simple.end(), ordering[j]))
      throw InvalidArgument("eigenvalue " + std::to_string(ordering[j]) +
                            " is not simple; coupling entries are not well defined");

  CouplingMatrix b;
  b.n = n;
  b.entries.assign(n * n, 0.0);
  b.ordering.assign(ordering.begin(), ordering.begin() + static_cast<std::ptrdiff_t>(n));
  b.spectrum_fingerprint = spectrum_fingerprint(spectrum);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = j; k < n; ++k) {
      const double v =
          coupling_entry(w.values, spectrum.eigenfunctions[ordering[j] - 1],
                         spectrum.eigenfunctions[ordering[k] - 1], spectrum.quadrature_weights);
      if (!std::isfinite(v)) throw NumericalError("non-finite coupling entry");
      b.entries[j * n + k] = v;
      b.entries[k * n + j] = v;
    }
  b.zero_threshold = options.zero_threshold.value_or(options.relative_threshold * b.max_abs());
  return b;
}

CouplingMatrix coupling_matrix(const ComputationalDomain& domain,
                               const SpectralDecomposition& spectrum, const Potential& w,
                               std::span<const std::size_t> ordering, std::size_t n,
                               const CouplingOptions& options) {
  auto b = coupling_matrix(spectrum, w, ordering, n, options);
  if (domain.size() != spectrum.quadrature_weights.size())
    throw InvalidArgument("domain grid does not match the spectrum");
  b.collar_fraction = options.collar_fraction;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& f = spectrum.eigenfunctions[b.ordering[j] - 1];
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
      if (domain.in_collar(i, options.collar_fraction))
        s += spectrum.quadrature_weights[i] * f[i] * f[i];
    b.collar_mass.push_back(std::sqrt(s));
  }
  return b;
}

Connectivity connectivity(const CouplingMatrix& b, double tau) {
  const std::size_t n = b.n;
  std::vector<std::size_t> label(n, n);
  Connectivity out;
  std::vector<std::size_t> queue;
  for (std::size_t start = 0; start < n; ++start) {
    if (label[start] != n) continue;
    std::vector<std::size_t> component;
    queue.assign(1, start);
    label[start] = start;
    while (!queue.empty()) {
      const std::size_t j = queue.back();
      queue.pop_back();
      component.push_back(j + 1);
      for (std::size_t k = 0; k < n; ++k)
        if (k != j && label[k] == n && std::abs(b(j, k)) > tau) {
          label[k] = start;
          queue.push_back(k);
        }
    }
    std::sort(component.begin(), component.end());
    out.components.push_back(std::move(component));
  }
  out.connected = out.components.size() <= 1;
  return out;
}

Connectivity connectivity(const CouplingMatrix& b) { return connectivity(b, b.zero_threshold); }

FrequentConnectivity frequent_connectivity(const CouplingMatrix& full, std::size_t tail_start) {
  const std::size_t n_max = full.n;
  if (n_max < 2) throw InvalidArgument("frequent connectivity needs N_max >= 2");
  if (tail_start == 0) tail_start = std::max<std::size_t>(2, (n_max + 1) / 2);
  if (tail_start < 2 || tail_start > n_max)
    throw InvalidArgument("tail window start must lie in [2, N_max]");
  FrequentConnectivity out;
  out.n_max = n_max;
  out.tail_start = tail_start;
  out.zero_threshold = full.zero_threshold;
  out.connected_for_all = true;
  out.frequently_connected = true;
  for (std::size_t n = 2; n <= n_max; ++n) {
    const bool ok = connectivity(full.leading(n), full.zero_threshold).connected;
    out.table.emplace_back(n, ok);
    out.connected_for_all = out.connected_for_all && ok;
    if (n >= tail_start) out.frequently_connected = out.frequently_connected && ok;
  }
  return out;
}

FrequentConnectivity frequent_connectivity(const SpectralDecomposition& spectrum,
                                           const Potential& w,
                                           std::span<const std::size_t> ordering,
                                           std::size_t n_max,
                                           const FrequentConnectivityOptions& options) {
  return frequent_connectivity(coupling_matrix(spectrum, w, ordering, n_max, options.coupling),
                               options.tail_start);
}

}  // namespace fit4control
