#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fit4control/domain.hpp"

namespace fit4control {

/// sum_i w_i W_i a_i b_i
double coupling_entry(std::span<const double> w, std::span<const double> a,
                      std::span<const double> b, std::span<const double> weights);

/// B^h_n: entries b_jk = <W phi_h(j), phi_h(k)> for j, k < n (0-based storage).
struct CouplingMatrix {
  std::size_t n = 0;
  std::vector<double> entries;  // row-major n x n
  /// 1-based spectrum indices h(1..n).
  std::vector<std::size_t> ordering;
  double zero_threshold = 0.0;
  std::string spectrum_fingerprint;
  /// L2 norm of phi_h(j) on the outer collar; empty without a domain.
  std::vector<double> collar_mass;
  double collar_fraction = 0.0;

  double operator()(std::size_t j, std::size_t k) const { return entries[j * n + k]; }
  /// Leading m x m block with the same threshold and ordering prefix.
  CouplingMatrix leading(std::size_t m) const;
  double max_abs() const;
};

struct CouplingOptions {
  /// Absolute threshold; when unset, relative_threshold * max |b_jk|.
  std::optional<double> zero_threshold;
  double relative_threshold = 1e-8;
  /// When unset, default_simplicity_tolerance of the spectrum.
  std::optional<double> simplicity_tolerance;
  double collar_fraction = 0.1;
};

/// Hash of eigenvalues and grid shape, as 16 hex digits.
std::string spectrum_fingerprint(const SpectralDecomposition& spectrum);

/// Refuses orderings that reach a non-simple eigenvalue.
CouplingMatrix coupling_matrix(const SpectralDecomposition& spectrum, const Potential& w,
                               std::span<const std::size_t> ordering, std::size_t n,
                               const CouplingOptions& options = {});

/// As above, adding the collar-mass diagnostic computed on `domain`.
CouplingMatrix coupling_matrix(const ComputationalDomain& domain,
                               const SpectralDecomposition& spectrum, const Potential& w,
                               std::span<const std::size_t> ordering, std::size_t n,
                               const CouplingOptions& options = {});

struct Connectivity {
  bool connected = false;
  /// Components as sorted 1-based positions, ordered by smallest member.
  std::vector<std::vector<std::size_t>> components;
};

/// Graph on positions 1..n with an edge where |b_jk| > tau (j != k).
Connectivity connectivity(const CouplingMatrix& b, double tau);
Connectivity connectivity(const CouplingMatrix& b);

struct FrequentConnectivityOptions {
  CouplingOptions coupling;
  /// First n of the tail window; 0 selects max(2, ceil(N_max / 2)).
  std::size_t tail_start = 0;
};

struct FrequentConnectivity {
  std::size_t n_max = 0;
  std::size_t tail_start = 0;
  double zero_threshold = 0.0;
  /// (n, connected) for n = 2..n_max.
  std::vector<std::pair<std::size_t, bool>> table;
  bool connected_for_all = false;
  bool frequently_connected = false;
};

/// Connectivity of every leading block of B^h_{N_max}, all using the
/// threshold of the full matrix.
FrequentConnectivity frequent_connectivity(const SpectralDecomposition& spectrum,
                                           const Potential& w,
                                           std::span<const std::size_t> ordering,
                                           std::size_t n_max,
                                           const FrequentConnectivityOptions& options = {});
FrequentConnectivity frequent_connectivity(const CouplingMatrix& full, std::size_t tail_start = 0);

/// The identity ordering 1..n.
std::vector<std::size_t> identity_ordering(std::size_t n);

}  // namespace fit4control
