#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fit4control/coupling.hpp"
#include "fit4control/domain.hpp"
#include "fit4control/ordering.hpp"
#include "fit4control/resonance.hpp"
#include "fit4control/spectral.hpp"

namespace fit4control {

enum class OrderingChoice { alpha_greedy, identity };

std::string to_string(OrderingChoice choice);
OrderingChoice parse_ordering_choice(const std::string& text);

struct FitCheckOptions {
  RelationSearchOptions relation;
  /// Gap prefixes up to this length are searched.
  std::size_t k_max = 4;
  std::size_t n_max = 20;
  /// 0 selects max(2, ceil(n_max / 2)).
  std::size_t tail_start = 0;
  double relative_threshold = 1e-8;
  OrderingChoice ordering = OrderingChoice::alpha_greedy;
  /// Levels computed; 0 selects max(k_max + 1, 2 n_max).
  std::size_t levels = 0;
  /// Eigenvalues fed to the relation search are extrapolated from this grid
  /// and one of half the spacing, cancelling the O(h^2) error.
  bool richardson = true;
  std::optional<double> simplicity_tolerance;
  double collar_fraction = 0.1;
  EigensolveOptions eigen;
};

/// Desk verdict on (Omega, V + u W, W).
struct FitCheck {
  double u = 0.0;
  std::string potential_label;
  std::size_t levels = 0;
  std::vector<double> eigenvalues;
  /// Extrapolated values when Richardson extrapolation ran; else the grid values.
  std::vector<double> resonance_eigenvalues;
  bool richardson_used = false;
  double simplicity_tolerance = 0.0;
  std::vector<std::size_t> non_simple;
  std::vector<double> gaps;
  ResonanceVerdict resonance;
  Reordering ordering;
  std::optional<std::vector<std::size_t>> stranded_component;
  double zero_threshold = 0.0;
  std::optional<FrequentConnectivity> connectivity;
  std::vector<double> collar_mass;
  /// Truncated-confining domains only: min of V + u W over the collar minus
  /// the highest computed eigenvalue. Nonpositive fails with "truncation".
  std::optional<double> truncation_margin;
  std::string spectrum_fingerprint;
  std::vector<std::string> reasons;
  bool passed = false;
};

/// Resonance among the first k_max gaps, then connectivity of B^h_n for
/// n = 2..n_max under the chosen ordering. Richardson extrapolation needs
/// V and W to carry analytic forms; otherwise grid eigenvalues are used.
FitCheck fit_for_control_check(const ComputationalDomain& domain, const Potential& v,
                               const Potential& w, double u, const FitCheckOptions& options);

struct CertificationInput {
  ComputationalDomain domain;
  Potential v;
  Potential w;
  ControlSet controls;
  FitCheckOptions options;
  std::uint64_t seed = 0;
};

struct CertificationReport {
  ComputationalDomain domain;
  std::string v_label;
  std::string w_label;
  ControlSet controls;
  FitCheck base;
  std::optional<FitCheck> anchor;
  /// "effective (desk)", "fit-for-control (desk)" or "fails: <reasons>".
  std::string verdict;
  std::vector<std::string> reasons;
  FitCheckOptions options;
  std::uint64_t seed = 0;
};

/// "effective (desk)" when (Omega, V + u W, W) passes at the anchor u of
/// the control set; else "fit-for-control (desk)" when (Omega, V, W) passes;
/// else the failure reasons of (Omega, V, W).
CertificationReport certify(const CertificationInput& input);

}  // namespace fit4control
