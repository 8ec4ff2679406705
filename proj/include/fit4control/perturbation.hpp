#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fit4control/certification.hpp"
#include "fit4control/domain.hpp"
#include "fit4control/spectral.hpp"

namespace fit4control {

// ---------------------------------------------------------------------------
// Homotopy along V_mu = V_base + mu (V_target - V_base).

struct HomotopyOptions {
  std::size_t levels = 6;
  /// 1-based level pairs whose couplings <W phi_j, phi_k> are recorded.
  std::vector<std::pair<std::size_t, std::size_t>> tracked_pairs;
  /// Gap flag threshold; unset selects the default simplicity tolerance per sample.
  std::optional<double> gap_tolerance;
  /// |coupling| at or below this is flagged; unset selects 1e-8 max |W|.
  std::optional<double> coupling_threshold;
  EigensolveOptions eigen;
};

struct HomotopySample {
  double mu = 0.0;
  std::vector<double> eigenvalues;
  double min_gap = 0.0;
  double gap_tolerance = 0.0;
  /// label[j] = position in this sample's sorted spectrum of the level that
  /// continues level j + 1 of the previous sample (identity at the start).
  std::vector<std::size_t> tracking;
  /// Sign applied to each tracked eigenfunction for continuity.
  std::vector<int> signs;
  std::vector<double> couplings;
  bool simplicity_flag = false;
  bool vanishing_flag = false;
  bool crossing = false;
};

struct HomotopyReport {
  std::string base_label, target_label, w_label;
  double coupling_threshold = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> tracked_pairs;
  std::vector<HomotopySample> samples;
  std::vector<double> flagged_mu;
};

HomotopyReport homotopy_scan(const ComputationalDomain& domain, const Potential& base,
                             const Potential& target, const std::vector<double>& mu,
                             const Potential& w, const HomotopyOptions& options = {});

// ---------------------------------------------------------------------------
// Blow-up sequences V_k = v on omega, V_bar + k outside.

struct SubBox {
  std::vector<double> lower, upper;
};

struct BlowupRow {
  double k = 0.0;
  std::vector<double> eigenvalues;
  std::vector<double> eigenvalue_errors;
  std::vector<double> eigenfunction_errors;
  /// ||sqrt|V_k| phi_j|| on Omega minus omega.
  std::vector<double> outside_norms;
};

struct BlowupReport {
  SubBox omega;
  std::vector<int> omega_grid;
  std::vector<double> reference_eigenvalues;
  std::vector<BlowupRow> rows;
};

/// omega must be a node-aligned sub-box of the domain. `v` and `v_bar` are
/// sampled on the full grid; only their values inside, resp. outside,
/// omega are used.
BlowupReport blowup_experiment(const ComputationalDomain& domain, const SubBox& omega,
                               const Potential& v, const Potential& v_bar,
                               const std::vector<double>& k_levels, std::size_t levels,
                               const EigensolveOptions& eigen = {});

/// True when the sequence never increases.
bool nonincreasing(const std::vector<double>& values);

// ---------------------------------------------------------------------------
// Monte Carlo genericity scan.

struct GenericityOptions {
  std::size_t samples = 100;
  std::uint64_t seed = 0;
  double amplitude = 10.0;
  int knots = 8;
  /// When set, every sample uses this potential form instead of a random one.
  std::optional<std::string> fixed_v_form;
  FitCheckOptions check;
  unsigned threads = 1;
};

struct GenericitySample {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::string v_form;
  bool passed = false;
  ResonanceStatus resonance = ResonanceStatus::no_relation_found;
  std::optional<std::vector<std::int64_t>> witness;
  bool connected = false;
  std::vector<std::string> reasons;
  std::string error;
};

struct GenericityStats {
  std::size_t samples = 0;
  std::size_t passed = 0;
  std::size_t resonance_failures = 0;
  std::size_t connectivity_failures = 0;
  std::size_t simplicity_failures = 0;
  std::size_t errors = 0;
  double pass_fraction = 0.0;
  std::vector<GenericitySample> results;
};

/// Samples run concurrently and are merged by index, so the statistics do
/// not depend on the thread count.
GenericityStats genericity_scan(const ComputationalDomain& domain, const Potential& w,
                                const GenericityOptions& options);

}  // namespace fit4control
