#include "fit4control/perturbation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "fit4control/coupling.hpp"
#include "fit4control/errors.hpp"
#include "fit4control/random.hpp"

namespace fit4control {

HomotopyReport homotopy_scan(const ComputationalDomain& domain, const Potential& base,
                             const Potential& target, const std::vector<double>& mu,
                             const Potential& w, const HomotopyOptions& options) {
  const std::size_t n = domain.size();
  if (base.values.size() != n || target.values.size() != n || w.values.size() != n)
    throw InvalidArgument("homotopy: potentials do not match the grid");
  if (options.levels < 1) throw InvalidArgument("homotopy: need at least one level");
  for (const auto& [j, k] : options.tracked_pairs)
    if (j < 1 || k < 1 || j > options.levels || k > options.levels)
      throw InvalidArgument("homotopy: tracked pair outside the computed levels");

  HomotopyReport report;
  report.base_label = base.label;
  report.target_label = target.label;
  report.w_label = w.label;
  report.tracked_pairs = options.tracked_pairs;
  double wmax = 0.0;
  for (double v : w.values) wmax = std::max(wmax, std::abs(v));
  report.coupling_threshold = options.coupling_threshold.value_or(1e-8 * wmax);

  const std::size_t levels = options.levels;
  std::vector<std::vector<double>> tracked;  // by label, sign-adjusted
  std::vector<double> weights;
  for (double m : mu) {
    Potential path;
    path.values.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      path.values[i] = base.values[i] + m * (target.values[i] - base.values[i]);
    path.label = "path";
    const auto spec = solve_schrodinger(domain, path, levels, options.eigen);
    weights = spec.quadrature_weights;

    HomotopySample sample;
    sample.mu = m;
    sample.eigenvalues = spec.eigenvalues;
    sample.gap_tolerance = options.gap_tolerance.value_or(default_simplicity_tolerance(spec));
    sample.min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j < levels; ++j)
      sample.min_gap = std::min(sample.min_gap, spec.eigenvalues[j] - spec.eigenvalues[j - 1]);
    sample.simplicity_flag = levels > 1 && sample.min_gap <= sample.gap_tolerance;

    sample.tracking.resize(levels);
    sample.signs.assign(levels, 1);
    if (tracked.empty()) {
      for (std::size_t j = 0; j < levels; ++j) {
        sample.tracking[j] = j + 1;
        tracked.push_back(spec.eigenfunctions[j]);
      }
    } else {
      std::vector<std::vector<double>> next(levels);
      for (std::size_t j = 0; j < levels; ++j) {
        std::size_t best = 0;
        double best_overlap = -1.0, signed_overlap = 0.0;
        for (std::size_t k = 0; k < levels; ++k) {
          const double o = spec.inner(tracked[j], spec.eigenfunctions[k]);
          if (std::abs(o) > best_overlap) {
            best_overlap = std::abs(o);
            signed_overlap = o;
            best = k;
          }
        }
        sample.tracking[j] = best + 1;
        sample.signs[j] = signed_overlap < 0.0 ? -1 : 1;
        next[j] = spec.eigenfunctions[best];
        if (sample.signs[j] < 0)
          for (auto& v : next[j]) v = -v;
        sample.crossing = sample.crossing || best != j;
      }
      tracked = std::move(next);
    }

    for (const auto& [j, k] : options.tracked_pairs) {
      const double c = coupling_entry(w.values, tracked[j - 1], tracked[k - 1], weights);
      sample.couplings.push_back(c);
      if (std::abs(c) <= report.coupling_threshold) sample.vanishing_flag = true;
    }
    if (sample.simplicity_flag || sample.vanishing_flag) report.flagged_mu.push_back(m);
    report.samples.push_back(std::move(sample));
  }
  return report;
}

namespace {

/// Node range [first, last] of omega along one axis, as 0-based indices.
std::pair<int, int> aligned_range(const ComputationalDomain& domain, int axis, double lo,
                                  double hi) {
  const double h = domain.spacing(axis);
  const double a = (lo - domain.lower(axis)) / h;
  const double b = (hi - domain.lower(axis)) / h;
  const double ra = std::round(a), rb = std::round(b);
  if (std::abs(a - ra) > 1e-9 * std::max(1.0, std::abs(a)) ||
      std::abs(b - rb) > 1e-9 * std::max(1.0, std::abs(b)))
    throw InvalidArgument("omega is not aligned with the grid along axis " +
                          std::to_string(axis) + "; choose grid counts so its faces are nodes");
  if (ra < 0.0 || rb > domain.grid_counts()[axis] + 1.0 || rb - ra < 4.0)
    throw InvalidArgument("omega must lie inside the domain and hold at least 3 nodes per axis");
  return {static_cast<int>(ra), static_cast<int>(rb) - 2};
}

}  // namespace

bool nonincreasing(const std::vector<double>& values) {
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[i - 1]) return false;
  return true;
}

BlowupReport blowup_experiment(const ComputationalDomain& domain, const SubBox& omega,
                               const Potential& v, const Potential& v_bar,
                               const std::vector<double>& k_levels, std::size_t levels,
                               const EigensolveOptions& eigen) {
  const int d = domain.dimension();
  const std::size_t n = domain.size();
  if (omega.lower.size() != static_cast<std::size_t>(d) ||
      omega.upper.size() != static_cast<std::size_t>(d))
    throw InvalidArgument("omega dimension mismatch");
  if (v.values.size() != n || v_bar.values.size() != n)
    throw InvalidArgument("potentials do not match the grid");
  if (levels < 1) throw InvalidArgument("need at least one level");

  BlowupReport report;
  report.omega = omega;
  std::vector<std::pair<int, int>> range;
  std::vector<double> spacing;
  for (int axis = 0; axis < d; ++axis) {
    range.push_back(aligned_range(domain, axis, omega.lower[axis], omega.upper[axis]));
    report.omega_grid.push_back(range.back().second - range.back().first + 1);
    spacing.push_back(domain.spacing(axis));
  }

  // inside[i] = flat index in omega's grid, or npos.
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> inside(n, npos);
  std::vector<double> v_omega;
  for (std::size_t flat = 0; flat < n; ++flat) {
    const auto idx = domain.unravel(flat);
    bool in = true;
    std::size_t sub = 0;
    for (int axis = 0; axis < d && in; ++axis) {
      in = idx[axis] >= range[axis].first && idx[axis] <= range[axis].second;
      sub = sub * static_cast<std::size_t>(report.omega_grid[axis]) +
            static_cast<std::size_t>(idx[axis] - range[axis].first);
    }
    if (in) {
      inside[flat] = sub;
      v_omega.push_back(v.values[flat]);
    }
  }
  // Row-major order of the domain visits omega's nodes in omega's own order.
  const DiscreteOperator reference_op(report.omega_grid, spacing, v_omega);
  const auto reference = eigensolve(reference_op, levels, eigen);
  report.reference_eigenvalues = reference.eigenvalues;
  const double w = domain.cell_volume();

  for (double k : k_levels) {
    Potential vk;
    vk.label = "blow-up";
    vk.values.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      vk.values[i] = inside[i] != npos ? v.values[i] : v_bar.values[i] + k;
    const auto spec = solve_schrodinger(domain, vk, levels, eigen);
    BlowupRow row;
    row.k = k;
    row.eigenvalues = spec.eigenvalues;
    for (std::size_t j = 0; j < levels; ++j) {
      row.eigenvalue_errors.push_back(std::abs(spec.eigenvalues[j] - reference.eigenvalues[j]));
      const auto& f = spec.eigenfunctions[j];
      const auto& g = reference.eigenfunctions[j];
      double plus = 0.0, minus = 0.0, outside = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double ext = inside[i] != npos ? g[inside[i]] : 0.0;
        plus += (f[i] - ext) * (f[i] - ext);
        minus += (f[i] + ext) * (f[i] + ext);
        if (inside[i] == npos) outside += std::abs(vk.values[i]) * f[i] * f[i];
      }
      row.eigenfunction_errors.push_back(std::sqrt(w * std::min(plus, minus)));
      row.outside_norms.push_back(std::sqrt(w * outside));
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

GenericityStats genericity_scan(const ComputationalDomain& domain, const Potential& w,
                                const GenericityOptions& options) {
  GenericityStats stats;
  stats.samples = options.samples;
  stats.results.resize(options.samples);
  std::atomic<std::size_t> next{0};

  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= options.samples) return;
      GenericitySample& s = stats.results[i];
      s.index = i;
      s.seed = derive_seed(options.seed, i) >> 11;  // exact in a double-valued form argument
      if (options.fixed_v_form) {
        s.v_form = *options.fixed_v_form;
      } else {
        std::ostringstream form;
        form << "random-piecewise-linear(seed=" << s.seed << ", amp=" << options.amplitude
             << ", knots=" << options.knots << ")";
        s.v_form = form.str();
      }
      try {
        const auto v = sample_potential(domain, s.v_form);
        const auto check = fit_for_control_check(domain, v, w, 0.0, options.check);
        s.passed = check.passed;
        s.resonance = check.resonance.status;
        s.witness = check.resonance.witness;
        s.connected = check.connectivity && check.connectivity->connected_for_all;
        s.reasons = check.reasons;
      } catch (const std::exception& e) {
        s.error = e.what();
        s.reasons = {"error"};
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(
                                            options.threads, static_cast<unsigned>(options.samples)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  for (const auto& s : stats.results) {
    stats.passed += s.passed ? 1 : 0;
    const auto has = [&s](const char* r) {
      return std::find(s.reasons.begin(), s.reasons.end(), r) != s.reasons.end();
    };
    stats.resonance_failures += has("resonance") ? 1 : 0;
    stats.connectivity_failures += has("connectivity") ? 1 : 0;
    stats.simplicity_failures += has("simplicity") ? 1 : 0;
    stats.errors += s.error.empty() ? 0 : 1;
  }
  stats.pass_fraction =
      options.samples ? static_cast<double>(stats.passed) / static_cast<double>(options.samples)
                      : 0.0;
  return stats;
}

}  // namespace fit4control
