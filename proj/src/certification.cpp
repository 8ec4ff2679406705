#include "fit4control/certification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fit4control/errors.hpp"

namespace fit4control {

std::string to_string(OrderingChoice choice) {
  return choice == OrderingChoice::identity ? "identity" : "alpha-greedy";
}

OrderingChoice parse_ordering_choice(const std::string& text) {
  if (text == "identity") return OrderingChoice::identity;
  if (text == "alpha-greedy") return OrderingChoice::alpha_greedy;
  throw InvalidArgument("unknown ordering '" + text + "'");
}

namespace {

std::vector<double> richardson_eigenvalues(const ComputationalDomain& domain, const Potential& v,
                                           const Potential& w, double u, std::size_t levels,
                                           const std::vector<double>& coarse,
                                           const EigensolveOptions& eigen) {
  std::vector<int> fine_counts;
  for (int n : domain.grid_counts()) fine_counts.push_back(2 * n + 1);
  const auto fine = make_domain(domain.kind(), domain.sides(), fine_counts, domain.truncation());
  const auto vf = sample_potential(fine, *v.analytic_form);
  const auto wf = sample_potential(fine, *w.analytic_form);
  const auto spec = solve_schrodinger(fine, shifted_potential(vf, wf, u), levels, eigen);
  std::vector<double> out(levels);
  for (std::size_t j = 0; j < levels; ++j) out[j] = (4.0 * spec.eigenvalues[j] - coarse[j]) / 3.0;
  return out;
}

}  // namespace

FitCheck fit_for_control_check(const ComputationalDomain& domain, const Potential& v,
                               const Potential& w, double u, const FitCheckOptions& options) {
  if (options.k_max < 1) throw InvalidArgument("k_max must be at least 1");
  if (options.n_max < 2) throw InvalidArgument("n_max must be at least 2");
  FitCheck check;
  check.u = u;
  const Potential effective = shifted_potential(v, w, u);
  check.potential_label = effective.label;
  check.levels =
      options.levels ? options.levels : std::max(options.k_max + 1, 2 * options.n_max);
  if (check.levels < std::max(options.k_max + 1, options.n_max))
    throw InvalidArgument("levels must cover k_max + 1 and n_max");

  const auto spec = solve_schrodinger(domain, effective, check.levels, options.eigen);
  check.eigenvalues = spec.eigenvalues;
  check.spectrum_fingerprint = spectrum_fingerprint(spec);
  check.simplicity_tolerance =
      options.simplicity_tolerance.value_or(default_simplicity_tolerance(spec));
  const auto simple = simplicity_check(spec, check.simplicity_tolerance);
  for (std::size_t j = 1; j <= check.levels; ++j)
    if (!std::binary_search(simple.begin(), simple.end(), j)) check.non_simple.push_back(j);

  check.richardson_used = options.richardson && v.analytic_form && w.analytic_form;
  check.resonance_eigenvalues =
      check.richardson_used
          ? richardson_eigenvalues(domain, v, w, u, options.k_max + 1, spec.eigenvalues,
                                   options.eigen)
          : std::vector<double>(spec.eigenvalues.begin(),
                                spec.eigenvalues.begin() +
                                    static_cast<std::ptrdiff_t>(options.k_max + 1));
  check.resonance_eigenvalues.resize(options.k_max + 1);
  check.gaps = gap_sequence(check.resonance_eigenvalues);
  check.resonance = rational_relation_search(check.gaps, options.relation);

  if (domain.kind() == DomainKind::truncated_confining) {
    double floor = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < domain.size(); ++i)
      if (domain.in_collar(i, options.collar_fraction)) floor = std::min(floor, effective.values[i]);
    check.truncation_margin = floor - spec.eigenvalues.back();
    if (!(*check.truncation_margin > 0.0)) check.reasons.push_back("truncation");
  }
  if (!check.non_simple.empty()) check.reasons.push_back("simplicity");
  if (check.resonance.status == ResonanceStatus::resonant) check.reasons.push_back("resonance");

  if (check.non_simple.empty()) {
    CouplingOptions copt;
    copt.relative_threshold = options.relative_threshold;
    copt.simplicity_tolerance = check.simplicity_tolerance;
    copt.collar_fraction = options.collar_fraction;
    const auto all = identity_ordering(check.levels);
    const auto universe = coupling_matrix(spec, w, all, check.levels, copt);
    check.zero_threshold = universe.zero_threshold;
    copt.zero_threshold = check.zero_threshold;

    if (options.ordering == OrderingChoice::identity) {
      check.ordering = Reordering::identity(options.n_max);
    } else {
      try {
        check.ordering = alpha_reordering(
            [&](std::size_t j, std::size_t k) {
              return j != k && std::abs(universe(j - 1, k - 1)) > check.zero_threshold;
            },
            options.n_max, check.levels);
      } catch (const StrandedComponent& e) {
        check.stranded_component = e.component();
      }
    }
    if (check.stranded_component) {
      check.reasons.push_back("connectivity");
    } else {
      const auto b = coupling_matrix(domain, spec, w, check.ordering.table, options.n_max, copt);
      check.collar_mass = b.collar_mass;
      check.connectivity = frequent_connectivity(b, options.tail_start);
      if (!check.connectivity->connected_for_all) check.reasons.push_back("connectivity");
    }
  }
  check.passed = check.reasons.empty();
  return check;
}

CertificationReport certify(const CertificationInput& input) {
  CertificationReport report{input.domain, input.v.label, input.w.label, input.controls,
                             {},           std::nullopt,  {},            {},
                             input.options, input.seed};
  report.base = fit_for_control_check(input.domain, input.v, input.w, 0.0, input.options);
  const double anchor = input.controls.anchor();
  if (anchor == 0.0) {
    report.anchor = report.base;
  } else {
    report.anchor = fit_for_control_check(input.domain, input.v, input.w, anchor, input.options);
  }
  if (report.anchor->passed) {
    report.verdict = "effective (desk)";
  } else if (report.base.passed) {
    report.verdict = "fit-for-control (desk)";
  } else {
    report.reasons = report.base.reasons;
    std::string joined;
    for (const auto& r : report.reasons) joined += (joined.empty() ? "" : ", ") + r;
    report.verdict = "fails: " + joined;
  }
  return report;
}

}  // namespace fit4control
