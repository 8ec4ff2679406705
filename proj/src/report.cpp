#include "fit4control/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "fit4control/errors.hpp"

namespace fit4control {

std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

namespace {

void dump(const Json& v, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  switch (v.type()) {
    case Json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(it.key()).dump() + ": ";
        dump(it.value(), indent + 2, out);
      }
      out += "\n" + close + "}";
      return;
    }
    case Json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      bool scalar = true;
      for (const auto& e : v) scalar = scalar && !e.is_structured();
      if (scalar) {
        out += "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (i) out += ", ";
          dump(v[i], indent, out);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        dump(v[i], indent + 2, out);
      }
      out += "\n" + close + "]";
      return;
    }
    case Json::value_t::number_float: out += format_double(v.get<double>()); return;
    default: out += v.dump(); return;
  }
}

Json optional_witness(const std::optional<std::vector<std::int64_t>>& w) {
  return w ? Json(*w) : Json(nullptr);
}

Json matrix_rows(const std::vector<double>& entries, std::size_t n) {
  Json rows = Json::array();
  for (std::size_t j = 0; j < n; ++j) {
    Json row = Json::array();
    for (std::size_t k = 0; k < n; ++k) row.push_back(entries[j * n + k]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string dump_json(const Json& value) {
  std::string out;
  dump(value, 0, out);
  out += "\n";
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  const auto tmp =
      dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot move report into " + path.string() + ": " + ec.message());
  }
}

Json to_json(const ComputationalDomain& domain) {
  Json j;
  j["kind"] = to_string(domain.kind());
  j["dimension"] = domain.dimension();
  j["sides"] = domain.sides();
  j["grid"] = domain.grid_counts();
  Json spacing = Json::array();
  for (int a = 0; a < domain.dimension(); ++a) spacing.push_back(domain.spacing(a));
  j["spacing"] = spacing;
  if (domain.truncation()) {
    j["truncation"] = {{"center", domain.truncation()->center},
                       {"half_width", domain.truncation()->half_width}};
  }
  return j;
}

Json to_json(const Potential& potential) {
  Json j;
  j["label"] = potential.label;
  j["analytic_form"] = potential.analytic_form ? Json(*potential.analytic_form) : Json(nullptr);
  return j;
}

Json to_json(const ControlSet& controls) {
  Json intervals = Json::array();
  for (const auto& i : controls.intervals())
    intervals.push_back(
        {{"lo", i.lo}, {"hi", i.hi}, {"lo_closed", i.lo_closed}, {"hi_closed", i.hi_closed}});
  return {{"intervals", intervals}, {"anchor", controls.anchor()}, {"delta", controls.delta()}};
}

Json to_json(const SpectralDecomposition& spectrum) {
  return {{"eigenvalues", spectrum.eigenvalues}, {"residuals", spectrum.residuals}};
}

Json to_json(const ResonanceVerdict& verdict) {
  return {{"status", to_string(verdict.status)},
          {"witness", optional_witness(verdict.witness)},
          {"search_bound", verdict.search_bound},
          {"tolerance", verdict.tolerance},
          {"tested_count", verdict.tested_count},
          {"residual", verdict.residual}};
}

Json to_json(const CouplingMatrix& matrix) {
  Json j;
  j["n"] = matrix.n;
  j["ordering"] = matrix.ordering;
  j["zero_threshold"] = matrix.zero_threshold;
  j["spectrum_fingerprint"] = matrix.spectrum_fingerprint;
  j["entries"] = matrix_rows(matrix.entries, matrix.n);
  if (!matrix.collar_mass.empty()) {
    j["collar_fraction"] = matrix.collar_fraction;
    j["collar_mass"] = matrix.collar_mass;
  }
  return j;
}

Json to_json(const Connectivity& connectivity) {
  return {{"connected", connectivity.connected}, {"components", connectivity.components}};
}

Json to_json(const FrequentConnectivity& table) {
  Json rows = Json::array();
  for (const auto& [n, ok] : table.table) rows.push_back({{"n", n}, {"connected", ok}});
  return {{"n_max", table.n_max},
          {"tail_window", {table.tail_start, table.n_max}},
          {"zero_threshold", table.zero_threshold},
          {"connected_for_all_n", table.connected_for_all},
          {"frequently_connected_desk", table.frequently_connected},
          {"table", rows}};
}

Json to_json(const Reordering& reordering) {
  return {{"kind", to_string(reordering.kind)}, {"table", reordering.table}};
}

Json to_json(const FitCheck& check) {
  Json j;
  j["u"] = check.u;
  j["potential"] = check.potential_label;
  j["levels"] = check.levels;
  j["eigenvalues"] = check.eigenvalues;
  j["richardson_extrapolated"] = check.richardson_used;
  j["resonance_eigenvalues"] = check.resonance_eigenvalues;
  j["gaps"] = check.gaps;
  j["simplicity_tolerance"] = check.simplicity_tolerance;
  j["non_simple_levels"] = check.non_simple;
  j["resonance"] = to_json(check.resonance);
  j["ordering"] = check.ordering.table.empty() ? Json(nullptr) : to_json(check.ordering);
  j["stranded_component"] =
      check.stranded_component ? Json(*check.stranded_component) : Json(nullptr);
  j["zero_threshold"] = check.zero_threshold;
  j["connectivity"] = check.connectivity ? to_json(*check.connectivity) : Json(nullptr);
  j["collar_mass"] = check.collar_mass;
  j["truncation_margin"] = check.truncation_margin ? Json(*check.truncation_margin) : Json(nullptr);
  j["spectrum_fingerprint"] = check.spectrum_fingerprint;
  j["reasons"] = check.reasons;
  j["passed"] = check.passed;
  return j;
}

Json to_json(const CertificationReport& report) {
  const auto& o = report.options;
  Json j;
  j["verdict"] = report.verdict;
  j["reasons"] = report.reasons;
  j["domain"] = to_json(report.domain);
  j["V"] = report.v_label;
  j["W"] = report.w_label;
  j["controls"] = to_json(report.controls);
  j["envelope"] = {
      {"coeff_bound", o.relation.coeff_bound},
      {"tolerance", o.relation.tolerance},
      {"k_max", o.k_max},
      {"n_max", o.n_max},
      {"tail_start", report.base.connectivity ? report.base.connectivity->tail_start : o.tail_start},
      {"relative_zero_threshold", o.relative_threshold},
      {"zero_threshold", report.base.zero_threshold},
      {"grid", report.domain.grid_counts()},
      {"simplicity_tolerance", report.base.simplicity_tolerance},
      {"residual_tol", o.eigen.residual_tol},
      {"richardson", o.richardson},
      {"ordering", to_string(o.ordering)}};
  j["conventions"] = {
      {"resonance", "floating gaps are never certified non-resonant; NO_RELATION_FOUND holds "
                    "only within (coeff_bound, tolerance) for gap prefixes up to k_max"},
      {"frequent_connectivity", "desk proxy: connected for every n in the tail window"},
      {"simplicity", "tolerance calibrated as 1e-6 * max(1, |lambda_N|) unless configured"}};
  j["base"] = to_json(report.base);
  j["anchor"] = report.anchor ? to_json(*report.anchor) : Json(nullptr);
  j["provenance"] = {{"seed", report.seed}, {"version", kVersion}};
  return j;
}

Json to_json(const HomotopyReport& report) {
  Json samples = Json::array();
  for (const auto& s : report.samples)
    samples.push_back({{"mu", s.mu},
                       {"eigenvalues", s.eigenvalues},
                       {"min_gap", s.min_gap},
                       {"gap_tolerance", s.gap_tolerance},
                       {"tracking", s.tracking},
                       {"signs", s.signs},
                       {"couplings", s.couplings},
                       {"simplicity_flag", s.simplicity_flag},
                       {"vanishing_flag", s.vanishing_flag},
                       {"crossing", s.crossing}});
  Json pairs = Json::array();
  for (const auto& [a, b] : report.tracked_pairs) pairs.push_back({a, b});
  return {{"V_base", report.base_label},
          {"V_target", report.target_label},
          {"W", report.w_label},
          {"coupling_threshold", report.coupling_threshold},
          {"tracked_pairs", pairs},
          {"flagged_mu", report.flagged_mu},
          {"samples", samples}};
}

Json to_json(const BlowupReport& report) {
  Json rows = Json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"k", r.k},
                    {"eigenvalues", r.eigenvalues},
                    {"eigenvalue_errors", r.eigenvalue_errors},
                    {"eigenfunction_errors", r.eigenfunction_errors},
                    {"outside_norms", r.outside_norms}});
  return {{"omega", {{"lower", report.omega.lower}, {"upper", report.omega.upper}}},
          {"omega_grid", report.omega_grid},
          {"reference_eigenvalues", report.reference_eigenvalues},
          {"rows", rows}};
}

Json to_json(const GenericityStats& stats) {
  Json samples = Json::array();
  for (const auto& s : stats.results)
    samples.push_back({{"index", s.index},
                       {"seed", s.seed},
                       {"V", s.v_form},
                       {"passed", s.passed},
                       {"resonance", to_string(s.resonance)},
                       {"witness", optional_witness(s.witness)},
                       {"connected", s.connected},
                       {"reasons", s.reasons},
                       {"error", s.error}});
  return {{"samples", stats.samples},
          {"passed", stats.passed},
          {"pass_fraction", stats.pass_fraction},
          {"resonance_failures", stats.resonance_failures},
          {"connectivity_failures", stats.connectivity_failures},
          {"simplicity_failures", stats.simplicity_failures},
          {"errors", stats.errors},
          {"results", samples}};
}

Json to_json(const ControlSchedule& schedule) {
  Json segments = Json::array();
  for (const auto& s : schedule.segments) segments.push_back({{"u", s.u}, {"t", s.duration}});
  return segments;
}

Json to_json(const SearchResult& result) {
  Json trace = Json::array();
  for (const auto& t : result.trace) trace.push_back({t.candidate, t.fidelity});
  return {{"fidelity", result.fidelity},
          {"evaluated", result.evaluated},
          {"schedule", to_json(result.best)},
          {"total_time", result.best.total_time()},
          {"trace", trace}};
}

Json to_json(const ConsecutiveCouplingTable& table) {
  Json rows = Json::array();
  for (const auto& r : table.rows)
    rows.push_back({{"l", r.l},
                    {"from", r.from},
                    {"to", r.to},
                    {"rank_from", r.rank_from},
                    {"rank_to", r.rank_to},
                    {"integral", r.integral},
                    {"nonzero", r.nonzero}});
  return {{"sides", table.sides},
          {"alpha", table.alpha},
          {"threshold", table.threshold},
          {"all_nonzero", table.all_nonzero},
          {"rows", rows}};
}

Json to_json(std::span<const Complex> state) {
  Json out = Json::array();
  for (const auto& c : state) out.push_back({c.real(), c.imag()});
  return out;
}

std::string grid_csv(std::span<const double> values) {
  std::string out;
  for (double v : values) out += format_double(v) + "\n";
  return out;
}

std::string eigenfunctions_csv(const SpectralDecomposition& spectrum) {
  std::string out = "node";
  for (std::size_t j = 1; j <= spectrum.eigenfunctions.size(); ++j)
    out += ",phi_" + std::to_string(j);
  out += "\n";
  const std::size_t n = spectrum.quadrature_weights.size();
  for (std::size_t i = 0; i < n; ++i) {
    out += std::to_string(i);
    for (const auto& f : spectrum.eigenfunctions) out += "," + format_double(f[i]);
    out += "\n";
  }
  return out;
}

std::string coupling_csv(const CouplingMatrix& matrix) {
  std::string out;
  for (std::size_t j = 0; j < matrix.n; ++j) {
    for (std::size_t k = 0; k < matrix.n; ++k)
      out += (k ? "," : "") + format_double(matrix(j, k));
    out += "\n";
  }
  return out;
}

std::string connectivity_csv(const FrequentConnectivity& table) {
  std::string out = "n,verdict\n";
  for (const auto& [n, ok] : table.table)
    out += std::to_string(n) + "," + (ok ? "connected" : "split") + "\n";
  return out;
}

std::string snake_csv(const std::vector<std::vector<int>>& points) {
  std::string out = "j";
  const std::size_t d = points.empty() ? 0 : points.front().size();
  for (std::size_t i = 1; i <= d; ++i) out += ",x" + std::to_string(i);
  out += "\n";
  for (std::size_t j = 0; j < points.size(); ++j) {
    out += std::to_string(j + 1);
    for (int x : points[j]) out += "," + std::to_string(x);
    out += "\n";
  }
  return out;
}

std::string homotopy_csv(const HomotopyReport& report) {
  std::ostringstream out;
  const std::size_t levels = report.samples.empty() ? 0 : report.samples.front().eigenvalues.size();
  out << "mu,min_gap";
  for (std::size_t j = 1; j <= levels; ++j) out << ",lambda_" << j;
  for (const auto& [a, b] : report.tracked_pairs) out << ",b_" << a << "_" << b;
  out << ",simplicity_flag,vanishing_flag\n";
  for (const auto& s : report.samples) {
    out << format_double(s.mu) << "," << format_double(s.min_gap);
    for (double l : s.eigenvalues) out << "," << format_double(l);
    for (double c : s.couplings) out << "," << format_double(c);
    out << "," << s.simplicity_flag << "," << s.vanishing_flag << "\n";
  }
  return out.str();
}

std::string blowup_csv(const BlowupReport& report) {
  std::string out = "k,j,lambda,eigenvalue_error,eigenfunction_error,outside_norm\n";
  for (const auto& r : report.rows)
    for (std::size_t j = 0; j < r.eigenvalues.size(); ++j)
      out += format_double(r.k) + "," + std::to_string(j + 1) + "," +
             format_double(r.eigenvalues[j]) + "," + format_double(r.eigenvalue_errors[j]) + "," +
             format_double(r.eigenfunction_errors[j]) + "," + format_double(r.outside_norms[j]) +
             "\n";
  return out;
}

std::string genericity_csv(const GenericityStats& stats) {
  std::string out = "index,seed,passed,resonance,connected,reasons\n";
  for (const auto& s : stats.results) {
    std::string reasons;
    for (const auto& r : s.reasons) reasons += (reasons.empty() ? "" : ";") + r;
    out += std::to_string(s.index) + "," + std::to_string(s.seed) + "," +
           (s.passed ? "1" : "0") + "," + to_string(s.resonance) + "," +
           (s.connected ? "1" : "0") + "," + reasons + "\n";
  }
  return out;
}

std::string search_trace_csv(const SearchResult& result) {
  std::string out = "candidate,fidelity\n";
  for (const auto& p : result.trace)
    out += std::to_string(p.candidate) + "," + format_double(p.fidelity) + "\n";
  return out;
}

std::string trajectory_csv(std::span<const double> times, const std::vector<ComplexVector>& states) {
  std::string out = "t";
  const std::size_t n = states.empty() ? 0 : states.front().size();
  for (std::size_t j = 1; j <= n; ++j) out += ",p_" + std::to_string(j);
  out += "\n";
  for (std::size_t i = 0; i < states.size(); ++i) {
    out += format_double(times[i]);
    for (const auto& c : states[i]) out += "," + format_double(std::norm(c));
    out += "\n";
  }
  return out;
}

}  // namespace fit4control
