#include "fit4control/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "fit4control/errors.hpp"
#include "fit4control/perturbation.hpp"

namespace fit4control {

namespace {

std::string child(const std::string& pointer, const std::string& key) {
  std::string escaped;
  for (char c : key) {
    if (c == '~') escaped += "~0";
    else if (c == '/') escaped += "~1";
    else escaped += c;
  }
  return pointer + "/" + escaped;
}

std::string child(const std::string& pointer, std::size_t index) {
  return pointer + "/" + std::to_string(index);
}

const Json* find(const Json& object, const char* key) {
  if (!object.is_object()) return nullptr;
  auto it = object.find(key);
  return it == object.end() ? nullptr : &*it;
}

void require_object(const Json& j, const std::string& pointer) {
  if (!j.is_object()) throw ConfigError(pointer, "expected an object");
}

void check_keys(const Json& object, const std::string& pointer,
                std::initializer_list<const char*> allowed) {
  require_object(object, pointer);
  for (auto it = object.begin(); it != object.end(); ++it) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return it.key() == k; });
    if (!known) throw ConfigError(child(pointer, it.key()), "unknown field");
  }
}

double number(const Json& j, const std::string& pointer) {
  if (!j.is_number()) throw ConfigError(pointer, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(pointer, "expected a finite number");
  return v;
}

double positive(const Json& j, const std::string& pointer) {
  const double v = number(j, pointer);
  if (!(v > 0.0)) throw ConfigError(pointer, "expected a positive number");
  return v;
}

std::int64_t integer(const Json& j, const std::string& pointer) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.0e15)
      return static_cast<std::int64_t>(v);
  }
  throw ConfigError(pointer, "expected an integer");
}

std::size_t count(const Json& j, const std::string& pointer, std::size_t minimum = 0) {
  const auto v = integer(j, pointer);
  if (v < static_cast<std::int64_t>(minimum))
    throw ConfigError(pointer, "expected an integer >= " + std::to_string(minimum));
  return static_cast<std::size_t>(v);
}

bool boolean(const Json& j, const std::string& pointer) {
  if (!j.is_boolean()) throw ConfigError(pointer, "expected true or false");
  return j.get<bool>();
}

std::string text(const Json& j, const std::string& pointer) {
  if (!j.is_string()) throw ConfigError(pointer, "expected a string");
  return j.get<std::string>();
}

const Json& array(const Json& j, const std::string& pointer) {
  if (!j.is_array()) throw ConfigError(pointer, "expected an array");
  return j;
}

std::vector<double> numbers(const Json& j, const std::string& pointer) {
  std::vector<double> out;
  for (std::size_t i = 0; i < array(j, pointer).size(); ++i)
    out.push_back(number(j[i], child(pointer, i)));
  return out;
}

template <class T, class F>
T optional_field(const Json& object, const std::string& pointer, const char* key, T fallback,
                 F read) {
  const Json* f = find(object, key);
  return f ? read(*f, child(pointer, key)) : fallback;
}

std::uint64_t parse_seed(const Json& j, const std::string& pointer) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  const auto v = integer(j, pointer);
  if (v < 0) throw ConfigError(pointer, "seed must be nonnegative");
  return static_cast<std::uint64_t>(v);
}

EigenMethod parse_method(const Json& j, const std::string& pointer) {
  const auto s = text(j, pointer);
  if (s == "automatic") return EigenMethod::automatic;
  if (s == "tridiagonal") return EigenMethod::tridiagonal;
  if (s == "bisection") return EigenMethod::bisection;
  if (s == "dense") return EigenMethod::dense;
  if (s == "lanczos") return EigenMethod::lanczos;
  if (s == "davidson") return EigenMethod::davidson;
  throw ConfigError(pointer,
                    "unknown method '" + s +
                        "' (automatic, tridiagonal, bisection, dense, lanczos, davidson)");
}

EigensolveOptions parse_eigen(const Json& root) {
  EigensolveOptions eigen;
  const Json* s = find(root, "spectral");
  if (!s) return eigen;
  const std::string p = "/spectral";
  check_keys(*s, p,
             {"levels", "richardson", "residual_tol", "simplicity_tolerance", "method",
              "dense_limit", "max_iterations"});
  if (const Json* f = find(*s, "method")) eigen.method = parse_method(*f, child(p, "method"));
  if (const Json* f = find(*s, "residual_tol"))
    eigen.residual_tol = positive(*f, child(p, "residual_tol"));
  if (const Json* f = find(*s, "dense_limit"))
    eigen.dense_limit = count(*f, child(p, "dense_limit"), 1);
  if (const Json* f = find(*s, "max_iterations"))
    eigen.max_iterations = static_cast<int>(count(*f, child(p, "max_iterations"), 1));
  return eigen;
}

/// Turns library InvalidArgument raised while building a value into a
/// ConfigError at `pointer`.
template <class F>
auto at_pointer(const std::string& pointer, F build) {
  try {
    return build();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(pointer, e.what());
  }
}

Json envelope(const std::string& command, std::uint64_t seed) {
  Json j;
  j["version"] = kVersion;
  j["command"] = command;
  j["seed"] = seed;
  return j;
}

void merge(Json& into, const Json& from) {
  for (auto it = from.begin(); it != from.end(); ++it) into[it.key()] = it.value();
}

Json eigen_json(const EigensolveOptions& e) {
  std::string method = "automatic";
  switch (e.method) {
    case EigenMethod::automatic: method = "automatic"; break;
    case EigenMethod::tridiagonal: method = "tridiagonal"; break;
    case EigenMethod::bisection: method = "bisection"; break;
    case EigenMethod::dense: method = "dense"; break;
    case EigenMethod::lanczos: method = "lanczos"; break;
    case EigenMethod::davidson: method = "davidson"; break;
  }
  return {{"method", method}, {"residual_tol", e.residual_tol}, {"dense_limit", e.dense_limit}};
}

Json matrix_json(const ComplexMatrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.size(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

double norm(std::span<const Complex> v) {
  double s = 0.0;
  for (const auto& c : v) s += std::norm(c);
  return std::sqrt(s);
}

std::optional<std::pair<std::size_t, std::size_t>> pair_from(const Json& j,
                                                             const std::string& pointer) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(pointer, "expected a pair [j, k]");
  return std::make_pair(count(j[0], child(pointer, 0), 1), count(j[1], child(pointer, 1), 1));
}

// ---------------------------------------------------------------------------

CommandResult run_certify(const Json& root, std::uint64_t seed, std::ostream* log) {
  check_keys(root, "",
             {"domain", "V", "W", "controls", "resonance", "connectivity", "spectral", "seed"});
  const auto input = parse_certification(root, seed);
  if (log) *log << "certify: " << input.domain.size() << " grid nodes\n";
  const auto report = certify(input);
  CommandResult r;
  r.report = envelope("certify", seed);
  merge(r.report, to_json(report));
  r.report["envelope"]["eigensolver"] = eigen_json(input.options.eigen);
  if (report.base.connectivity) r.csv = connectivity_csv(*report.base.connectivity);
  if (log) *log << "verdict: " << report.verdict << "\n";
  return r;
}

CommandResult run_scan(const Json& root, std::uint64_t seed, unsigned threads,
                       std::ostream* log) {
  check_keys(root, "",
             {"domain", "W", "ensemble", "resonance", "connectivity", "spectral", "seed"});
  const auto domain = parse_domain(root);
  const Json* w_config = find(root, "W");
  if (!w_config) throw ConfigError("/W", "required field missing");
  const auto w = parse_potential(domain, *w_config, "/W");

  GenericityOptions opts;
  opts.seed = seed;
  opts.threads = threads;
  opts.check = parse_fit_options(root);
  if (const Json* e = find(root, "ensemble")) {
    const std::string p = "/ensemble";
    check_keys(*e, p, {"samples", "amp", "knots", "fixed_V"});
    if (const Json* f = find(*e, "samples")) opts.samples = count(*f, child(p, "samples"), 1);
    if (const Json* f = find(*e, "amp")) opts.amplitude = positive(*f, child(p, "amp"));
    if (const Json* f = find(*e, "knots"))
      opts.knots = static_cast<int>(count(*f, child(p, "knots"), 2));
    if (const Json* f = find(*e, "fixed_V")) {
      const auto form = text(*f, child(p, "fixed_V"));
      at_pointer(child(p, "fixed_V"), [&] { return sample_potential(domain, form); });
      opts.fixed_v_form = form;
    }
  }
  if (log)
    *log << "scan: " << opts.samples << " samples on " << threads << " thread(s)\n";
  const auto stats = genericity_scan(domain, w, opts);

  CommandResult r;
  r.report = envelope("scan", seed);
  r.report["domain"] = to_json(domain);
  r.report["W"] = w.label;
  r.report["ensemble"] = {{"samples", opts.samples},
                          {"amp", opts.amplitude},
                          {"knots", opts.knots},
                          {"fixed_V", opts.fixed_v_form ? Json(*opts.fixed_v_form) : Json(nullptr)}};
  r.report["envelope"] = {{"coeff_bound", opts.check.relation.coeff_bound},
                          {"tolerance", opts.check.relation.tolerance},
                          {"k_max", opts.check.k_max},
                          {"n_max", opts.check.n_max},
                          {"tail_start", opts.check.tail_start},
                          {"relative_zero_threshold", opts.check.relative_threshold},
                          {"grid", domain.grid_counts()},
                          {"simplicity_tolerance",
                           opts.check.simplicity_tolerance ? Json(*opts.check.simplicity_tolerance)
                                                           : Json("1e-6 * max(1, |lambda_N|)")},
                          {"richardson", opts.check.richardson},
                          {"ordering", to_string(opts.check.ordering)},
                          {"eigensolver", eigen_json(opts.check.eigen)}};
  r.report["stats"] = to_json(stats);
  r.csv = genericity_csv(stats);
  if (log) *log << "pass fraction: " << format_double(stats.pass_fraction) << "\n";
  return r;
}

CommandResult run_snake(const Json& root, std::uint64_t seed, std::ostream* log) {
  check_keys(root, "", {"d", "count", "consecutive_coupling", "seed"});
  const Json* dj = find(root, "d");
  const Json* cj = find(root, "count");
  if (!dj) throw ConfigError("/d", "required field missing");
  if (!cj) throw ConfigError("/count", "required field missing");
  const int d = static_cast<int>(count(*dj, "/d", 1));
  const std::size_t n = count(*cj, "/count", 1);
  if (d > 16) throw ConfigError("/d", "dimension above 16 is not supported");

  SnakeBijection s(d);
  const auto points = s.prefix(n);
  CommandResult r;
  r.report = envelope("snake", seed);
  r.report["d"] = d;
  r.report["count"] = n;
  r.report["schedule"] = "p = l mod d + 1";
  r.report["box"] = s.box();
  r.report["box_sizes"] = s.box_sizes();
  Json pts = Json::array();
  for (const auto& p : points) pts.push_back(p);
  r.report["points"] = pts;

  if (const Json* cc = find(root, "consecutive_coupling")) {
    const std::string p = "/consecutive_coupling";
    check_keys(*cc, p, {"sides", "alpha", "grid", "Z", "count", "threshold"});
    const auto sides = optional_field(*cc, p, "sides", default_snake_sides(d), numbers);
    if (sides.size() != static_cast<std::size_t>(d))
      throw ConfigError(child(p, "sides"), "expected " + std::to_string(d) + " entries");
    ConsecutiveCouplingOptions opts;
    opts.alpha = optional_field(*cc, p, "alpha", 1.0, positive);
    if (const Json* f = find(*cc, "threshold")) opts.threshold = positive(*f, child(p, "threshold"));
    std::vector<int> grid(static_cast<std::size_t>(d), d == 1 ? 2000 : 64);
    if (const Json* f = find(*cc, "grid")) {
      if (f->is_array()) {
        grid.clear();
        for (std::size_t i = 0; i < f->size(); ++i)
          grid.push_back(static_cast<int>(count((*f)[i], child(child(p, "grid"), i), 3)));
      } else {
        grid.assign(static_cast<std::size_t>(d), static_cast<int>(count(*f, child(p, "grid"), 3)));
      }
    }
    std::vector<double> scaled;
    for (double r_i : sides) scaled.push_back(opts.alpha * r_i);
    const auto box = at_pointer(p, [&] {
      return make_domain(d == 1 ? DomainKind::interval : DomainKind::orthotope, scaled, grid);
    });
    const Json* zj = find(*cc, "Z");
    if (!zj) throw ConfigError(child(p, "Z"), "required field missing");
    const auto z = parse_potential(box, *zj, child(p, "Z"));
    const std::size_t steps = optional_field(*cc, p, "count", std::size_t{10},
                                             [](const Json& j, const std::string& q) {
                                               return count(j, q, 1);
                                             });
    SnakeBijection fresh(d);
    const auto table = at_pointer(p, [&] {
      return consecutive_coupling_check(sides, grid, z, fresh, steps, opts);
    });
    r.report["consecutive_coupling"] = to_json(table);
    if (log) *log << "consecutive couplings all nonzero: " << table.all_nonzero << "\n";
  }
  r.csv = snake_csv(points);
  return r;
}

std::vector<double> parse_mu(const Json& j, const std::string& pointer) {
  if (j.is_array()) return numbers(j, pointer);
  check_keys(j, pointer, {"from", "to", "steps"});
  const Json* from = find(j, "from");
  const Json* to = find(j, "to");
  const Json* steps = find(j, "steps");
  if (!steps) throw ConfigError(child(pointer, "steps"), "required field missing");
  const double a = from ? number(*from, child(pointer, "from")) : 0.0;
  const double b = to ? number(*to, child(pointer, "to")) : 1.0;
  const std::size_t m = count(*steps, child(pointer, "steps"), 2);
  std::vector<double> out;
  for (std::size_t i = 0; i < m; ++i)
    out.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(m - 1));
  return out;
}

CommandResult run_homotopy(const Json& root, std::uint64_t seed, std::ostream* log) {
  check_keys(root, "",
             {"domain", "V_base", "V_target", "W", "mu", "levels", "tracked_pairs",
              "gap_tolerance", "coupling_threshold", "spectral", "seed"});
  const auto domain = parse_domain(root);
  auto need = [&](const char* key) -> const Json& {
    const Json* f = find(root, key);
    if (!f) throw ConfigError(child("", key), "required field missing");
    return *f;
  };
  const auto base = parse_potential(domain, need("V_base"), "/V_base");
  const auto target = parse_potential(domain, need("V_target"), "/V_target");
  const auto w = parse_potential(domain, need("W"), "/W");
  const auto mu = parse_mu(need("mu"), "/mu");

  HomotopyOptions opts;
  opts.eigen = parse_eigen(root);
  if (const Json* f = find(root, "levels")) opts.levels = count(*f, "/levels", 1);
  if (const Json* f = find(root, "tracked_pairs")) {
    array(*f, "/tracked_pairs");
    for (std::size_t i = 0; i < f->size(); ++i) {
      const auto pr = *pair_from((*f)[i], child("/tracked_pairs", i));
      if (pr.first > opts.levels || pr.second > opts.levels)
        throw ConfigError(child("/tracked_pairs", i), "level index exceeds levels");
      opts.tracked_pairs.push_back(pr);
    }
  } else if (opts.levels >= 2) {
    opts.tracked_pairs.emplace_back(1, 2);
  }
  if (const Json* f = find(root, "gap_tolerance")) opts.gap_tolerance = positive(*f, "/gap_tolerance");
  if (const Json* f = find(root, "coupling_threshold"))
    opts.coupling_threshold = positive(*f, "/coupling_threshold");
  if (log) *log << "homotopy: " << mu.size() << " samples\n";
  const auto report = homotopy_scan(domain, base, target, mu, w, opts);

  CommandResult r;
  r.report = envelope("homotopy", seed);
  r.report["domain"] = to_json(domain);
  r.report["levels"] = opts.levels;
  r.report["eigensolver"] = eigen_json(opts.eigen);
  merge(r.report, to_json(report));
  r.csv = homotopy_csv(report);
  return r;
}

CommandResult run_blowup(const Json& root, std::uint64_t seed, std::ostream* log) {
  check_keys(root, "",
             {"domain", "omega", "v", "V_bar", "k", "levels", "spectral", "seed"});
  const auto domain = parse_domain(root);
  const Json* oj = find(root, "omega");
  if (!oj) throw ConfigError("/omega", "required field missing");
  check_keys(*oj, "/omega", {"lower", "upper"});
  SubBox omega;
  if (!find(*oj, "lower")) throw ConfigError("/omega/lower", "required field missing");
  if (!find(*oj, "upper")) throw ConfigError("/omega/upper", "required field missing");
  omega.lower = numbers((*oj)["lower"], "/omega/lower");
  omega.upper = numbers((*oj)["upper"], "/omega/upper");
  const auto v = optional_field(root, "", "v", sample_potential(domain, "zero"),
                                [&](const Json& j, const std::string& p) {
                                  return parse_potential(domain, j, p);
                                });
  const auto v_bar = optional_field(root, "", "V_bar", sample_potential(domain, "zero"),
                                    [&](const Json& j, const std::string& p) {
                                      return parse_potential(domain, j, p);
                                    });
  const auto k = optional_field(root, "", "k", std::vector<double>{10.0, 1e2, 1e3, 1e4}, numbers);
  const std::size_t levels = optional_field(root, "", "levels", std::size_t{3},
                                            [](const Json& j, const std::string& p) {
                                              return count(j, p, 1);
                                            });
  const auto eigen = parse_eigen(root);
  if (log) *log << "blowup: " << k.size() << " levels of k\n";
  const auto report = at_pointer("/omega", [&] {
    return blowup_experiment(domain, omega, v, v_bar, k, levels, eigen);
  });

  CommandResult r;
  r.report = envelope("blowup", seed);
  r.report["domain"] = to_json(domain);
  r.report["v"] = v.label;
  r.report["V_bar"] = v_bar.label;
  r.report["eigensolver"] = eigen_json(eigen);
  merge(r.report, to_json(report));
  std::vector<double> first_errors, first_outside;
  for (const auto& row : report.rows) {
    first_errors.push_back(row.eigenvalue_errors.front());
    first_outside.push_back(row.outside_norms.front());
  }
  r.report["level_1_error_nonincreasing"] = nonincreasing(first_errors);
  r.report["level_1_outside_norm_nonincreasing"] = nonincreasing(first_outside);
  r.csv = blowup_csv(report);
  return r;
}

DensityMatrix parse_density(const Json& j, const std::string& pointer, std::size_t n) {
  if (j.is_string()) {
    if (j.get<std::string>() == "maximally_mixed") return DensityMatrix::maximally_mixed(n);
    throw ConfigError(pointer, "expected \"maximally_mixed\" or an object");
  }
  check_keys(j, pointer, {"pure", "weights", "states"});
  return at_pointer(pointer, [&]() -> DensityMatrix {
    if (const Json* f = find(j, "pure")) {
      const auto psi = parse_state(*f, child(pointer, "pure"));
      if (psi.size() != n) throw ConfigError(child(pointer, "pure"), "dimension mismatch");
      return DensityMatrix::pure(psi);
    }
    const Json* w = find(j, "weights");
    const Json* s = find(j, "states");
    if (!w || !s) throw ConfigError(pointer, "expected pure, or weights with states");
    const auto weights = numbers(*w, child(pointer, "weights"));
    std::vector<ComplexVector> states;
    for (std::size_t i = 0; i < array(*s, child(pointer, "states")).size(); ++i) {
      states.push_back(parse_state((*s)[i], child(child(pointer, "states"), i)));
      if (states.back().size() != n)
        throw ConfigError(child(child(pointer, "states"), i), "dimension mismatch");
    }
    if (weights.size() != states.size())
      throw ConfigError(child(pointer, "weights"), "one weight per state required");
    return DensityMatrix::mixture(weights, states);
  });
}

CommandResult run_simulate(const Json& root, std::uint64_t seed, std::ostream* log) {
  check_keys(root, "",
             {"system", "domain", "V", "W", "controls", "spectral", "psi0", "rho0", "target",
              "schedule", "sample_times", "seed"});
  const auto system = parse_system(root);
  const std::size_t n = system.size();
  const Json* sj = find(root, "schedule");
  if (!sj) throw ConfigError("/schedule", "required field missing");
  const auto schedule = parse_schedule(*sj, "/schedule");
  at_pointer("/schedule", [&] {
    schedule.validate(system.controls ? &*system.controls : nullptr);
    return 0;
  });
  if (log) *log << "simulate: n = " << n << ", " << schedule.segments.size() << " segments\n";

  CommandResult r;
  r.report = envelope("simulate", seed);
  r.report["n"] = n;
  r.report["drift"] = system.drift;
  r.report["schedule"] = to_json(schedule);
  r.report["total_time"] = schedule.total_time();
  const auto u = propagator(system, schedule);
  r.report["unitarity_defect"] = (u * u.adjoint()).max_distance(ComplexMatrix::identity(n));
  r.report["propagator"] = matrix_json(u);

  const Json* pj = find(root, "psi0");
  const Json* rj = find(root, "rho0");
  if (!pj && !rj) throw ConfigError("/psi0", "psi0 or rho0 required");
  if (pj) {
    const auto psi0 = parse_state(*pj, "/psi0");
    if (psi0.size() != n) throw ConfigError("/psi0", "dimension mismatch with the system");
    const auto psi = at_pointer("/psi0", [&] { return propagate_state(system, psi0, schedule); });
    r.report["psi_T"] = to_json(std::span<const Complex>(psi));
    r.report["norm_T"] = norm(psi);
    Json populations = Json::array();
    for (const auto& c : psi) populations.push_back(std::norm(c));
    r.report["populations_T"] = populations;
    if (const Json* tj = find(root, "target")) {
      const auto target = parse_state(*tj, "/target");
      if (target.size() != n) throw ConfigError("/target", "dimension mismatch with the system");
      const auto f = fidelity(psi, target);
      r.report["fidelity"] = {{"overlap", f.overlap}, {"distance", f.distance}};
    }
    if (const Json* tj = find(root, "sample_times")) {
      const auto times = numbers(*tj, "/sample_times");
      const auto states = at_pointer("/sample_times", [&] {
        return sample_trajectory(system, psi0, schedule, times);
      });
      r.csv = trajectory_csv(times, states);
    }
  }
  if (rj) {
    const auto rho0 = parse_density(*rj, "/rho0", n);
    const auto rho = propagate_density(system, rho0, schedule);
    r.report["rho_T"] = matrix_json(rho.matrix());
    r.report["rho0_eigenvalues"] = rho0.eigenvalues();
    r.report["rho_T_eigenvalues"] = rho.eigenvalues();
    Complex trace{};
    for (std::size_t i = 0; i < n; ++i) trace += rho.matrix()(i, i);
    r.report["rho_T_trace"] = {trace.real(), trace.imag()};
  }
  return r;
}

CommandResult run_search(const Json& root, std::uint64_t seed, unsigned threads,
                         std::ostream* log) {
  check_keys(root, "",
             {"system", "domain", "V", "W", "controls", "spectral", "psi0", "target", "budget",
              "window", "max_segments", "min_duration", "max_duration", "exploration", "batch",
              "target_fidelity", "sensitivity", "seed"});
  const auto system = parse_system(root);
  const std::size_t n = system.size();
  const Json* pj = find(root, "psi0");
  const Json* tj = find(root, "target");
  const auto psi0 = pj ? parse_state(*pj, "/psi0") : basis_state(n, 1);
  if (!tj) throw ConfigError("/target", "required field missing");
  const auto target = parse_state(*tj, "/target");
  if (psi0.size() != n) throw ConfigError("/psi0", "dimension mismatch with the system");
  if (target.size() != n) throw ConfigError("/target", "dimension mismatch with the system");

  SearchOptions opts;
  opts.seed = seed;
  opts.threads = threads;
  auto cnt = [](std::size_t minimum) {
    return [minimum](const Json& j, const std::string& p) { return count(j, p, minimum); };
  };
  opts.budget = optional_field(root, "", "budget", opts.budget, cnt(1));
  opts.max_segments = optional_field(root, "", "max_segments", opts.max_segments, cnt(1));
  opts.batch = optional_field(root, "", "batch", opts.batch, cnt(1));
  opts.min_duration = optional_field(root, "", "min_duration", opts.min_duration, positive);
  opts.max_duration = optional_field(root, "", "max_duration", opts.max_duration, positive);
  opts.exploration = optional_field(root, "", "exploration", opts.exploration, number);
  opts.target_fidelity = optional_field(root, "", "target_fidelity", opts.target_fidelity, number);
  if (opts.min_duration > opts.max_duration)
    throw ConfigError("/min_duration", "must not exceed max_duration");
  if (opts.exploration < 0.0 || opts.exploration > 1.0)
    throw ConfigError("/exploration", "must lie in [0, 1]");
  if (const Json* w = find(root, "window")) {
    const auto v = numbers(*w, "/window");
    if (v.size() != 2 || !(v[1] > v[0])) throw ConfigError("/window", "expected [lo, hi] with lo < hi");
    opts.window = std::make_pair(v[0], v[1]);
  }
  if (log) *log << "search: budget " << opts.budget << "\n";
  const auto result = at_pointer("/window", [&] {
    return search_transfer(system, psi0, target, opts);
  });

  CommandResult r;
  r.report = envelope("search", seed);
  r.report["n"] = n;
  r.report["drift"] = system.drift;
  r.report["options"] = {{"budget", opts.budget},
                         {"max_segments", opts.max_segments},
                         {"min_duration", opts.min_duration},
                         {"max_duration", opts.max_duration},
                         {"window", opts.window ? Json({opts.window->first, opts.window->second})
                                                : Json(nullptr)},
                         {"exploration", opts.exploration},
                         {"batch", opts.batch},
                         {"target_fidelity", opts.target_fidelity}};
  merge(r.report, to_json(result));
  const auto psi = propagate_state(system, psi0, result.best);
  r.report["psi_T"] = to_json(std::span<const Complex>(psi));
  r.csv = search_trace_csv(result);
  if (const Json* sj = find(root, "sensitivity")) {
    const Json* lv = find(*find(root, "system"), "levels");
    if (!lv) throw ConfigError("/sensitivity", "needs a system given by levels");
    std::vector<std::size_t> sizes;
    for (std::size_t i = 0; i < array(*sj, "/sensitivity").size(); ++i)
      sizes.push_back(count((*sj)[i], child("/sensitivity", i), 2));
    Json larger = root;
    larger["system"]["levels"] = std::max(n, *std::max_element(sizes.begin(), sizes.end()));
    const auto full = parse_system(larger);
    Json rows = Json::array();
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      const std::size_t m = sizes[i];
      auto embed = [&](const ComplexVector& v, const char* what) {
        for (std::size_t k = m; k < v.size(); ++k)
          if (v[k] != Complex(0.0))
            throw ConfigError(child("/sensitivity", i),
                              std::string(what) + " has weight above level " + std::to_string(m));
        ComplexVector out(m);
        std::copy_n(v.begin(), std::min(m, v.size()), out.begin());
        return out;
      };
      linalg::DenseMatrix c(m, m);
      for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < m; ++k) c(j, k) = full.coupling(j, k);
      const auto sub = make_truncated_system(
          std::vector<double>(full.drift.begin(), full.drift.begin() + static_cast<long>(m)), c);
      const auto psi_m = propagate_state(sub, embed(psi0, "psi0"), result.best);
      double leakage = 0.0;
      for (std::size_t k = n; k < m; ++k) leakage += std::norm(psi_m[k]);
      rows.push_back({{"levels", m},
                      {"fidelity", fidelity(embed(target, "target"), psi_m).overlap},
                      {"leakage", leakage}});
    }
    r.report["sensitivity"] = rows;
  }
  if (log) *log << "fidelity: " << format_double(result.fidelity) << "\n";
  return r;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

constexpr const char* kUsage =
    "usage: fit4control <certify|scan|snake|homotopy|blowup|simulate|search> [--config FILE]\n"
    "         [--out FILE(.json|.csv)] [--csv FILE] [--seed N] [--threads N] [--verbose]\n"
    "         [--d D --count N]  (snake only)\n";

}  // namespace

// ---------------------------------------------------------------------------

ComputationalDomain parse_domain(const Json& root, const std::string& pointer) {
  const Json* d = find(root, "domain");
  if (!d) throw ConfigError(pointer, "required field missing");
  check_keys(*d, pointer, {"kind", "sides", "grid", "truncation"});

  std::optional<TruncationBox> truncation;
  if (const Json* t = find(*d, "truncation")) {
    const auto p = child(pointer, "truncation");
    check_keys(*t, p, {"center", "half_width"});
    TruncationBox box;
    if (const Json* c = find(*t, "center")) box.center = numbers(*c, child(p, "center"));
    const Json* hw = find(*t, "half_width");
    if (!hw) throw ConfigError(child(p, "half_width"), "required field missing");
    box.half_width = positive(*hw, child(p, "half_width"));
    truncation = box;
  }

  std::vector<double> sides;
  if (const Json* s = find(*d, "sides")) {
    if (s->is_number()) sides = {positive(*s, child(pointer, "sides"))};
    else sides = numbers(*s, child(pointer, "sides"));
    for (std::size_t i = 0; i < sides.size(); ++i)
      if (!(sides[i] > 0.0)) throw ConfigError(child(child(pointer, "sides"), i), "must be positive");
  } else if (truncation) {
    const std::size_t dim = truncation->center.empty() ? 1 : truncation->center.size();
    sides.assign(dim, 2.0 * truncation->half_width);
  } else {
    throw ConfigError(child(pointer, "sides"), "required field missing");
  }
  if (sides.empty()) throw ConfigError(child(pointer, "sides"), "needs at least one side");

  std::vector<int> grid;
  if (const Json* g = find(*d, "grid")) {
    const auto p = child(pointer, "grid");
    if (g->is_array()) {
      for (std::size_t i = 0; i < g->size(); ++i)
        grid.push_back(static_cast<int>(count((*g)[i], child(p, i), 3)));
    } else {
      grid.assign(sides.size(), static_cast<int>(count(*g, p, 3)));
    }
  } else {
    grid.assign(sides.size(), sides.size() == 1 ? 2000 : 60);
  }

  DomainKind kind = truncation              ? DomainKind::truncated_confining
                    : sides.size() == 1     ? DomainKind::interval
                                            : DomainKind::orthotope;
  if (const Json* k = find(*d, "kind")) {
    const auto p = child(pointer, "kind");
    kind = at_pointer(p, [&] { return parse_domain_kind(text(*k, p)); });
  }
  return at_pointer(pointer, [&] { return make_domain(kind, sides, grid, truncation); });
}

Potential parse_potential(const ComputationalDomain& domain, const Json& config,
                          const std::string& pointer) {
  if (config.is_string()) {
    const auto form = config.get<std::string>();
    return at_pointer(pointer, [&] { return sample_potential(domain, form); });
  }
  check_keys(config, pointer, {"form", "values", "label"});
  if (const Json* f = find(config, "form")) {
    if (find(config, "values")) throw ConfigError(pointer, "give either form or values");
    const auto p = child(pointer, "form");
    const auto form = text(*f, p);
    auto v = at_pointer(p, [&] { return sample_potential(domain, form); });
    if (const Json* l = find(config, "label")) v.label = text(*l, child(pointer, "label"));
    return v;
  }
  const Json* values = find(config, "values");
  if (!values) throw ConfigError(pointer, "expected a form string, {form}, or {values}");
  Potential v;
  v.values = numbers(*values, child(pointer, "values"));
  if (v.values.size() != domain.size())
    throw ConfigError(child(pointer, "values"),
                      "expected " + std::to_string(domain.size()) + " grid values, got " +
                          std::to_string(v.values.size()));
  v.label = optional_field(config, pointer, "label", std::string("grid-values"), text);
  return v;
}

ControlSet parse_controls(const Json& root, const std::string& pointer) {
  const Json* c = find(root, "controls");
  if (!c) return ControlSet({ControlInterval{0.0, 1.0, true, false}}, 0.0, 1.0);
  check_keys(*c, pointer, {"intervals", "anchor", "delta"});
  std::vector<ControlInterval> intervals;
  if (const Json* list = find(*c, "intervals")) {
    const auto p = child(pointer, "intervals");
    for (std::size_t i = 0; i < array(*list, p).size(); ++i) {
      const auto& item = (*list)[i];
      const auto q = child(p, i);
      ControlInterval iv;
      if (item.is_array()) {
        if (item.size() != 2) throw ConfigError(q, "expected [lo, hi]");
        iv.lo = number(item[0], child(q, 0));
        iv.hi = number(item[1], child(q, 1));
      } else {
        check_keys(item, q, {"lo", "hi", "lo_closed", "hi_closed"});
        if (!find(item, "lo") || !find(item, "hi")) throw ConfigError(q, "lo and hi required");
        iv.lo = number(item["lo"], child(q, "lo"));
        iv.hi = number(item["hi"], child(q, "hi"));
        iv.lo_closed = optional_field(item, q, "lo_closed", true, boolean);
        iv.hi_closed = optional_field(item, q, "hi_closed", false, boolean);
      }
      if (!(iv.hi > iv.lo)) throw ConfigError(q, "interval must satisfy lo < hi");
      intervals.push_back(iv);
    }
  } else {
    intervals.push_back({0.0, 1.0, true, false});
  }
  const double anchor = optional_field(*c, pointer, "anchor", intervals.front().lo, number);
  const double delta = optional_field(*c, pointer, "delta", 1.0, positive);
  return at_pointer(pointer, [&] { return ControlSet(intervals, anchor, delta); });
}

FitCheckOptions parse_fit_options(const Json& root) {
  FitCheckOptions opts;
  if (const Json* r = find(root, "resonance")) {
    const std::string p = "/resonance";
    check_keys(*r, p, {"coeff_bound", "tolerance", "k_max", "exhaustive_max_count"});
    if (const Json* f = find(*r, "coeff_bound"))
      opts.relation.coeff_bound = static_cast<std::int64_t>(count(*f, child(p, "coeff_bound"), 1));
    if (const Json* f = find(*r, "tolerance"))
      opts.relation.tolerance = positive(*f, child(p, "tolerance"));
    if (const Json* f = find(*r, "k_max")) opts.k_max = count(*f, child(p, "k_max"), 1);
    if (const Json* f = find(*r, "exhaustive_max_count"))
      opts.relation.exhaustive_max_count = count(*f, child(p, "exhaustive_max_count"), 1);
  }
  if (const Json* c = find(root, "connectivity")) {
    const std::string p = "/connectivity";
    check_keys(*c, p,
               {"n_max", "tail_start", "relative_threshold", "ordering", "collar_fraction"});
    if (const Json* f = find(*c, "n_max")) opts.n_max = count(*f, child(p, "n_max"), 2);
    if (const Json* f = find(*c, "tail_start")) opts.tail_start = count(*f, child(p, "tail_start"), 2);
    if (opts.tail_start > opts.n_max)
      throw ConfigError(child(p, "tail_start"), "must not exceed n_max");
    if (const Json* f = find(*c, "relative_threshold"))
      opts.relative_threshold = positive(*f, child(p, "relative_threshold"));
    if (const Json* f = find(*c, "ordering")) {
      const auto q = child(p, "ordering");
      opts.ordering = at_pointer(q, [&] { return parse_ordering_choice(text(*f, q)); });
    }
    if (const Json* f = find(*c, "collar_fraction"))
      opts.collar_fraction = positive(*f, child(p, "collar_fraction"));
  }
  opts.eigen = parse_eigen(root);
  if (const Json* s = find(root, "spectral")) {
    const std::string p = "/spectral";
    if (const Json* f = find(*s, "levels")) opts.levels = count(*f, child(p, "levels"), 2);
    if (const Json* f = find(*s, "richardson")) opts.richardson = boolean(*f, child(p, "richardson"));
    if (const Json* f = find(*s, "simplicity_tolerance"))
      opts.simplicity_tolerance = positive(*f, child(p, "simplicity_tolerance"));
  }
  if (opts.levels && opts.levels < std::max(opts.k_max + 1, opts.n_max))
    throw ConfigError("/spectral/levels", "must cover k_max + 1 and n_max levels");
  return opts;
}

CertificationInput parse_certification(const Json& root, std::uint64_t seed) {
  require_object(root, "");
  auto domain = parse_domain(root);
  const Json* vj = find(root, "V");
  auto v = vj ? parse_potential(domain, *vj, "/V") : sample_potential(domain, "zero");
  const Json* wj = find(root, "W");
  if (!wj) throw ConfigError("/W", "required field missing");
  auto w = parse_potential(domain, *wj, "/W");
  auto controls = parse_controls(root);
  auto options = parse_fit_options(root);
  return CertificationInput{std::move(domain), std::move(v),       std::move(w),
                            std::move(controls), std::move(options), seed};
}

ComplexVector parse_state(const Json& config, const std::string& pointer) {
  ComplexVector out;
  for (std::size_t i = 0; i < array(config, pointer).size(); ++i) {
    const auto& e = config[i];
    const auto p = child(pointer, i);
    if (e.is_number()) {
      out.emplace_back(number(e, p), 0.0);
    } else if (e.is_array() && e.size() == 2) {
      out.emplace_back(number(e[0], child(p, 0)), number(e[1], child(p, 1)));
    } else {
      throw ConfigError(p, "expected a number or [re, im]");
    }
  }
  if (out.empty()) throw ConfigError(pointer, "state must be nonempty");
  const double nrm = norm(out);
  if (std::abs(nrm - 1.0) > 1e-12)
    throw ConfigError(pointer, "state must have unit norm (got " + format_double(nrm) + ")");
  return out;
}

ControlSchedule parse_schedule(const Json& config, const std::string& pointer) {
  ControlSchedule s;
  for (std::size_t i = 0; i < array(config, pointer).size(); ++i) {
    const auto& e = config[i];
    const auto p = child(pointer, i);
    check_keys(e, p, {"u", "t"});
    if (!find(e, "u")) throw ConfigError(child(p, "u"), "required field missing");
    if (!find(e, "t")) throw ConfigError(child(p, "t"), "required field missing");
    s.segments.push_back({number(e["u"], child(p, "u")), positive(e["t"], child(p, "t"))});
  }
  return s;
}

TruncatedSystem parse_system(const Json& root, const std::string& pointer) {
  const Json* sys = find(root, "system");
  if (!sys) throw ConfigError(pointer, "required field missing");
  check_keys(*sys, pointer, {"drift", "coupling", "levels"});
  std::optional<ControlSet> controls;
  if (find(root, "controls")) controls = parse_controls(root);

  if (const Json* lv = find(*sys, "levels")) {
    if (find(*sys, "drift") || find(*sys, "coupling"))
      throw ConfigError(pointer, "give either levels or drift with coupling");
    const std::size_t n = count(*lv, child(pointer, "levels"), 1);
    const auto domain = parse_domain(root);
    const Json* vj = find(root, "V");
    const auto v = vj ? parse_potential(domain, *vj, "/V") : sample_potential(domain, "zero");
    const Json* wj = find(root, "W");
    if (!wj) throw ConfigError("/W", "required field missing");
    const auto w = parse_potential(domain, *wj, "/W");
    const auto spec = solve_schrodinger(domain, v, n, parse_eigen(root));
    const auto b = at_pointer(pointer, [&] {
      return coupling_matrix(spec, w, identity_ordering(n), n);
    });
    linalg::DenseMatrix c(n, n);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = j; k < n; ++k) c(j, k) = c(k, j) = b(j, k);
    return at_pointer(pointer, [&] { return make_truncated_system(spec.eigenvalues, c, controls); });
  }

  const Json* dj = find(*sys, "drift");
  const Json* cj = find(*sys, "coupling");
  if (!dj) throw ConfigError(child(pointer, "drift"), "required field missing");
  if (!cj) throw ConfigError(child(pointer, "coupling"), "required field missing");
  const auto drift = numbers(*dj, child(pointer, "drift"));
  const std::size_t n = drift.size();
  const auto cp = child(pointer, "coupling");
  if (array(*cj, cp).size() != n) throw ConfigError(cp, "expected " + std::to_string(n) + " rows");
  linalg::DenseMatrix c(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = numbers((*cj)[i], child(cp, i));
    if (row.size() != n) throw ConfigError(child(cp, i), "expected " + std::to_string(n) + " entries");
    for (std::size_t k = 0; k < n; ++k) c(i, k) = row[k];
  }
  return at_pointer(pointer, [&] { return make_truncated_system(drift, c, controls); });
}

Json parse_config_text(const std::string& content) {
  try {
    return Json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
}

CommandResult execute(const std::string& command, const Json& config, std::uint64_t seed,
                      unsigned threads, std::ostream* log) {
  require_object(config, "");
  threads = std::max(1u, threads);
  if (command == "certify") return run_certify(config, seed, log);
  if (command == "scan") return run_scan(config, seed, threads, log);
  if (command == "snake") return run_snake(config, seed, log);
  if (command == "homotopy") return run_homotopy(config, seed, log);
  if (command == "blowup") return run_blowup(config, seed, log);
  if (command == "simulate") return run_simulate(config, seed, log);
  if (command == "search") return run_search(config, seed, threads, log);
  throw ConfigError("", "unknown command '" + command + "'");
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty() || args[0] == "--help" || args[0] == "-h") {
    (args.empty() ? err : out) << kUsage;
    return args.empty() ? exit_config : exit_ok;
  }
  const std::string command = args[0];
  const std::set<std::string> commands{"certify", "scan",     "snake", "homotopy",
                                       "blowup",  "simulate", "search"};
  if (!commands.count(command)) {
    err << "unknown command '" << command << "'\n" << kUsage;
    return exit_config;
  }

  std::optional<std::string> config_path, out_path, csv_path, seed_text, threads_text, d_text,
      count_text;
  bool verbose = false;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const auto& a = args[i];
    auto value = [&](std::optional<std::string>& slot) {
      if (i + 1 >= args.size()) throw ConfigError("", "option " + a + " needs a value");
      slot = args[++i];
    };
    try {
      if (a == "--config") value(config_path);
      else if (a == "--out") value(out_path);
      else if (a == "--csv") value(csv_path);
      else if (a == "--seed") value(seed_text);
      else if (a == "--threads") value(threads_text);
      else if (a == "--d" && command == "snake") value(d_text);
      else if (a == "--count" && command == "snake") value(count_text);
      else if (a == "--verbose" || a == "-v") verbose = true;
      else throw ConfigError("", "unknown option '" + a + "'");
    } catch (const ConfigError& e) {
      err << "error: " << e.reason() << "\n" << kUsage;
      return exit_config;
    }
  }

  auto parse_unsigned = [&](const std::string& s, const char* what) -> std::optional<std::uint64_t> {
    try {
      std::size_t used = 0;
      if (s.empty() || s[0] == '-') throw std::invalid_argument(s);
      const auto v = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      err << "error: " << what << " must be a nonnegative integer, got '" << s << "'\n";
      return std::nullopt;
    }
  };

  try {
    Json config = Json::object();
    if (config_path) {
      std::ifstream in(*config_path, std::ios::binary);
      if (!in) {
        err << "error: cannot read config " << *config_path << "\n";
        return exit_config;
      }
      std::stringstream buffer;
      buffer << in.rdbuf();
      config = parse_config_text(buffer.str());
    } else if (command != "snake") {
      err << "error: --config is required for " << command << "\n" << kUsage;
      return exit_config;
    }
    if (!config.is_object()) throw ConfigError("", "config must be a JSON object");

    if (d_text) {
      const auto v = parse_unsigned(*d_text, "--d");
      if (!v) return exit_config;
      config["d"] = *v;
    }
    if (count_text) {
      const auto v = parse_unsigned(*count_text, "--count");
      if (!v) return exit_config;
      config["count"] = *v;
    }

    std::uint64_t seed = 0;
    if (const Json* s = find(config, "seed")) seed = parse_seed(*s, "/seed");
    if (seed_text) {
      const auto v = parse_unsigned(*seed_text, "--seed");
      if (!v) return exit_config;
      seed = *v;
    }
    unsigned threads = 1;
    std::optional<std::string> threads_source = threads_text;
    if (!threads_source)
      if (const char* env = std::getenv("FIT4CONTROL_THREADS"); env && *env) threads_source = env;
    if (threads_source) {
      const auto v = parse_unsigned(*threads_source, "thread count");
      if (!v) return exit_config;
      threads = static_cast<unsigned>(std::clamp<std::uint64_t>(*v, 1, 1024));
    }

    const auto result = execute(command, config, seed, threads, verbose ? &err : nullptr);
    const bool csv_out = out_path && ends_with(*out_path, ".csv");
    const std::string body = csv_out ? result.csv : dump_json(result.report);
    if (out_path) write_atomic(*out_path, body);
    else out << body;
    if (csv_path) write_atomic(*csv_path, result.csv);
    return result.exit_code;
  } catch (const ConfigError& e) {
    err << "config error at " << (e.pointer().empty() ? "/" : e.pointer()) << ": " << e.reason()
        << "\n";
    return exit_config;
  } catch (const InvalidArgument& e) {
    err << "invalid input: " << e.what() << "\n";
    return exit_config;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return exit_numerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_io;
  }
}

}  // namespace fit4control
