#include "fit4control/galerkin.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "fit4control/errors.hpp"
#include "fit4control/random.hpp"

namespace fit4control {

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::operator*(const ComplexMatrix& other) const {
  if (n_ != other.n_) throw InvalidArgument("matrix size mismatch");
  ComplexMatrix out(n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = 0; k < n_; ++k) {
      const Complex a = (*this)(i, k);
      if (a == Complex{}) continue;
      for (std::size_t j = 0; j < n_; ++j) out(i, j) += a * other(k, j);
    }
  return out;
}

ComplexVector ComplexMatrix::operator*(std::span<const Complex> x) const {
  if (x.size() != n_) throw InvalidArgument("vector size mismatch");
  ComplexVector y(n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) y[i] += (*this)(i, j) * x[j];
  return y;
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix out(n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) out(i, j) = std::conj((*this)(j, i));
  return out;
}

double ComplexMatrix::max_distance(const ComplexMatrix& other) const {
  if (n_ != other.n_) throw InvalidArgument("matrix size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i)
    m = std::max(m, std::abs(data_[i] - other.data_[i]));
  return m;
}

std::vector<double> hermitian_eigenvalues(const ComplexMatrix& a) {
  const std::size_t n = a.size();
  linalg::DenseMatrix e(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      // Symmetrize so tiny non-Hermitian roundoff cannot break the solver.
      const Complex h = 0.5 * (a(i, j) + std::conj(a(j, i)));
      e(i, j) = h.real();
      e(i + n, j + n) = h.real();
      e(i, j + n) = -h.imag();
      e(i + n, j) = h.imag();
    }
  const auto eig = linalg::jacobi_eigen(std::move(e));
  std::vector<double> out;
  for (std::size_t k = 0; k < 2 * n; k += 2)
    out.push_back(0.5 * (eig.values[k] + eig.values[k + 1]));
  return out;
}

void TruncatedSystem::validate() const {
  const std::size_t n = drift.size();
  if (n == 0) throw InvalidArgument("truncated system needs at least one level");
  if (coupling.rows() != n || coupling.cols() != n)
    throw InvalidArgument("coupling matrix must be n x n");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(drift[i])) throw InvalidArgument("drift must be finite");
    if (i > 0 && drift[i] < drift[i - 1]) throw InvalidArgument("drift must be nondecreasing");
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::isfinite(coupling(i, j))) throw InvalidArgument("coupling must be finite");
      if (coupling(i, j) != coupling(j, i)) throw InvalidArgument("coupling must be symmetric");
    }
  }
}

TruncatedSystem make_truncated_system(std::vector<double> drift, linalg::DenseMatrix coupling,
                                      std::optional<ControlSet> controls) {
  TruncatedSystem s{std::move(drift), std::move(coupling), std::move(controls)};
  s.validate();
  return s;
}

double ControlSchedule::total_time() const {
  double t = 0.0;
  for (const auto& s : segments) t += s.duration;
  return t;
}

void ControlSchedule::validate(const ControlSet* controls) const {
  for (const auto& s : segments) {
    if (!(s.duration > 0.0) || !std::isfinite(s.duration))
      throw InvalidArgument("segment durations must be positive");
    if (!std::isfinite(s.u)) throw InvalidArgument("control values must be finite");
    if (controls && !controls->contains(s.u))
      throw InvalidArgument("control value " + std::to_string(s.u) + " lies outside U");
  }
}

ComplexMatrix segment_propagator(const TruncatedSystem& system, double u, double t) {
  const std::size_t n = system.size();
  linalg::DenseMatrix h = system.coupling;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h(i, j) *= u;
  for (std::size_t i = 0; i < n; ++i) h(i, i) += system.drift[i];
  const auto eig = linalg::jacobi_eigen(std::move(h));
  std::vector<Complex> phase(n);
  for (std::size_t k = 0; k < n; ++k) phase[k] = std::polar(1.0, -eig.values[k] * t);
  ComplexMatrix out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Complex s{};
      for (std::size_t k = 0; k < n; ++k) s += eig.vectors(i, k) * phase[k] * eig.vectors(j, k);
      out(i, j) = s;
    }
  return out;
}

ComplexMatrix propagator(const TruncatedSystem& system, const ControlSchedule& schedule) {
  schedule.validate();
  ComplexMatrix u = ComplexMatrix::identity(system.size());
  for (const auto& s : schedule.segments) u = segment_propagator(system, s.u, s.duration) * u;
  return u;
}

namespace {

void check_normalized(std::span<const Complex> psi, std::size_t n) {
  if (psi.size() != n) throw InvalidArgument("state dimension does not match the system");
  double norm2 = 0.0;
  for (const auto& c : psi) norm2 += std::norm(c);
  if (std::abs(std::sqrt(norm2) - 1.0) > 1e-12)
    throw InvalidArgument("initial state must have unit norm");
}

}  // namespace

ComplexVector propagate_state(const TruncatedSystem& system, std::span<const Complex> psi0,
                              const ControlSchedule& schedule) {
  check_normalized(psi0, system.size());
  schedule.validate();
  ComplexVector psi(psi0.begin(), psi0.end());
  for (const auto& s : schedule.segments) psi = segment_propagator(system, s.u, s.duration) * psi;
  return psi;
}

std::vector<ComplexVector> sample_trajectory(const TruncatedSystem& system,
                                             std::span<const Complex> psi0,
                                             const ControlSchedule& schedule,
                                             std::span<const double> times) {
  check_normalized(psi0, system.size());
  schedule.validate();
  const double total = schedule.total_time();
  for (std::size_t i = 0; i < times.size(); ++i)
    if (times[i] < 0.0 || times[i] > total || (i > 0 && times[i] < times[i - 1]))
      throw InvalidArgument("sample times must be sorted within [0, T]");
  std::vector<ComplexVector> out;
  ComplexVector psi(psi0.begin(), psi0.end());
  double start = 0.0;
  std::size_t next = 0;
  for (const auto& s : schedule.segments) {
    const double end = start + s.duration;
    while (next < times.size() && times[next] <= end) {
      out.push_back(segment_propagator(system, s.u, times[next] - start) * psi);
      ++next;
    }
    psi = segment_propagator(system, s.u, s.duration) * psi;
    start = end;
  }
  while (next < times.size()) {
    out.push_back(psi);
    ++next;
  }
  return out;
}

DensityMatrix::DensityMatrix(ComplexMatrix rho, std::vector<double> weights)
    : rho_(std::move(rho)), weights_(std::move(weights)) {
  validate();
}

DensityMatrix DensityMatrix::pure(std::span<const Complex> psi) {
  const std::size_t n = psi.size();
  ComplexMatrix rho(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) rho(i, j) = psi[i] * std::conj(psi[j]);
  return DensityMatrix(std::move(rho), {1.0});
}

DensityMatrix DensityMatrix::mixture(std::span<const double> weights,
                                     const std::vector<ComplexVector>& states) {
  if (weights.size() != states.size() || states.empty())
    throw InvalidArgument("mixture needs one weight per state");
  const std::size_t n = states.front().size();
  ComplexMatrix rho(n);
  for (std::size_t s = 0; s < states.size(); ++s) {
    if (states[s].size() != n) throw InvalidArgument("mixture states differ in dimension");
    if (weights[s] < 0.0) throw InvalidArgument("mixture weights must be nonnegative");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        rho(i, j) += weights[s] * states[s][i] * std::conj(states[s][j]);
  }
  return DensityMatrix(std::move(rho), {weights.begin(), weights.end()});
}

DensityMatrix DensityMatrix::maximally_mixed(std::size_t n) {
  ComplexMatrix rho(n);
  for (std::size_t i = 0; i < n; ++i) rho(i, i) = 1.0 / static_cast<double>(n);
  return DensityMatrix(std::move(rho), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

std::vector<double> DensityMatrix::eigenvalues() const { return hermitian_eigenvalues(rho_); }

void DensityMatrix::validate(double tol) const {
  const std::size_t n = rho_.size();
  if (n == 0) throw InvalidArgument("density matrix must be nonempty");
  Complex trace{};
  for (std::size_t i = 0; i < n; ++i) {
    trace += rho_(i, i);
    for (std::size_t j = 0; j < n; ++j)
      if (std::abs(rho_(i, j) - std::conj(rho_(j, i))) > tol)
        throw NumericalError("density matrix is not Hermitian");
  }
  if (std::abs(trace - Complex(1.0)) > tol) throw NumericalError("density matrix trace is not 1");
  const auto ev = eigenvalues();
  if (ev.front() < -tol) throw NumericalError("density matrix is not positive semidefinite");
}

DensityMatrix propagate_density(const TruncatedSystem& system, const DensityMatrix& rho0,
                                const ControlSchedule& schedule) {
  if (rho0.size() != system.size()) throw InvalidArgument("density dimension mismatch");
  const auto u = propagator(system, schedule);
  auto rho = u * rho0.matrix() * u.adjoint();
  DensityMatrix out = [&] {
    try {
      return DensityMatrix(std::move(rho), rho0.weights());
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("internal consistency: propagated ") + e.what());
    }
  }();
  return out;
}

StateFidelity fidelity(std::span<const Complex> a, std::span<const Complex> b) {
  if (a.size() != b.size()) throw InvalidArgument("state dimension mismatch");
  Complex inner{};
  double dist2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inner += std::conj(a[i]) * b[i];
    dist2 += std::norm(a[i] - b[i]);
  }
  return {std::min(1.0, std::norm(inner)), std::sqrt(dist2)};
}

DensityFidelity fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  const std::size_t n = a.size();
  if (b.size() != n) throw InvalidArgument("density dimension mismatch");
  DensityFidelity out;
  ComplexMatrix diff(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      out.overlap += (a.matrix()(i, j) * b.matrix()(j, i)).real();
      diff(i, j) = a.matrix()(i, j) - b.matrix()(i, j);
    }
  const auto ev = hermitian_eigenvalues(diff);
  out.operator_distance = std::max(std::abs(ev.front()), std::abs(ev.back()));
  return out;
}

double rabi_population(double omega, double b, double u, double t) {
  const double g = u * b;
  const double rabi = std::sqrt(0.25 * omega * omega + g * g);
  if (rabi == 0.0) return 0.0;
  const double s = std::sin(rabi * t);
  return g * g * s * s / (rabi * rabi);
}

ComplexVector rabi_state(double omega, double b, double u, double t) {
  const double g = u * b;
  const double rabi = std::sqrt(0.25 * omega * omega + g * g);
  const Complex global = std::polar(1.0, -0.5 * omega * t);
  if (rabi == 0.0) return {global, 0.0};
  const double c = std::cos(rabi * t), s = std::sin(rabi * t) / rabi;
  return {global * Complex(c, 0.5 * omega * s), global * Complex(0.0, -g * s)};
}

ComplexVector basis_state(std::size_t n, std::size_t index) {
  if (index < 1 || index > n) throw InvalidArgument("basis index outside 1..n");
  ComplexVector e(n);
  e[index - 1] = 1.0;
  return e;
}

namespace {

struct Window {
  double lo, hi;
  double clamp(double u) const { return std::clamp(u, lo, std::nextafter(hi, lo)); }
};

ControlSegment random_segment(Rng& rng, const Window& w, const SearchOptions& o) {
  const double t = std::exp(rng.uniform(std::log(o.min_duration), std::log(o.max_duration)));
  return {w.clamp(rng.uniform(w.lo, w.hi)), t};
}

ControlSchedule random_schedule(Rng& rng, const Window& w, const SearchOptions& o) {
  ControlSchedule s;
  const auto count =
      static_cast<std::size_t>(rng.integer(1, static_cast<std::int64_t>(o.max_segments)));
  for (std::size_t k = 0; k < count; ++k) s.segments.push_back(random_segment(rng, w, o));
  return s;
}

ControlSchedule mutate(const ControlSchedule& base, Rng& rng, const Window& w,
                       const SearchOptions& o) {
  ControlSchedule s = base;
  if (s.segments.empty()) return random_schedule(rng, w, o);
  const double scale = std::pow(10.0, rng.uniform(-3.0, 0.0));
  const auto pick = [&] {
    const auto last = static_cast<std::int64_t>(s.segments.size()) - 1;
    return static_cast<std::size_t>(rng.integer(0, last));
  };
  auto jitter = [&](ControlSegment& seg) {
    seg.u = w.clamp(seg.u + scale * (w.hi - w.lo) * rng.uniform(-1.0, 1.0));
    seg.duration = std::clamp(seg.duration * std::exp(scale * rng.uniform(-1.0, 1.0)),
                              o.min_duration, o.max_duration);
  };
  switch (rng.integer(0, 5)) {
    case 0: {
      auto& seg = s.segments[pick()];
      seg.u = w.clamp(seg.u + scale * (w.hi - w.lo) * rng.uniform(-1.0, 1.0));
      break;
    }
    case 1: {
      auto& seg = s.segments[pick()];
      seg.duration = std::clamp(seg.duration * std::exp(scale * rng.uniform(-1.0, 1.0)),
                                o.min_duration, o.max_duration);
      break;
    }
    case 2:
      if (s.segments.size() < o.max_segments)
        s.segments.insert(s.segments.begin() + rng.integer(0, static_cast<std::int64_t>(s.segments.size())),
                          random_segment(rng, w, o));
      else
        jitter(s.segments[pick()]);
      break;
    case 3:
      if (s.segments.size() > 1)
        s.segments.erase(s.segments.begin() + static_cast<std::ptrdiff_t>(pick()));
      else
        jitter(s.segments[0]);
      break;
    case 4: s.segments[pick()] = random_segment(rng, w, o); break;
    default:
      for (auto& seg : s.segments) jitter(seg);
      break;
  }
  return s;
}

}  // namespace

SearchResult search_transfer(const TruncatedSystem& system, std::span<const Complex> psi0,
                             std::span<const Complex> target, const SearchOptions& options) {
  system.validate();
  check_normalized(psi0, system.size());
  check_normalized(target, system.size());
  if (options.max_segments < 1) throw InvalidArgument("max_segments must be at least 1");
  if (!(options.min_duration > 0.0) || !(options.max_duration >= options.min_duration))
    throw InvalidArgument("duration range must be positive and ordered");
  Window window{};
  if (options.window) {
    window = {options.window->first, options.window->second};
  } else if (system.controls) {
    window = {system.controls->anchor(), system.controls->anchor() + system.controls->delta()};
  } else {
    throw InvalidArgument("search needs a value window or a control set");
  }
  if (!(window.hi > window.lo)) throw InvalidArgument("value window must be nonempty");

  auto evaluate = [&](const ControlSchedule& s) {
    return fidelity(target, propagate_state(system, psi0, s)).overlap;
  };

  SearchResult result;
  result.fidelity = evaluate(result.best);
  result.evaluated = 1;
  result.trace.push_back({0, result.fidelity});
  const std::size_t explore =
      static_cast<std::size_t>(options.exploration * static_cast<double>(options.budget));
  const std::size_t batch = std::max<std::size_t>(1, options.batch);
  const unsigned threads = std::max(1u, options.threads);

  while (result.evaluated < options.budget && result.fidelity < options.target_fidelity) {
    const std::size_t first = result.evaluated;
    const std::size_t count = std::min(batch, options.budget - first);
    std::vector<ControlSchedule> candidates(count);
    std::vector<double> scores(count, 0.0);
    const ControlSchedule incumbent = result.best;
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        const std::size_t index = first + i;
        Rng rng(derive_seed(options.seed, index));
        candidates[i] = index < explore || incumbent.segments.empty()
                            ? random_schedule(rng, window, options)
                            : mutate(incumbent, rng, window, options);
        scores[i] = evaluate(candidates[i]);
      }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < std::min<unsigned>(threads, static_cast<unsigned>(count)); ++t)
      pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    for (std::size_t i = 0; i < count; ++i)
      if (scores[i] > result.fidelity) {
        result.fidelity = scores[i];
        result.best = candidates[i];
        result.trace.push_back({first + i, scores[i]});
      }
    result.evaluated += count;
  }
  return result;
}

}  // namespace fit4control
