#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fit4control/domain.hpp"
#include "fit4control/linalg.hpp"

namespace fit4control {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

/// Square complex matrix, row-major.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  explicit ComplexMatrix(std::size_t n) : n_(n), data_(n * n) {}
  static ComplexMatrix identity(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  Complex& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  Complex operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

  ComplexMatrix operator*(const ComplexMatrix& other) const;
  ComplexVector operator*(std::span<const Complex> x) const;
  ComplexMatrix adjoint() const;
  /// max |a_ij - b_ij|
  double max_distance(const ComplexMatrix& other) const;

 private:
  std::size_t n_ = 0;
  std::vector<Complex> data_;
};

/// Eigenvalues (ascending) of a Hermitian matrix, via the real symmetric
/// embedding [[Re, -Im], [Im, Re]].
std::vector<double> hermitian_eigenvalues(const ComplexMatrix& a);

struct TruncatedSystem {
  std::vector<double> drift;   // lambda_1..lambda_n
  linalg::DenseMatrix coupling;  // B, real symmetric
  std::optional<ControlSet> controls;

  std::size_t size() const noexcept { return drift.size(); }
  void validate() const;
};

/// Drift from the first n eigenvalues and B from the given coupling entries.
TruncatedSystem make_truncated_system(std::vector<double> drift, linalg::DenseMatrix coupling,
                                      std::optional<ControlSet> controls = std::nullopt);

struct ControlSegment {
  double u = 0.0;
  double duration = 0.0;
};

struct ControlSchedule {
  std::vector<ControlSegment> segments;

  double total_time() const;
  /// Durations positive; values in `controls` when given.
  void validate(const ControlSet* controls = nullptr) const;
};

/// exp(-i t (Lambda + u B)) by diagonalizing the real symmetric generator.
ComplexMatrix segment_propagator(const TruncatedSystem& system, double u, double t);
/// Product of segment propagators in schedule order (first segment acts first).
ComplexMatrix propagator(const TruncatedSystem& system, const ControlSchedule& schedule);

ComplexVector propagate_state(const TruncatedSystem& system, std::span<const Complex> psi0,
                              const ControlSchedule& schedule);

/// States at the requested times (sorted, within [0, T]).
std::vector<ComplexVector> sample_trajectory(const TruncatedSystem& system,
                                             std::span<const Complex> psi0,
                                             const ControlSchedule& schedule,
                                             std::span<const double> times);

class DensityMatrix {
 public:
  explicit DensityMatrix(ComplexMatrix rho, std::vector<double> weights = {});
  static DensityMatrix pure(std::span<const Complex> psi);
  /// sum_j P_j psi_j psi_j^*
  static DensityMatrix mixture(std::span<const double> weights,
                               const std::vector<ComplexVector>& states);
  static DensityMatrix maximally_mixed(std::size_t n);

  const ComplexMatrix& matrix() const noexcept { return rho_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return rho_.size(); }
  std::vector<double> eigenvalues() const;
  /// Hermitian to `tol`, min eigenvalue >= -tol, |trace - 1| <= tol.
  /// Throws NumericalError otherwise.
  void validate(double tol = 1e-12) const;

 private:
  ComplexMatrix rho_;
  std::vector<double> weights_;
};

DensityMatrix propagate_density(const TruncatedSystem& system, const DensityMatrix& rho0,
                                const ControlSchedule& schedule);

struct StateFidelity {
  double overlap = 0.0;   // |<a, b>|^2
  double distance = 0.0;  // ||a - b||
};

StateFidelity fidelity(std::span<const Complex> a, std::span<const Complex> b);

struct DensityFidelity {
  double overlap = 0.0;            // Re tr(rho sigma)
  double operator_distance = 0.0;  // spectral norm of rho - sigma
};

DensityFidelity fidelity(const DensityMatrix& a, const DensityMatrix& b);

/// Population of e_2 for Lambda = diag(0, omega), B = b offdiag, constant u,
/// starting from e_1.
double rabi_population(double omega, double b, double u, double t);
/// Closed-form exp(-i t (Lambda + u B)) e_1 for the same two-level system.
ComplexVector rabi_state(double omega, double b, double u, double t);

struct SearchOptions {
  std::size_t budget = 10000;
  std::uint64_t seed = 0;
  std::size_t max_segments = 8;
  double min_duration = 0.01;
  double max_duration = 100.0;
  /// Values are drawn from [lo, hi); unset selects the anchor window of the
  /// system's control set.
  std::optional<std::pair<double, double>> window;
  /// Share of the budget spent on independent random candidates before
  /// hill climbing.
  double exploration = 0.3;
  std::size_t batch = 64;
  double target_fidelity = 0.9999;
  unsigned threads = 1;
};

struct SearchTracePoint {
  std::size_t candidate = 0;
  double fidelity = 0.0;
};

struct SearchResult {
  ControlSchedule best;
  double fidelity = 0.0;
  std::size_t evaluated = 0;
  std::vector<SearchTracePoint> trace;
};

/// Seeded random search followed by greedy perturbation of the incumbent.
/// Candidates are generated from per-index seeds and reduced by
/// (fidelity, index), so the result does not depend on the thread count.
SearchResult search_transfer(const TruncatedSystem& system, std::span<const Complex> psi0,
                             std::span<const Complex> target, const SearchOptions& options = {});

ComplexVector basis_state(std::size_t n, std::size_t index);

}  // namespace fit4control
