#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fit4control/domain.hpp"
#include "fit4control/linalg.hpp"

namespace fit4control {

/// Second-order finite-difference discretization of -Laplacian + V with
/// Dirichlet rows eliminated. For d >= 2 the Laplacian is kept as the
/// Kronecker sum of the per-axis (-1, 2, -1) / h^2 stencils and never
/// assembled.
class DiscreteOperator {
 public:
  DiscreteOperator(std::vector<int> grid_counts, std::vector<double> spacings,
                   std::vector<double> potential);

  int dimension() const noexcept { return static_cast<int>(grid_counts_.size()); }
  std::size_t size() const noexcept { return potential_.size(); }
  const std::vector<int>& grid_counts() const noexcept { return grid_counts_; }
  const std::vector<double>& spacings() const noexcept { return spacings_; }
  const std::vector<double>& potential() const noexcept { return potential_; }
  double cell_volume() const noexcept;

  /// y = A x
  void apply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> diagonal() const;
  /// Off-diagonal of the 1-D tridiagonal matrix; only valid for d = 1.
  std::vector<double> off_diagonal() const;
  linalg::DenseMatrix dense() const;
  /// Gershgorin bound on the spectral radius.
  double norm_bound() const;

 private:
  std::vector<int> grid_counts_;
  std::vector<double> spacings_;
  std::vector<double> potential_;
  std::vector<std::size_t> strides_;
};

struct DiscretizeOptions {
  std::size_t size_limit = 4'000'000;
};

DiscreteOperator discretize(const ComputationalDomain& domain, const Potential& potential,
                            const DiscretizeOptions& options = {});

/// V + u W on the same grid.
Potential shifted_potential(const Potential& v, const Potential& w, double u);

/// automatic: for d = 1 bisection when count <= n / 10, else tridiagonal
/// (full implicit-shift QL); for d >= 2 dense up to dense_limit, otherwise
/// davidson (block Davidson preconditioned by the exact inverse of the
/// shifted Laplacian part). Eigenvectors on the 1-D paths come from inverse
/// iteration.
enum class EigenMethod { automatic, tridiagonal, bisection, dense, lanczos, davidson };

struct EigensolveOptions {
  EigenMethod method = EigenMethod::automatic;
  /// Convergence target ||(A - lambda) v|| <= residual_tol * max(|lambda|, 1).
  double residual_tol = 1e-8;
  std::size_t dense_limit = 400;
  std::size_t block_size = 6;
  std::size_t max_basis = 0;  // 0 selects a size from the request
  int max_restarts = 400;
  int max_iterations = 3000;
};

/// The `count` smallest eigenpairs. Eigenfunctions are quadrature-normalized
/// and signed so that the first grid value of largest magnitude is positive.
SpectralDecomposition eigensolve(const DiscreteOperator& op, std::size_t count,
                                 const EigensolveOptions& options = {});

/// Convenience: discretize and solve.
SpectralDecomposition solve_schrodinger(const ComputationalDomain& domain,
                                        const Potential& potential, std::size_t count,
                                        const EigensolveOptions& options = {});

/// Box (0, alpha r_1) x ... x (0, alpha r_d) with V = 0.
struct BoxMode {
  std::vector<int> index;
  double eigenvalue = 0.0;
};

double box_eigenvalue(std::span<const double> sides, double alpha, std::span<const int> index);

/// The `count` lowest multi-indices, sorted by eigenvalue (ties keep
/// lexicographic order).
std::vector<BoxMode> lowest_box_modes(std::span<const double> sides, double alpha,
                                      std::size_t count);

struct AnalyticBoxSpectrum {
  SpectralDecomposition spectrum;
  /// indices[j] is the multi-index behind spectrum.eigenvalues[j].
  std::vector<std::vector<int>> indices;
};

/// Exact eigenvalues pi^2 sum k_i^2 / (alpha r_i)^2 for the requested
/// multi-indices, sorted, with the normalized products of sines sampled on
/// `grid_counts` interior nodes (no sampling when grid_counts is empty).
AnalyticBoxSpectrum box_spectrum_analytic(std::span<const double> sides, double alpha,
                                          std::span<const std::vector<int>> indices,
                                          std::span<const int> grid_counts = {});

double default_simplicity_tolerance(const SpectralDecomposition& spectrum);

/// 1-based indices j with min(lambda_j - lambda_{j-1}, lambda_{j+1} - lambda_j)
/// above `tolerance` (missing neighbours count as infinitely far).
std::vector<std::size_t> simplicity_check(const SpectralDecomposition& spectrum, double tolerance);

/// Fixes the sign so the first component of (nearly) largest magnitude is
/// positive.
void normalize_sign(std::span<double> f);

}  // namespace fit4control
