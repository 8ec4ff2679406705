#include "fit4control/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "fit4control/errors.hpp"
#include "fit4control/random.hpp"

namespace fit4control {

using linalg::DenseMatrix;

DiscreteOperator::DiscreteOperator(std::vector<int> grid_counts, std::vector<double> spacings,
                                   std::vector<double> potential)
    : grid_counts_(std::move(grid_counts)),
      spacings_(std::move(spacings)),
      potential_(std::move(potential)) {
  if (grid_counts_.empty() || grid_counts_.size() != spacings_.size())
    throw InvalidArgument("operator: grid counts and spacings must match");
  std::size_t total = 1;
  for (int n : grid_counts_) total *= static_cast<std::size_t>(n);
  if (total != potential_.size())
    throw InvalidArgument("operator: potential has " + std::to_string(potential_.size()) +
                          " values for a grid of " + std::to_string(total) + " nodes");
  strides_.assign(grid_counts_.size(), 1);
  for (std::size_t axis = grid_counts_.size() - 1; axis-- > 0;)
    strides_[axis] = strides_[axis + 1] * static_cast<std::size_t>(grid_counts_[axis + 1]);
}

double DiscreteOperator::cell_volume() const noexcept {
  double v = 1.0;
  for (double h : spacings_) v *= h;
  return v;
}

void DiscreteOperator::apply(std::span<const double> x, std::span<double> y) const {
  const std::size_t n = size();
  double center = 0.0;
  for (double h : spacings_) center += 2.0 / (h * h);
  for (std::size_t i = 0; i < n; ++i) y[i] = (center + potential_[i]) * x[i];
  for (std::size_t axis = 0; axis < grid_counts_.size(); ++axis) {
    const double c = 1.0 / (spacings_[axis] * spacings_[axis]);
    const std::size_t stride = strides_[axis];
    const std::size_t line = stride * static_cast<std::size_t>(grid_counts_[axis]);
    for (std::size_t base = 0; base < n; base += line) {
      for (std::size_t i = base; i < base + line - stride; ++i) {
        y[i] -= c * x[i + stride];
        y[i + stride] -= c * x[i];
      }
    }
  }
}

std::vector<double> DiscreteOperator::diagonal() const {
  double center = 0.0;
  for (double h : spacings_) center += 2.0 / (h * h);
  std::vector<double> d(potential_);
  for (auto& v : d) v += center;
  return d;
}

std::vector<double> DiscreteOperator::off_diagonal() const {
  if (dimension() != 1) throw InvalidArgument("off_diagonal is only defined for 1-D operators");
  return std::vector<double>(size() - 1, -1.0 / (spacings_[0] * spacings_[0]));
}

DenseMatrix DiscreteOperator::dense() const {
  const std::size_t n = size();
  DenseMatrix a(n, n);
  std::vector<double> e(n, 0.0), col(n);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    apply(e, col);
    e[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) a(i, j) = col[i];
  }
  return a;
}

double DiscreteOperator::norm_bound() const {
  double lap = 0.0;
  for (double h : spacings_) lap += 4.0 / (h * h);
  double vmax = 0.0;
  for (double v : potential_) vmax = std::max(vmax, std::abs(v));
  return lap + vmax;
}

DiscreteOperator discretize(const ComputationalDomain& domain, const Potential& potential,
                            const DiscretizeOptions& options) {
  if (domain.size() > options.size_limit)
    throw InvalidArgument("grid of " + std::to_string(domain.size()) +
                          " nodes exceeds the configured limit " +
                          std::to_string(options.size_limit));
  if (potential.values.size() != domain.size())
    throw InvalidArgument("potential '" + potential.label + "' does not match the grid");
  std::vector<double> h(static_cast<std::size_t>(domain.dimension()));
  for (int i = 0; i < domain.dimension(); ++i) h[i] = domain.spacing(i);
  return DiscreteOperator(domain.grid_counts(), std::move(h), potential.values);
}

Potential shifted_potential(const Potential& v, const Potential& w, double u) {
  if (v.values.size() != w.values.size()) throw InvalidArgument("potentials differ in shape");
  Potential out;
  out.values.resize(v.values.size());
  for (std::size_t i = 0; i < v.values.size(); ++i) out.values[i] = v.values[i] + u * w.values[i];
  out.label = u == 0.0 ? v.label : v.label + " + (" + std::to_string(u) + ")*" + w.label;
  return out;
}

void normalize_sign(std::span<double> f) {
  double peak = 0.0;
  for (double v : f) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return;
  for (double v : f) {
    if (std::abs(v) >= (1.0 - 1e-6) * peak) {
      if (v < 0.0)
        for (auto& x : f) x = -x;
      return;
    }
  }
}

namespace {

struct RawEigenpairs {
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;  // Euclidean unit vectors
};

RawEigenpairs solve_tridiagonal(const DiscreteOperator& op, std::size_t count) {
  const auto d = op.diagonal();
  const auto e = op.off_diagonal();
  auto all = linalg::tridiagonal_eigenvalues(d, e);
  all.resize(count);
  auto vectors = linalg::tridiagonal_eigenvectors(d, e, all);
  return {std::move(all), std::move(vectors)};
}

RawEigenpairs solve_bisection(const DiscreteOperator& op, std::size_t count) {
  const auto d = op.diagonal();
  const auto e = op.off_diagonal();
  auto values = linalg::tridiagonal_lowest_eigenvalues(d, e, count);
  auto vectors = linalg::tridiagonal_eigenvectors(d, e, values);
  return {std::move(values), std::move(vectors)};
}

RawEigenpairs solve_dense(const DiscreteOperator& op, std::size_t count) {
  const auto eig = linalg::householder_ql_eigen(op.dense());
  RawEigenpairs out;
  for (std::size_t j = 0; j < count; ++j) {
    out.values.push_back(eig.values[j]);
    out.vectors.push_back(eig.vectors.column(j));
  }
  return out;
}

/// Orthogonalizes x against `basis` (two passes) and returns the norm left.
double orthogonalize(std::vector<double>& x, const std::vector<std::vector<double>>& basis) {
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& v : basis) linalg::axpy(-linalg::dot(v, x), v, x);
  return linalg::norm(x);
}

/// Starting block: discrete sine modes of the box (exact eigenvectors of the
/// Laplacian part) lightly perturbed by seeded noise.
std::vector<std::vector<double>> starting_block(const DiscreteOperator& op, std::size_t count) {
  const auto& counts = op.grid_counts();
  std::vector<double> unit_sides(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) unit_sides[i] = op.spacings()[i] * (counts[i] + 1);
  const auto modes = lowest_box_modes(unit_sides, 1.0, count);
  const std::size_t n = op.size();
  Rng rng(0xb10c);
  std::vector<std::vector<double>> block;
  std::vector<int> node(counts.size());
  for (const auto& mode : modes) {
    std::vector<double> x(n);
    for (std::size_t flat = 0; flat < n; ++flat) {
      std::size_t rest = flat;
      double value = 1.0;
      for (std::size_t axis = counts.size(); axis-- > 0;) {
        const int i = static_cast<int>(rest % counts[axis]);
        rest /= counts[axis];
        if (mode.index[axis] > counts[axis]) {
          value = 0.0;
          break;
        }
        value *= std::sin(std::numbers::pi * mode.index[axis] * (i + 1) / (counts[axis] + 1.0));
      }
      x[flat] = value + 1e-3 * rng.uniform(-1.0, 1.0);
    }
    block.push_back(std::move(x));
  }
  return block;
}

/// Thick-restart block Lanczos with full reorthogonalization. The projected
/// matrix V^T A V is formed explicitly, so restarts keep Ritz vectors
/// exactly and residuals are measured directly.
RawEigenpairs solve_lanczos(const DiscreteOperator& op, std::size_t count,
                            const EigensolveOptions& options) {
  const std::size_t n = op.size();
  const std::size_t b = std::max<std::size_t>(1, std::min(options.block_size, n));
  std::size_t max_basis = options.max_basis;
  if (max_basis == 0) max_basis = std::max<std::size_t>(3 * count + 6 * b, 80);
  max_basis = std::min(max_basis, n);
  const std::size_t keep = std::min(max_basis > b ? max_basis - b : 1, count + 2 * b);
  if (keep < count) throw InvalidArgument("Krylov basis too small for the requested count");

  std::vector<std::vector<double>> basis, images;
  DenseMatrix h(max_basis + b, max_basis + b);
  const double breakdown = 1e-10;

  auto append = [&](std::vector<double> x) {
    const double before = linalg::norm(x);
    const double after = orthogonalize(x, basis);
    if (!(after > breakdown * before) || basis.size() >= max_basis) return false;
    for (auto& v : x) v /= after;
    std::vector<double> ax(n);
    op.apply(x, ax);
    const std::size_t m = basis.size();
    for (std::size_t i = 0; i < m; ++i) {
      const double hij = linalg::dot(basis[i], ax);
      h(i, m) = hij;
      h(m, i) = hij;
    }
    h(m, m) = linalg::dot(x, ax);
    basis.push_back(std::move(x));
    images.push_back(std::move(ax));
    return true;
  };

  for (auto& x : starting_block(op, std::min(keep, n))) append(std::move(x));
  Rng rng(0x1a2c05);
  while (basis.size() < std::min(count + b, max_basis)) {
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    append(std::move(x));
  }

  std::vector<double> residual_norms(count, 0.0);
  for (int restart = 0; restart <= options.max_restarts; ++restart) {
    // Expand with A applied to the newest block until the basis is full.
    std::size_t block_start = basis.size() >= b ? basis.size() - b : 0;
    while (basis.size() + b <= max_basis) {
      const std::size_t block_end = basis.size();
      std::size_t added = 0;
      for (std::size_t j = block_start; j < block_end; ++j) added += append(images[j]) ? 1 : 0;
      for (std::size_t fill = 0; added < b && fill < 4 * b; ++fill) {
        std::vector<double> x(n);
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        added += append(std::move(x)) ? 1 : 0;
      }
      if (added == 0) break;
      block_start = block_end;
    }

    const std::size_t m = basis.size();
    DenseMatrix projected(m, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) projected(i, j) = h(i, j);
    const auto ritz = linalg::householder_ql_eigen(std::move(projected));

    const std::size_t wanted = std::min(keep, m);
    std::vector<std::vector<double>> vectors(wanted, std::vector<double>(n, 0.0));
    std::vector<std::vector<double>> avectors(wanted, std::vector<double>(n, 0.0));
    for (std::size_t k = 0; k < wanted; ++k)
      for (std::size_t i = 0; i < m; ++i) {
        const double y = ritz.vectors(i, k);
        linalg::axpy(y, basis[i], vectors[k]);
        linalg::axpy(y, images[i], avectors[k]);
      }

    bool converged = true;
    std::vector<std::vector<double>> residuals;
    for (std::size_t k = 0; k < wanted; ++k) {
      std::vector<double> r = avectors[k];
      linalg::axpy(-ritz.values[k], vectors[k], r);
      const double rn = linalg::norm(r) / std::max(std::abs(ritz.values[k]), 1.0);
      if (k < count) {
        residual_norms[k] = rn;
        if (rn > options.residual_tol) converged = false;
      }
      if (rn > options.residual_tol && residuals.size() < b) residuals.push_back(std::move(r));
    }
    if (converged || m == n) {
      RawEigenpairs out;
      for (std::size_t k = 0; k < count; ++k) {
        out.values.push_back(ritz.values[k]);
        const double nv = linalg::norm(vectors[k]);
        for (auto& v : vectors[k]) v /= nv;
        out.vectors.push_back(std::move(vectors[k]));
      }
      return out;
    }

    // Thick restart: the kept Ritz vectors diagonalize the projection.
    basis = std::move(vectors);
    images = std::move(avectors);
    h = DenseMatrix(max_basis + b, max_basis + b);
    for (std::size_t k = 0; k < wanted; ++k) h(k, k) = ritz.values[k];
    for (auto& r : residuals) append(std::move(r));
  }
  throw NumericalError("Lanczos did not converge after " + std::to_string(options.max_restarts) +
                           " restarts",
                       residual_norms);
}

/// Exact inverse of (Laplacian part + shift) in the discrete sine basis,
/// applied axis by axis. The sine matrix is symmetric and orthogonal.
class LaplacianPreconditioner {
 public:
  LaplacianPreconditioner(const DiscreteOperator& op, double shift)
      : counts_(op.grid_counts()), n_(op.size()) {
    const std::size_t d = counts_.size();
    strides_.assign(d, 1);
    for (std::size_t axis = d - 1; axis-- > 0;)
      strides_[axis] = strides_[axis + 1] * static_cast<std::size_t>(counts_[axis + 1]);
    std::vector<std::vector<double>> mu(d);
    for (std::size_t axis = 0; axis < d; ++axis) {
      const int m = counts_[axis];
      const double h = op.spacings()[axis];
      DenseMatrix q(m, m);
      const double c = std::sqrt(2.0 / (m + 1.0));
      for (int i = 0; i < m; ++i)
        for (int k = 0; k < m; ++k)
          q(i, k) = c * std::sin(std::numbers::pi * (i + 1.0) * (k + 1.0) / (m + 1.0));
      sines_.push_back(std::move(q));
      mu[axis].resize(m);
      for (int k = 0; k < m; ++k) {
        const double s = std::sin(std::numbers::pi * (k + 1.0) / (2.0 * (m + 1.0)));
        mu[axis][k] = 4.0 * s * s / (h * h);
      }
    }
    inverse_.resize(n_);
    for (std::size_t flat = 0; flat < n_; ++flat) {
      std::size_t rest = flat;
      double total = shift;
      for (std::size_t axis = d; axis-- > 0;) {
        total += mu[axis][rest % static_cast<std::size_t>(counts_[axis])];
        rest /= static_cast<std::size_t>(counts_[axis]);
      }
      inverse_[flat] = 1.0 / total;
    }
  }

  void apply(std::vector<double>& x) const {
    transform(x);
    for (std::size_t i = 0; i < n_; ++i) x[i] *= inverse_[i];
    transform(x);
  }

 private:
  void transform(std::vector<double>& x) const {
    std::vector<double> line, out;
    for (std::size_t axis = 0; axis < counts_.size(); ++axis) {
      const std::size_t m = static_cast<std::size_t>(counts_[axis]);
      const std::size_t stride = strides_[axis];
      const std::size_t block = stride * m;
      line.resize(m);
      out.resize(m);
      const DenseMatrix& q = sines_[axis];
      for (std::size_t base = 0; base < n_; base += block)
        for (std::size_t j = 0; j < stride; ++j) {
          for (std::size_t i = 0; i < m; ++i) line[i] = x[base + j + i * stride];
          for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            const auto row = q.row(i);
            for (std::size_t k = 0; k < m; ++k) s += row[k] * line[k];
            out[i] = s;
          }
          for (std::size_t i = 0; i < m; ++i) x[base + j + i * stride] = out[i];
        }
    }
  }

  std::vector<int> counts_;
  std::size_t n_;
  std::vector<std::size_t> strides_;
  std::vector<DenseMatrix> sines_;
  std::vector<double> inverse_;
};

/// Block Davidson with thick restart. Corrections are preconditioned
/// residuals; the projection V^T A V is kept explicitly.
RawEigenpairs solve_davidson(const DiscreteOperator& op, std::size_t count,
                             const EigensolveOptions& options) {
  const std::size_t n = op.size();
  const std::size_t b = std::max<std::size_t>(1, std::min(options.block_size, n));
  std::size_t max_basis = options.max_basis;
  if (max_basis == 0) max_basis = std::max<std::size_t>(2 * count + 4 * b, 40);
  max_basis = std::min(max_basis, n);
  const std::size_t keep = std::min(max_basis > b ? max_basis - b : 1, count + b);
  if (keep < count) throw InvalidArgument("search space too small for the requested count");

  double mean_v = 0.0;
  for (double v : op.potential()) mean_v += v;
  mean_v /= static_cast<double>(n);
  double lap_min = 0.0;
  for (std::size_t axis = 0; axis < op.grid_counts().size(); ++axis) {
    const double s = std::sin(std::numbers::pi / (2.0 * (op.grid_counts()[axis] + 1.0)));
    lap_min += 4.0 * s * s / (op.spacings()[axis] * op.spacings()[axis]);
  }
  const LaplacianPreconditioner precondition(op, std::max(mean_v, -0.5 * lap_min));

  std::vector<std::vector<double>> basis, images;
  std::vector<double> h;  // row-major max_basis x max_basis
  h.assign(max_basis * max_basis, 0.0);
  const double breakdown = 1e-10;

  auto append = [&](std::vector<double> x) {
    if (basis.size() >= max_basis) return false;
    const double before = linalg::norm(x);
    if (!(before > 0.0)) return false;
    const double after = orthogonalize(x, basis);
    if (!(after > breakdown * before)) return false;
    for (auto& v : x) v /= after;
    std::vector<double> ax(n);
    op.apply(x, ax);
    const std::size_t m = basis.size();
    for (std::size_t i = 0; i < m; ++i) {
      const double hij = linalg::dot(basis[i], ax);
      h[i * max_basis + m] = hij;
      h[m * max_basis + i] = hij;
    }
    h[m * max_basis + m] = linalg::dot(x, ax);
    basis.push_back(std::move(x));
    images.push_back(std::move(ax));
    return true;
  };

  Rng rng(0xda71d5);
  for (auto& x : starting_block(op, std::min(keep, n))) append(std::move(x));
  while (basis.size() < std::min(count, max_basis)) {
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    append(std::move(x));
  }

  std::vector<double> residual_norms(count, 0.0);
  for (int iteration = 0; iteration < options.max_iterations; ++iteration) {
    const std::size_t m = basis.size();
    DenseMatrix projected(m, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) projected(i, j) = h[i * max_basis + j];
    const auto ritz = linalg::householder_ql_eigen(std::move(projected));

    auto combine = [&](const std::vector<std::vector<double>>& from, std::size_t k) {
      std::vector<double> out(n, 0.0);
      for (std::size_t i = 0; i < m; ++i) linalg::axpy(ritz.vectors(i, k), from[i], out);
      return out;
    };

    bool converged = true;
    std::vector<std::vector<double>> corrections;
    for (std::size_t k = 0; k < std::min(count, m); ++k) {
      if (corrections.size() >= b && !converged) {
        residual_norms[k] = std::numeric_limits<double>::infinity();
        continue;
      }
      std::vector<double> r = combine(images, k);
      linalg::axpy(-ritz.values[k], combine(basis, k), r);
      const double rn = linalg::norm(r) / std::max(std::abs(ritz.values[k]), 1.0);
      residual_norms[k] = rn;
      if (rn > options.residual_tol) {
        converged = false;
        precondition.apply(r);
        corrections.push_back(std::move(r));
      }
    }
    if (converged && m >= count) {
      RawEigenpairs out;
      for (std::size_t k = 0; k < count; ++k) {
        auto v = combine(basis, k);
        const double nv = linalg::norm(v);
        for (auto& x : v) x /= nv;
        out.values.push_back(ritz.values[k]);
        out.vectors.push_back(std::move(v));
      }
      return out;
    }

    if (m + corrections.size() > max_basis) {
      const std::size_t wanted = std::min(keep, m);
      std::vector<std::vector<double>> vectors, avectors;
      for (std::size_t k = 0; k < wanted; ++k) {
        vectors.push_back(combine(basis, k));
        avectors.push_back(combine(images, k));
      }
      basis = std::move(vectors);
      images = std::move(avectors);
      std::fill(h.begin(), h.end(), 0.0);
      for (std::size_t k = 0; k < wanted; ++k) h[k * max_basis + k] = ritz.values[k];
    }
    std::size_t added = 0;
    for (auto& c : corrections) added += append(std::move(c)) ? 1 : 0;
    if (added == 0) {
      std::vector<double> x(n);
      for (auto& v : x) v = rng.uniform(-1.0, 1.0);
      if (!append(std::move(x))) break;
    }
  }
  throw NumericalError("Davidson iteration did not converge after " +
                           std::to_string(options.max_iterations) + " iterations",
                       residual_norms);
}

}  // namespace

SpectralDecomposition eigensolve(const DiscreteOperator& op, std::size_t count,
                                 const EigensolveOptions& options) {
  const std::size_t n = op.size();
  if (count == 0 || count > n)
    throw InvalidArgument("eigensolve: requested " + std::to_string(count) +
                          " eigenpairs from a matrix of size " + std::to_string(n));

  EigenMethod method = options.method;
  if (method == EigenMethod::automatic) {
    if (op.dimension() == 1)
      method = 10 * count <= n ? EigenMethod::bisection : EigenMethod::tridiagonal;
    else if (n <= options.dense_limit) method = EigenMethod::dense;
    else method = EigenMethod::davidson;
  }
  if ((method == EigenMethod::tridiagonal || method == EigenMethod::bisection) &&
      op.dimension() != 1)
    throw InvalidArgument("tridiagonal path requires a 1-D operator");

  RawEigenpairs raw;
  switch (method) {
    case EigenMethod::tridiagonal: raw = solve_tridiagonal(op, count); break;
    case EigenMethod::bisection: raw = solve_bisection(op, count); break;
    case EigenMethod::dense: raw = solve_dense(op, count); break;
    case EigenMethod::lanczos: raw = solve_lanczos(op, count, options); break;
    default: raw = solve_davidson(op, count, options); break;
  }

  SpectralDecomposition spec;
  spec.grid_shape = op.grid_counts();
  const double w = op.cell_volume();
  spec.quadrature_weights.assign(n, w);
  spec.eigenvalues = raw.values;
  std::vector<double> ax(n);
  for (std::size_t j = 0; j < count; ++j) {
    auto& v = raw.vectors[j];
    op.apply(v, ax);
    linalg::axpy(-raw.values[j], v, ax);
    spec.residuals.push_back(linalg::norm(ax) / std::max(std::abs(raw.values[j]), 1.0));
    normalize_sign(v);
    const double scale = 1.0 / std::sqrt(w);
    for (auto& x : v) x *= scale;
    spec.eigenfunctions.push_back(std::move(v));
  }
  for (std::size_t j = 1; j < count; ++j)
    spec.simplicity_gaps.push_back(spec.eigenvalues[j] - spec.eigenvalues[j - 1]);

  std::vector<double> bad;
  for (double r : spec.residuals)
    if (r > options.residual_tol) bad.push_back(r);
  if (!bad.empty())
    throw NumericalError("eigenpairs above residual tolerance", spec.residuals);
  return spec;
}

SpectralDecomposition solve_schrodinger(const ComputationalDomain& domain,
                                        const Potential& potential, std::size_t count,
                                        const EigensolveOptions& options) {
  return eigensolve(discretize(domain, potential), count, options);
}

double box_eigenvalue(std::span<const double> sides, double alpha, std::span<const int> index) {
  double s = 0.0;
  for (std::size_t i = 0; i < sides.size(); ++i) {
    const double k = index[i];
    const double l = alpha * sides[i];
    s += k * k / (l * l);
  }
  return std::numbers::pi * std::numbers::pi * s;
}

std::vector<BoxMode> lowest_box_modes(std::span<const double> sides, double alpha,
                                      std::size_t count) {
  if (sides.empty()) throw InvalidArgument("box needs at least one side");
  if (!(alpha > 0.0)) throw InvalidArgument("box scaling must be positive");
  for (double s : sides)
    if (!(s > 0.0)) throw InvalidArgument("box sides must be positive");
  const std::size_t d = sides.size();
  std::vector<int> all_ones(d, 1);
  if (count == 0) return {};

  // Grow a cap on the eigenvalue until it admits `count` modes.
  double cap = box_eigenvalue(sides, alpha, all_ones);
  std::vector<BoxMode> modes;
  for (;;) {
    modes.clear();
    std::vector<int> limit(d);
    for (std::size_t i = 0; i < d; ++i)
      limit[i] = static_cast<int>(std::sqrt(cap) * alpha * sides[i] / std::numbers::pi) + 1;
    std::vector<int> k(d, 1);
    for (;;) {
      const double lambda = box_eigenvalue(sides, alpha, k);
      if (lambda <= cap) modes.push_back({k, lambda});
      std::size_t axis = d;
      while (axis-- > 0) {
        if (++k[axis] <= limit[axis]) break;
        k[axis] = 1;
      }
      if (axis == static_cast<std::size_t>(-1)) break;
    }
    if (modes.size() >= count) break;
    cap *= 2.0;
  }
  std::stable_sort(modes.begin(), modes.end(),
                   [](const BoxMode& a, const BoxMode& b) { return a.eigenvalue < b.eigenvalue; });
  modes.resize(count);
  return modes;
}

AnalyticBoxSpectrum box_spectrum_analytic(std::span<const double> sides, double alpha,
                                          std::span<const std::vector<int>> indices,
                                          std::span<const int> grid_counts) {
  if (!(alpha > 0.0)) throw InvalidArgument("box scaling must be positive");
  const std::size_t d = sides.size();
  if (d == 0) throw InvalidArgument("box needs at least one side");
  for (double s : sides)
    if (!(s > 0.0)) throw InvalidArgument("box sides must be positive");
  for (const auto& k : indices) {
    if (k.size() != d) throw InvalidArgument("multi-index dimension mismatch");
    for (int ki : k)
      if (ki < 1) throw InvalidArgument("multi-index entries must be positive");
  }
  if (!grid_counts.empty() && grid_counts.size() != d)
    throw InvalidArgument("grid counts dimension mismatch");

  std::vector<std::size_t> order(indices.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> lambdas(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j)
    lambdas[j] = box_eigenvalue(sides, alpha, indices[j]);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lambdas[a] < lambdas[b]; });

  AnalyticBoxSpectrum out;
  double volume = 1.0;
  for (double s : sides) volume *= alpha * s;
  const double amplitude = std::pow(2.0, 0.5 * static_cast<double>(d)) / std::sqrt(volume);

  std::size_t nodes = 0;
  double cell = 1.0;
  if (!grid_counts.empty()) {
    nodes = 1;
    for (std::size_t i = 0; i < d; ++i) {
      nodes *= static_cast<std::size_t>(grid_counts[i]);
      cell *= alpha * sides[i] / (grid_counts[i] + 1);
    }
    out.spectrum.grid_shape.assign(grid_counts.begin(), grid_counts.end());
    out.spectrum.quadrature_weights.assign(nodes, cell);
  }

  for (std::size_t j : order) {
    out.spectrum.eigenvalues.push_back(lambdas[j]);
    out.indices.push_back(indices[j]);
    out.spectrum.residuals.push_back(0.0);
    if (nodes == 0) continue;
    std::vector<double> f(nodes);
    for (std::size_t flat = 0; flat < nodes; ++flat) {
      std::size_t rest = flat;
      double value = amplitude;
      for (std::size_t axis = d; axis-- > 0;) {
        const int i = static_cast<int>(rest % static_cast<std::size_t>(grid_counts[axis]));
        rest /= static_cast<std::size_t>(grid_counts[axis]);
        // x_i = (i + 1) h with h = alpha r / (N + 1)
        value *= std::sin(std::numbers::pi * indices[j][axis] * (i + 1.0) /
                          (grid_counts[axis] + 1.0));
      }
      f[flat] = value;
    }
    out.spectrum.eigenfunctions.push_back(std::move(f));
  }
  for (std::size_t j = 1; j < out.spectrum.eigenvalues.size(); ++j)
    out.spectrum.simplicity_gaps.push_back(out.spectrum.eigenvalues[j] -
                                           out.spectrum.eigenvalues[j - 1]);
  return out;
}

double default_simplicity_tolerance(const SpectralDecomposition& spectrum) {
  const double top = spectrum.eigenvalues.empty() ? 0.0 : std::abs(spectrum.eigenvalues.back());
  return 1e-6 * std::max(1.0, top);
}

std::vector<std::size_t> simplicity_check(const SpectralDecomposition& spectrum, double tolerance) {
  const auto& l = spectrum.eigenvalues;
  std::vector<std::size_t> simple;
  for (std::size_t j = 0; j < l.size(); ++j) {
    double gap = std::numeric_limits<double>::infinity();
    if (j > 0) gap = std::min(gap, l[j] - l[j - 1]);
    if (j + 1 < l.size()) gap = std::min(gap, l[j + 1] - l[j]);
    if (gap > tolerance) simple.push_back(j + 1);
  }
  return simple;
}

}  // namespace fit4control
