#include "fit4control/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fit4control/errors.hpp"
#include "fit4control/random.hpp"

namespace fit4control::linalg {

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<double> DenseMatrix::column(std::size_t j) const {
  std::vector<double> c(rows_);
  for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

namespace {

SymmetricEigen sorted(std::vector<double> values, const DenseMatrix& vectors) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  SymmetricEigen out;
  out.values.resize(n);
  out.vectors = DenseMatrix(vectors.rows(), n);
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = values[order[j]];
    for (std::size_t i = 0; i < vectors.rows(); ++i) out.vectors(i, j) = vectors(i, order[j]);
  }
  return out;
}

/// Implicit-shift QL on d (diagonal) and e (e[i] couples i and i+1,
/// e[n-1] unused). Rotations are accumulated into the columns of z when
/// given.
void tql(std::vector<double>& d, std::vector<double>& e, DenseMatrix* z) {
  const std::size_t n = d.size();
  if (n == 0) return;
  e.resize(n);
  e[n - 1] = 0.0;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr int max_iterations = 60;

  for (std::size_t l = 0; l < n; ++l) {
    int iteration = 0;
    std::size_t m;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (iteration++ == max_iterations)
          throw NumericalError("tridiagonal QL did not converge for eigenvalue " +
                               std::to_string(l + 1));
        // Wilkinson-type shift from the leading 2x2 block.
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        bool underflow = false;
        for (std::size_t i = m; i-- > l;) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          if (z) {
            for (std::size_t k = 0; k < z->rows(); ++k) {
              f = (*z)(k, i + 1);
              (*z)(k, i + 1) = s * (*z)(k, i) + c * f;
              (*z)(k, i) = c * (*z)(k, i) - s * f;
            }
          }
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

}  // namespace

SymmetricEigen jacobi_eigen(DenseMatrix a, double tolerance, int max_sweeps) {
  const std::size_t n = a.rows();
  if (n != a.cols()) throw InvalidArgument("jacobi_eigen needs a square matrix");
  DenseMatrix v = DenseMatrix::identity(n);

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) total += a(i, j) * a(i, j);
  const double floor = tolerance * tolerance * total;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * a(p, q) * a(p, q);
    if (off <= floor || off == 0.0) {
      std::vector<double> values(n);
      for (std::size_t i = 0; i < n; ++i) values[i] = a(i, i);
      return sorted(std::move(values), v);
    }
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::hypot(t, 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  throw NumericalError("Jacobi eigensolver did not converge in " + std::to_string(max_sweeps) +
                       " sweeps");
}

SymmetricEigen householder_ql_eigen(DenseMatrix a) {
  const std::size_t n = a.rows();
  if (n != a.cols()) throw InvalidArgument("householder_ql_eigen needs a square matrix");
  if (n == 0) return {};
  std::vector<double> d(n, 0.0), e(n, 0.0);

  // Householder reduction; the transform is accumulated in place.
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t l = i - 1;
    double h = 0.0;
    if (l > 0) {
      double scale = 0.0;
      for (std::size_t k = 0; k <= l; ++k) scale += std::abs(a(i, k));
      if (scale == 0.0) {
        e[i] = a(i, l);
      } else {
        for (std::size_t k = 0; k <= l; ++k) {
          a(i, k) /= scale;
          h += a(i, k) * a(i, k);
        }
        double f = a(i, l);
        double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        a(i, l) = f - g;
        f = 0.0;
        for (std::size_t j = 0; j <= l; ++j) {
          a(j, i) = a(i, j) / h;
          g = 0.0;
          for (std::size_t k = 0; k <= j; ++k) g += a(j, k) * a(i, k);
          for (std::size_t k = j + 1; k <= l; ++k) g += a(k, j) * a(i, k);
          e[j] = g / h;
          f += e[j] * a(i, j);
        }
        const double hh = f / (h + h);
        for (std::size_t j = 0; j <= l; ++j) {
          f = a(i, j);
          e[j] = g = e[j] - hh * f;
          for (std::size_t k = 0; k <= j; ++k) a(j, k) -= (f * e[k] + g * a(i, k));
        }
      }
    } else {
      e[i] = a(i, l);
    }
    d[i] = h;
  }
  d[0] = 0.0;
  e[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] != 0.0) {
      for (std::size_t j = 0; j < i; ++j) {
        double g = 0.0;
        for (std::size_t k = 0; k < i; ++k) g += a(i, k) * a(k, j);
        for (std::size_t k = 0; k < i; ++k) a(k, j) -= g * a(k, i);
      }
    }
    d[i] = a(i, i);
    a(i, i) = 1.0;
    for (std::size_t j = 0; j < i; ++j) a(j, i) = a(i, j) = 0.0;
  }
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  tql(d, e, &a);
  return sorted(std::move(d), a);
}

std::vector<double> tridiagonal_eigenvalues(std::span<const double> diagonal,
                                            std::span<const double> off_diagonal) {
  if (off_diagonal.size() + 1 != diagonal.size() && !diagonal.empty())
    throw InvalidArgument("tridiagonal: off-diagonal must have n-1 entries");
  std::vector<double> d(diagonal.begin(), diagonal.end());
  std::vector<double> e(off_diagonal.begin(), off_diagonal.end());
  tql(d, e, nullptr);
  std::sort(d.begin(), d.end());
  return d;
}

namespace {

/// Number of eigenvalues below x (LDL^T inertia).
std::size_t sturm_count(std::span<const double> d, std::span<const double> e, double x,
                        double pivmin) {
  std::size_t negative = 0;
  double q = d[0] - x;
  for (std::size_t i = 0;; ++i) {
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0.0) ++negative;
    if (i + 1 == d.size()) break;
    q = d[i + 1] - x - e[i] * e[i] / q;
  }
  return negative;
}

}  // namespace

std::vector<double> tridiagonal_lowest_eigenvalues(std::span<const double> diagonal,
                                                   std::span<const double> off_diagonal,
                                                   std::size_t count) {
  const std::size_t n = diagonal.size();
  if (n == 0 || off_diagonal.size() + 1 != n)
    throw InvalidArgument("tridiagonal: off-diagonal must have n-1 entries");
  if (count > n) throw InvalidArgument("tridiagonal: more eigenvalues requested than exist");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double emax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(off_diagonal[i - 1]) : 0.0) +
                     (i + 1 < n ? std::abs(off_diagonal[i]) : 0.0);
    lo = std::min(lo, diagonal[i] - r);
    hi = std::max(hi, diagonal[i] + r);
    if (i + 1 < n) emax = std::max(emax, std::abs(off_diagonal[i]));
  }
  const double eps = std::numeric_limits<double>::epsilon();
  const double scale = std::max(std::abs(lo), std::abs(hi));
  const double pivmin = std::numeric_limits<double>::min() * std::max(1.0, emax * emax);
  lo -= 2.0 * eps * scale + pivmin;
  hi += 2.0 * eps * scale + pivmin;

  std::vector<double> values(count);
  double floor = lo;
  for (std::size_t k = 0; k < count; ++k) {
    // Find x with exactly k eigenvalues below and at least k + 1 below-or-at.
    double a = floor, b = hi;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      if (b - a <= 2.0 * eps * std::max(std::abs(a), std::abs(b)) + pivmin || mid == a ||
          mid == b)
        break;
      if (sturm_count(diagonal, off_diagonal, mid, pivmin) > k) b = mid;
      else a = mid;
    }
    values[k] = 0.5 * (a + b);
    floor = a;
  }
  return values;
}

namespace {

/// Pivoted LU of a tridiagonal matrix, LAPACK gttrf layout.
struct TridiagonalLU {
  std::vector<double> lower, diag, upper, upper2;
  std::vector<bool> swapped;

  TridiagonalLU(std::span<const double> d, std::span<const double> off, double shift,
                double tiny) {
    const std::size_t n = d.size();
    lower.assign(off.begin(), off.end());
    upper.assign(off.begin(), off.end());
    diag.resize(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = d[i] - shift;
    upper2.assign(n > 2 ? n - 2 : 0, 0.0);
    swapped.assign(n > 1 ? n - 1 : 0, false);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (std::abs(diag[i]) >= std::abs(lower[i])) {
        if (diag[i] == 0.0) diag[i] = tiny;
        const double fact = lower[i] / diag[i];
        lower[i] = fact;
        diag[i + 1] -= fact * upper[i];
      } else {
        const double fact = diag[i] / lower[i];
        diag[i] = lower[i];
        lower[i] = fact;
        const double temp = upper[i];
        upper[i] = diag[i + 1];
        diag[i + 1] = temp - fact * diag[i + 1];
        if (i + 2 < n) {
          upper2[i] = upper[i + 1];
          upper[i + 1] = -fact * upper[i + 1];
        }
        swapped[i] = true;
      }
    }
    for (auto& v : diag)
      if (std::abs(v) < tiny) v = std::copysign(tiny, v == 0.0 ? 1.0 : v);
  }

  void solve(std::vector<double>& b) const {
    const std::size_t n = diag.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!swapped[i]) {
        b[i + 1] -= lower[i] * b[i];
      } else {
        const double temp = b[i];
        b[i] = b[i + 1];
        b[i + 1] = temp - lower[i] * b[i];
      }
    }
    b[n - 1] /= diag[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - upper[n - 2] * b[n - 1]) / diag[n - 2];
    for (std::size_t i = n >= 2 ? n - 2 : 0; i-- > 0;)
      b[i] = (b[i] - upper[i] * b[i + 1] - upper2[i] * b[i + 2]) / diag[i];
  }
};

}  // namespace

std::vector<std::vector<double>> tridiagonal_eigenvectors(std::span<const double> diagonal,
                                                          std::span<const double> off_diagonal,
                                                          std::span<const double> eigenvalues) {
  const std::size_t n = diagonal.size();
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = std::abs(diagonal[i]);
    if (i > 0) row += std::abs(off_diagonal[i - 1]);
    if (i + 1 < n) row += std::abs(off_diagonal[i]);
    scale = std::max(scale, row);
  }
  const double eps = std::numeric_limits<double>::epsilon();
  const double tiny = std::max(eps * scale, std::numeric_limits<double>::min());
  const double cluster = 1e-3 * std::max(scale, 1.0);

  std::vector<std::vector<double>> vectors;
  vectors.reserve(eigenvalues.size());
  for (std::size_t j = 0; j < eigenvalues.size(); ++j) {
    const double lambda = eigenvalues[j];
    const TridiagonalLU lu(diagonal, off_diagonal, lambda, tiny);
    Rng rng(derive_seed(0x5eed, j));
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    for (int iteration = 0; iteration < 3; ++iteration) {
      lu.solve(x);
      for (std::size_t k = 0; k < j; ++k) {
        if (std::abs(eigenvalues[k] - lambda) > cluster) continue;
        axpy(-dot(vectors[k], x), vectors[k], x);
      }
      const double nx = norm(x);
      if (!(nx > 0.0) || !std::isfinite(nx))
        throw NumericalError("inverse iteration broke down for eigenvalue " +
                             std::to_string(j + 1));
      for (auto& v : x) v /= nx;
    }
    vectors.push_back(std::move(x));
  }
  return vectors;
}

}  // namespace fit4control::linalg
