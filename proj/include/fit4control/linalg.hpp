#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fit4control::linalg {

/// Row-major dense real matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::vector<double> column(std::size_t j) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Eigenvalues in ascending order; column j of `vectors` is the unit
/// eigenvector for values[j].
struct SymmetricEigen {
  std::vector<double> values;
  DenseMatrix vectors;
};

/// Cyclic Jacobi rotations on a dense symmetric matrix.
SymmetricEigen jacobi_eigen(DenseMatrix a, double tolerance = 1e-15, int max_sweeps = 100);

/// Householder tridiagonalization followed by implicit-shift QL.
SymmetricEigen householder_ql_eigen(DenseMatrix a);

/// All eigenvalues (ascending) of the symmetric tridiagonal matrix with the
/// given diagonal and off-diagonal, by implicit-shift QL without vectors.
std::vector<double> tridiagonal_eigenvalues(std::span<const double> diagonal,
                                            std::span<const double> off_diagonal);

/// The `count` smallest eigenvalues (ascending) by Sturm-sequence bisection.
std::vector<double> tridiagonal_lowest_eigenvalues(std::span<const double> diagonal,
                                                   std::span<const double> off_diagonal,
                                                   std::size_t count);

/// Unit eigenvectors for the requested eigenvalues of a symmetric tridiagonal
/// matrix, by inverse iteration on a pivoted LU factorization. Vectors whose
/// eigenvalues sit within a relative cluster width are orthogonalized
/// against each other.
std::vector<std::vector<double>> tridiagonal_eigenvectors(std::span<const double> diagonal,
                                                          std::span<const double> off_diagonal,
                                                          std::span<const double> eigenvalues);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace fit4control::linalg
