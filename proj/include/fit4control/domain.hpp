#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fit4control {

enum class DomainKind { interval, orthotope, truncated_confining };

std::string to_string(DomainKind kind);
DomainKind parse_domain_kind(const std::string& text);

/// Stand-in box for an unbounded domain: the cube of half-width
/// `half_width` around `center`.
struct TruncationBox {
  std::vector<double> center;
  double half_width = 0.0;
};

/// Bounded box with a uniform tensor grid of interior nodes. Boundary nodes
/// carry the Dirichlet condition and are not stored: axis i has
/// grid_counts[i] unknowns at spacing sides[i] / (grid_counts[i] + 1).
///
/// Flattened grid arrays are row-major, the last axis varying fastest.
class ComputationalDomain {
 public:
  ComputationalDomain(DomainKind kind, std::vector<double> sides, std::vector<int> grid_counts,
                      std::optional<TruncationBox> truncation);

  DomainKind kind() const noexcept { return kind_; }
  int dimension() const noexcept { return static_cast<int>(sides_.size()); }
  const std::vector<double>& sides() const noexcept { return sides_; }
  const std::vector<int>& grid_counts() const noexcept { return grid_counts_; }
  const std::optional<TruncationBox>& truncation() const noexcept { return truncation_; }

  /// Total number of interior nodes.
  std::size_t size() const noexcept { return size_; }
  double spacing(int axis) const { return sides_.at(axis) / (grid_counts_.at(axis) + 1); }
  double lower(int axis) const;
  double upper(int axis) const { return lower(axis) + sides_.at(axis); }
  double coordinate(int axis, int index) const { return lower(axis) + (index + 1) * spacing(axis); }
  /// Midpoint-rule weight shared by every node.
  double cell_volume() const noexcept;

  std::vector<int> unravel(std::size_t flat) const;
  std::size_t ravel(std::span<const int> index) const;
  /// Coordinates of the node with flat index `flat`.
  void node(std::size_t flat, std::span<double> x) const;

  /// True when the node lies in the outer collar of relative width `fraction`
  /// along some axis.
  bool in_collar(std::size_t flat, double fraction) const;

 private:
  DomainKind kind_;
  std::vector<double> sides_;
  std::vector<int> grid_counts_;
  std::optional<TruncationBox> truncation_;
  std::size_t size_ = 0;
};

ComputationalDomain make_domain(DomainKind kind, std::vector<double> sides,
                                std::vector<int> grid_counts,
                                std::optional<TruncationBox> truncation = std::nullopt);

/// Grid-sampled real potential.
struct Potential {
  std::vector<double> values;
  std::string label;
  std::optional<std::string> analytic_form;
};

using PotentialCallback = std::function<double(std::span<const double>)>;

/// Samples one of the named analytic forms:
///   zero
///   constant(c=...)
///   linear-x                      first coordinate
///   linear(axis=i, slope=s, offset=c)
///   product-xy                    x_1 * x_2
///   harmonic(omega=w)             w^2 |x - center|^2
///   indicator(a=..., b=...)       1 on a <= x_1 <= b, else 0
///   well(a=..., b=..., inside=..., outside=...)
///   random-piecewise-linear(seed=s, amp=A, knots=m)
/// The random form sums one independent piecewise-linear profile per axis,
/// each with `knots` equispaced knots valued uniformly in [0, A].
Potential sample_potential(const ComputationalDomain& domain, const std::string& analytic_form);
Potential sample_potential(const ComputationalDomain& domain, const PotentialCallback& callback,
                           std::string label);

/// Union of real intervals together with an anchor u such that
/// [u, u + delta) lies in the union.
struct ControlInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_closed = true;
  bool hi_closed = false;
};

class ControlSet {
 public:
  ControlSet(std::vector<ControlInterval> intervals, double anchor, double delta);

  const std::vector<ControlInterval>& intervals() const noexcept { return intervals_; }
  double anchor() const noexcept { return anchor_; }
  double delta() const noexcept { return delta_; }

  bool contains(double u) const;
  /// True when [u, u + delta) is a subset of the set.
  bool contains_window(double u, double delta) const;

 private:
  std::vector<ControlInterval> intervals_;
  double anchor_;
  double delta_;
};

/// Leading eigenpairs of -Laplacian + V on a grid. Eigenfunctions are
/// normalized for the grid quadrature sum_i w_i f_i g_i.
struct SpectralDecomposition {
  std::vector<double> eigenvalues;
  std::vector<std::vector<double>> eigenfunctions;
  std::vector<double> quadrature_weights;
  std::vector<double> simplicity_gaps;
  /// Relative Rayleigh residuals ||(A - lambda) v|| / max(|lambda|, 1).
  std::vector<double> residuals;
  std::vector<int> grid_shape;

  std::size_t count() const noexcept { return eigenvalues.size(); }
  double inner(std::span<const double> f, std::span<const double> g) const;
  /// Largest |<phi_j, phi_k> - delta_jk|.
  double orthonormality_defect() const;
  /// Throws NumericalError when eigenvalues decrease or the orthonormality
  /// defect exceeds `tolerance`.
  void validate(double tolerance) const;
};

double default_orthonormality_tolerance(int dimension);

enum class ResonanceStatus { resonant, no_relation_found, exact_nonresonant };

std::string to_string(ResonanceStatus status);

/// Outcome of an integer-relation test on a family of reals.
struct ResonanceVerdict {
  ResonanceStatus status = ResonanceStatus::no_relation_found;
  /// Integer (gcd-reduced, first nonzero entry positive) relation vector.
  std::optional<std::vector<std::int64_t>> witness;
  std::int64_t search_bound = 0;
  double tolerance = 0.0;
  /// Number of leading values the verdict covers.
  std::size_t tested_count = 0;
  /// |sum q_i mu_i| of the witness, when one exists.
  double residual = 0.0;
};

}  // namespace fit4control
