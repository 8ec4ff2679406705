#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "fit4control/domain.hpp"

namespace fit4control {

/// lambda_{k+1} - lambda_k for k = 1..N-1.
std::vector<double> gap_sequence(const SpectralDecomposition& spectrum);
std::vector<double> gap_sequence(std::span<const double> eigenvalues);

struct RelationSearchOptions {
  std::int64_t coeff_bound = 50;
  double tolerance = 1e-9;
  /// Largest prefix length searched by enumeration (when coeff_bound also
  /// stays within exhaustive_bound); longer prefixes use lattice reduction.
  std::size_t exhaustive_max_count = 4;
  std::int64_t exhaustive_bound = 50;
};

/// True when |sum q_i mu_i| <= tolerance * ||q||_1 * max|mu_i|, evaluated in
/// extended precision.
bool relation_holds(std::span<const double> values, std::span<const std::int64_t> q,
                    double tolerance);

/// Searches integer relations q (|q_i| <= bound) among the values. Prefixes
/// of increasing length are examined; the verdict reports the shortest
/// prefix carrying a relation and, within it, the witness of least
/// l1 norm (ties: least l-infinity norm, then lexicographic), reduced by
/// gcd with its first nonzero entry positive. Floating inputs are never
/// certified non-resonant: without a witness the status is
/// NO_RELATION_FOUND.
ResonanceVerdict rational_relation_search(std::span<const double> values,
                                          const RelationSearchOptions& options = {});

/// Exhaustive enumeration over the box |q_i| <= bound for exactly the given
/// values (no prefix scan). Independent of the lattice path; used to
/// re-verify it.
std::vector<std::vector<std::int64_t>> enumerate_relations(std::span<const double> values,
                                                           std::int64_t bound, double tolerance);

/// LLL-based integer-relation candidates for the given values. Every
/// returned vector satisfies relation_holds and the coefficient bound.
/// Throws NumericalError when the integer arithmetic would overflow.
std::vector<std::vector<std::int64_t>> lattice_relations(std::span<const double> values,
                                                         std::int64_t bound, double tolerance);

// ---------------------------------------------------------------------------
// Exact arithmetic over a declared Q-linearly independent basis.

using Rational = boost::multiprecision::cpp_rational;

/// A real number written as sum_b c_b * basis_b with rational coefficients.
using ExactValue = std::vector<Rational>;

/// Decides Q-linear independence of the values exactly: the family is
/// resonant iff the coefficient vectors are linearly dependent over Q. A
/// witness is an integer null vector.
ResonanceVerdict exact_nonresonance(std::span<const ExactValue> values);

/// Symbolic description of an orthotope spectrum: pi^2 / r_i^2 equals
/// coefficient[i] * basis[basis_index[i]].
struct ExactBox {
  std::vector<std::string> basis_labels;
  /// Numerical value of each basis element, used only to sort eigenvalues.
  std::vector<double> basis_values;
  std::vector<std::size_t> basis_index;
  std::vector<Rational> coefficient;
};

struct ExactBoxLevel {
  std::vector<int> index;
  ExactValue value;
  double numeric = 0.0;
};

/// The `count` lowest eigenvalues of the symbolic box, sorted numerically.
std::vector<ExactBoxLevel> exact_box_levels(const ExactBox& box, std::size_t count);

/// Exact verdict on the first `gap_count` eigenvalue gaps of the box.
ResonanceVerdict exact_box_nonresonance(const ExactBox& box, std::size_t gap_count);

}  // namespace fit4control
