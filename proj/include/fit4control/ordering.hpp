#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fit4control/domain.hpp"
#include "fit4control/errors.hpp"

namespace fit4control {

enum class ReorderingKind { identity, alpha_greedy, snake_induced, user };

std::string to_string(ReorderingKind kind);

struct Reordering {
  /// h(1..N), 1-based values.
  std::vector<std::size_t> table;
  ReorderingKind kind = ReorderingKind::user;

  static Reordering identity(std::size_t n);
  /// Throws InvalidArgument on zero or repeated entries.
  void validate() const;
};

/// Axis p in 1..d to grow at schedule step l (l >= 1).
using SnakeSchedule = std::function<int(std::size_t step, int dimension)>;

/// p = l mod d + 1.
int default_snake_schedule(std::size_t step, int dimension);

/// Unit-step bijection of N onto N^d, grown lazily through nested odd boxes.
class SnakeBijection {
 public:
  explicit SnakeBijection(int dimension, SnakeSchedule schedule = default_snake_schedule);

  int dimension() const noexcept { return d_; }
  /// Number of points computed so far (always a full box).
  std::size_t size() const noexcept { return table_.size() / static_cast<std::size_t>(d_); }
  /// Grows the table until it holds at least `count` points.
  void extend_to(std::size_t count);
  /// Applies exactly one more schedule step.
  void step();
  /// 1-based j.
  std::vector<int> at(std::size_t j) const;
  std::vector<std::vector<int>> prefix(std::size_t count);
  /// Current odd box m(l).
  const std::vector<int>& box() const noexcept { return box_; }
  std::size_t steps() const noexcept { return steps_; }
  /// Table length after each consumed step (starting with 1 for m(1)).
  const std::vector<std::size_t>& box_sizes() const noexcept { return box_sizes_; }

 private:
  int d_;
  SnakeSchedule schedule_;
  std::vector<int> box_;
  std::vector<int> table_;  // flattened, d per point
  std::size_t steps_ = 0;
  std::vector<std::size_t> box_sizes_;
};

/// First `count` points of the snake with the default schedule.
std::vector<std::vector<int>> snake(int dimension, std::size_t count);

/// Boustrophedon enumeration of the odd box {1..m_1} x ... x {1..m_d} from
/// (1,...,1) to m, the last axis slowest.
std::vector<std::vector<int>> boustrophedon(std::span<const int> m);

/// Symmetric nonzero pattern on 1-based indices.
using CouplingPattern = std::function<bool(std::size_t, std::size_t)>;

class StrandedComponent : public InvalidArgument {
 public:
  explicit StrandedComponent(std::vector<std::size_t> component);
  const std::vector<std::size_t>& component() const noexcept { return component_; }

 private:
  std::vector<std::size_t> component_;
};

/// Greedy reordering: h(1) = 1, then repeatedly the smallest index in
/// 1..universe (default N) outside the placed set that is coupled to a
/// placed index. Throws StrandedComponent when none exists.
Reordering alpha_reordering(const CouplingPattern& pattern, std::size_t count,
                            std::size_t universe = 0);

// ---------------------------------------------------------------------------
// Consecutive-mode integrals on boxes.

/// -4 k (1 + k) / ((1 + 2k)^2 pi^2)
double sine_product_bracket(int k);

/// (1/L^2) int_0^L x sin(k pi x / L) sin((k+1) pi x / L) dx by antiderivative.
double sine_product_antiderivative(int k, double length = 1.0);

/// Same integral by the composite midpoint rule with `points` cells.
double sine_product_quadrature(int k, std::size_t points, double length = 1.0);

/// 1 + #{k' : lambda(k') < lambda(k)} for the box (0, alpha r_i). Throws
/// InvalidArgument when lambda(k) is shared with another multi-index
/// (relative tolerance `degeneracy_tol`).
std::size_t box_rank(std::span<const double> sides, double alpha, std::span<const int> index,
                     double degeneracy_tol = 1e-12);

/// r_i = p_i^{1/4} for the first d primes.
std::vector<double> default_snake_sides(int dimension);

struct ConsecutiveCouplingRow {
  std::size_t l = 0;
  std::vector<int> from, to;
  std::size_t rank_from = 0, rank_to = 0;
  double integral = 0.0;
  bool nonzero = false;
};

struct ConsecutiveCouplingTable {
  std::vector<double> sides;
  double alpha = 1.0;
  double threshold = 0.0;
  std::vector<ConsecutiveCouplingRow> rows;
  bool all_nonzero = false;
};

struct ConsecutiveCouplingOptions {
  double alpha = 1.0;
  /// Absolute; when unset, 1e-8 * max |Z|.
  std::optional<double> threshold;
};

/// For l = 1..L evaluates int_omega Z psi_{s(l)} psi_{s(l+1)} by grid
/// quadrature, where s is the snake and omega = prod (0, alpha r_i) carries
/// the grid of `z`.
ConsecutiveCouplingTable consecutive_coupling_check(std::span<const double> sides,
                                                    std::span<const int> grid_counts,
                                                    const Potential& z, SnakeBijection& snake,
                                                    std::size_t count,
                                                    const ConsecutiveCouplingOptions& options = {});

}  // namespace fit4control
