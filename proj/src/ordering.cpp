#include "fit4control/ordering.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fit4control/coupling.hpp"
#include "fit4control/spectral.hpp"

namespace fit4control {

std::string to_string(ReorderingKind kind) {
  switch (kind) {
    case ReorderingKind::identity: return "identity";
    case ReorderingKind::alpha_greedy: return "alpha-greedy";
    case ReorderingKind::snake_induced: return "snake-induced";
    case ReorderingKind::user: return "user";
  }
  return "user";
}

Reordering Reordering::identity(std::size_t n) {
  Reordering r;
  r.kind = ReorderingKind::identity;
  for (std::size_t j = 1; j <= n; ++j) r.table.push_back(j);
  return r;
}

void Reordering::validate() const {
  auto sorted = table;
  std::sort(sorted.begin(), sorted.end());
  if (!sorted.empty() && sorted.front() == 0) throw InvalidArgument("reordering entries are 1-based");
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InvalidArgument("reordering repeats an index");
}

int default_snake_schedule(std::size_t step, int dimension) {
  return static_cast<int>(step % static_cast<std::size_t>(dimension)) + 1;
}

std::vector<std::vector<int>> boustrophedon(std::span<const int> m) {
  if (m.empty()) return {{}};
  for (int v : m)
    if (v < 1 || v % 2 == 0) throw InvalidArgument("boustrophedon needs odd positive sides");
  const auto inner = boustrophedon(m.first(m.size() - 1));
  const std::size_t mu = inner.size();
  std::vector<std::vector<int>> out;
  out.reserve(mu * static_cast<std::size_t>(m.back()));
  for (int j = 0; j < m.back(); ++j)
    for (std::size_t t = 0; t < mu; ++t) {
      auto point = inner[j % 2 == 0 ? t : mu - 1 - t];
      point.push_back(j + 1);
      out.push_back(std::move(point));
    }
  return out;
}

SnakeBijection::SnakeBijection(int dimension, SnakeSchedule schedule)
    : d_(dimension), schedule_(std::move(schedule)) {
  if (d_ < 1) throw InvalidArgument("snake dimension must be at least 1");
  if (!schedule_) throw InvalidArgument("snake schedule must be callable");
  box_.assign(static_cast<std::size_t>(d_), 1);
  table_.assign(static_cast<std::size_t>(d_), 1);
  box_sizes_.push_back(1);
}

void SnakeBijection::step() {
  const int p = schedule_(steps_ + 1, d_);
  if (p < 1 || p > d_) throw InvalidArgument("snake schedule returned an invalid axis");
  const std::size_t axis = static_cast<std::size_t>(p - 1);
  std::vector<int> cross;
  for (std::size_t i = 0; i < box_.size(); ++i)
    if (i != axis) cross.push_back(box_[i]);
  const auto section = boustrophedon(cross);
  auto emit = [&](const std::vector<int>& c, int xp) {
    std::size_t ci = 0;
    for (std::size_t i = 0; i < box_.size(); ++i) table_.push_back(i == axis ? xp : c[ci++]);
  };
  const int mp = box_[axis];
  for (std::size_t t = section.size(); t-- > 0;) emit(section[t], mp + 1);
  for (const auto& c : section) emit(c, mp + 2);
  box_[axis] += 2;
  ++steps_;
  box_sizes_.push_back(size());
}

void SnakeBijection::extend_to(std::size_t count) {
  while (size() < count) step();
}

std::vector<int> SnakeBijection::at(std::size_t j) const {
  if (j < 1 || j > size()) throw InvalidArgument("snake index outside the computed prefix");
  const auto first = table_.begin() + static_cast<std::ptrdiff_t>((j - 1) * d_);
  return {first, first + d_};
}

std::vector<std::vector<int>> SnakeBijection::prefix(std::size_t count) {
  extend_to(count);
  std::vector<std::vector<int>> out;
  out.reserve(count);
  for (std::size_t j = 1; j <= count; ++j) out.push_back(at(j));
  return out;
}

std::vector<std::vector<int>> snake(int dimension, std::size_t count) {
  if (count < 1) throw InvalidArgument("snake length must be at least 1");
  SnakeBijection s(dimension);
  return s.prefix(count);
}

namespace {

std::string format_set(const std::vector<std::size_t>& s) {
  std::ostringstream out;
  out << '{';
  for (std::size_t i = 0; i < s.size(); ++i) out << (i ? ", " : "") << s[i];
  out << '}';
  return out.str();
}

}  // namespace

StrandedComponent::StrandedComponent(std::vector<std::size_t> component)
    : InvalidArgument("stranded component " + format_set(component)),
      component_(std::move(component)) {}

Reordering alpha_reordering(const CouplingPattern& pattern, std::size_t count,
                            std::size_t universe) {
  if (count < 1) throw InvalidArgument("alpha reordering needs N >= 1");
  if (universe == 0) universe = count;
  if (universe < count) throw InvalidArgument("universe smaller than N");
  Reordering r;
  r.kind = ReorderingKind::alpha_greedy;
  std::vector<bool> placed(universe + 1, false), reachable(universe + 1, false);
  auto place = [&](std::size_t j) {
    placed[j] = true;
    r.table.push_back(j);
    for (std::size_t m = 1; m <= universe; ++m)
      if (!placed[m] && !reachable[m] && pattern(j, m)) reachable[m] = true;
  };
  place(1);
  while (r.table.size() < count) {
    std::size_t next = 0;
    for (std::size_t m = 1; m <= universe && next == 0; ++m)
      if (!placed[m] && reachable[m]) next = m;
    if (next == 0) {
      auto component = r.table;
      std::sort(component.begin(), component.end());
      throw StrandedComponent(std::move(component));
    }
    place(next);
  }
  return r;
}

double sine_product_bracket(int k) {
  if (k < 1) throw InvalidArgument("mode index must be positive");
  const double kk = k;
  return -4.0 * kk * (1.0 + kk) / ((1.0 + 2.0 * kk) * (1.0 + 2.0 * kk) * std::numbers::pi *
                                   std::numbers::pi);
}

double sine_product_antiderivative(int k, double length) {
  if (k < 1) throw InvalidArgument("mode index must be positive");
  if (!(length > 0.0)) throw InvalidArgument("length must be positive");
  // sin(a x) sin(b x) = (cos((a-b)x) - cos((a+b)x)) / 2 and
  // int_0^L x cos(c x) dx = L sin(c L)/c + (cos(c L) - 1)/c^2.
  const double a = k * std::numbers::pi / length;
  const double b = (k + 1) * std::numbers::pi / length;
  auto g = [length](double c) {
    return length * std::sin(c * length) / c + (std::cos(c * length) - 1.0) / (c * c);
  };
  return 0.5 * (g(a - b) - g(a + b)) / (length * length);
}

double sine_product_quadrature(int k, std::size_t points, double length) {
  if (k < 1 || points < 1) throw InvalidArgument("bad quadrature request");
  const double h = length / static_cast<double>(points);
  const double a = k * std::numbers::pi / length;
  const double b = (k + 1) * std::numbers::pi / length;
  double s = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double x = (static_cast<double>(i) + 0.5) * h;
    s += x * std::sin(a * x) * std::sin(b * x);
  }
  return s * h / (length * length);
}

std::size_t box_rank(std::span<const double> sides, double alpha, std::span<const int> index,
                     double degeneracy_tol) {
  const std::size_t d = sides.size();
  if (index.size() != d) throw InvalidArgument("multi-index dimension mismatch");
  const double target = box_eigenvalue(sides, alpha, index);
  std::vector<int> limit(d);
  for (std::size_t i = 0; i < d; ++i)
    limit[i] = static_cast<int>(std::sqrt(target) * alpha * sides[i] / std::numbers::pi) + 1;
  std::vector<int> k(d, 1);
  std::size_t below = 0;
  for (;;) {
    if (k != std::vector<int>(index.begin(), index.end())) {
      const double l = box_eigenvalue(sides, alpha, k);
      if (std::abs(l - target) <= degeneracy_tol * target)
        throw InvalidArgument("box eigenvalue of the requested multi-index is degenerate");
      if (l < target) ++below;
    }
    std::size_t axis = d;
    while (axis-- > 0) {
      if (++k[axis] <= limit[axis]) break;
      k[axis] = 1;
    }
    if (axis == static_cast<std::size_t>(-1)) break;
  }
  return below + 1;
}

std::vector<double> default_snake_sides(int dimension) {
  if (dimension < 1) throw InvalidArgument("dimension must be at least 1");
  std::vector<double> sides;
  for (int candidate = 2; static_cast<int>(sides.size()) < dimension; ++candidate) {
    bool prime = true;
    for (int f = 2; f * f <= candidate; ++f) prime = prime && candidate % f != 0;
    if (prime) sides.push_back(std::pow(static_cast<double>(candidate), 0.25));
  }
  return sides;
}

ConsecutiveCouplingTable consecutive_coupling_check(std::span<const double> sides,
                                                    std::span<const int> grid_counts,
                                                    const Potential& z, SnakeBijection& snake,
                                                    std::size_t count,
                                                    const ConsecutiveCouplingOptions& options) {
  const std::size_t d = sides.size();
  if (static_cast<std::size_t>(snake.dimension()) != d || grid_counts.size() != d)
    throw InvalidArgument("dimension mismatch between sides, grid and snake");
  if (count < 1) throw InvalidArgument("need at least one consecutive pair");
  const auto points = snake.prefix(count + 1);
  const auto analytic = box_spectrum_analytic(sides, options.alpha, points, grid_counts);
  if (z.values.size() != analytic.spectrum.quadrature_weights.size())
    throw InvalidArgument("Z does not match the grid of omega");

  ConsecutiveCouplingTable table;
  table.sides.assign(sides.begin(), sides.end());
  table.alpha = options.alpha;
  double zmax = 0.0;
  for (double v : z.values) zmax = std::max(zmax, std::abs(v));
  table.threshold = options.threshold.value_or(1e-8 * zmax);

  // box_spectrum_analytic sorts its output; map each snake point back.
  auto sampled = [&](const std::vector<int>& k) -> const std::vector<double>& {
    for (std::size_t j = 0; j < analytic.indices.size(); ++j)
      if (analytic.indices[j] == k) return analytic.spectrum.eigenfunctions[j];
    throw InvalidArgument("internal: snake point missing from the sampled modes");
  };
  table.all_nonzero = true;
  for (std::size_t l = 1; l <= count; ++l) {
    ConsecutiveCouplingRow row;
    row.l = l;
    row.from = points[l - 1];
    row.to = points[l];
    row.rank_from = box_rank(sides, options.alpha, row.from);
    row.rank_to = box_rank(sides, options.alpha, row.to);
    row.integral = coupling_entry(z.values, sampled(row.from), sampled(row.to),
                                  analytic.spectrum.quadrature_weights);
    row.nonzero = std::abs(row.integral) > table.threshold;
    table.all_nonzero = table.all_nonzero && row.nonzero;
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace fit4control
