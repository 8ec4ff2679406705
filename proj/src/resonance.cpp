#include "fit4control/resonance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>

#include "fit4control/errors.hpp"
#include "fit4control/spectral.hpp"

namespace fit4control {

std::vector<double> gap_sequence(std::span<const double> eigenvalues) {
  if (eigenvalues.size() < 2) throw InvalidArgument("gap sequence needs at least 2 eigenvalues");
  std::vector<double> gaps(eigenvalues.size() - 1);
  for (std::size_t k = 0; k + 1 < eigenvalues.size(); ++k)
    gaps[k] = eigenvalues[k + 1] - eigenvalues[k];
  return gaps;
}

std::vector<double> gap_sequence(const SpectralDecomposition& spectrum) {
  return gap_sequence(spectrum.eigenvalues);
}

bool relation_holds(std::span<const double> values, std::span<const std::int64_t> q,
                    double tolerance) {
  long double sum = 0.0L, l1 = 0.0L, peak = 0.0L;
  bool nonzero = false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += static_cast<long double>(q[i]) * static_cast<long double>(values[i]);
    l1 += std::abs(static_cast<long double>(q[i]));
    peak = std::max(peak, std::abs(static_cast<long double>(values[i])));
    nonzero = nonzero || q[i] != 0;
  }
  return nonzero && std::abs(sum) <= static_cast<long double>(tolerance) * l1 * peak;
}

namespace {

/// Divides by the gcd and makes the first nonzero entry positive.
std::vector<std::int64_t> canonical(std::vector<std::int64_t> q) {
  std::int64_t g = 0;
  for (auto v : q) g = std::gcd(g, v < 0 ? -v : v);
  if (g > 1)
    for (auto& v : q) v /= g;
  for (auto v : q) {
    if (v == 0) continue;
    if (v < 0)
      for (auto& x : q) x = -x;
    break;
  }
  return q;
}

/// Preference order among witnesses: l1 norm, l-infinity norm, lexicographic.
bool better(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  auto l1 = [](const std::vector<std::int64_t>& q) {
    std::int64_t s = 0;
    for (auto v : q) s += std::abs(v);
    return s;
  };
  auto linf = [](const std::vector<std::int64_t>& q) {
    std::int64_t s = 0;
    for (auto v : q) s = std::max(s, std::abs(v));
    return s;
  };
  if (l1(a) != l1(b)) return l1(a) < l1(b);
  if (linf(a) != linf(b)) return linf(a) < linf(b);
  return a > b;
}

bool within_bound(const std::vector<std::int64_t>& q, std::int64_t bound) {
  return std::all_of(q.begin(), q.end(), [bound](std::int64_t v) { return std::abs(v) <= bound; });
}

}  // namespace

std::vector<std::vector<std::int64_t>> enumerate_relations(std::span<const double> values,
                                                           std::int64_t bound, double tolerance) {
  const std::size_t k = values.size();
  if (k == 0 || bound < 1) throw InvalidArgument("enumerate_relations: empty input or bound < 1");
  std::set<std::vector<std::int64_t>> found;

  // Solve for the coefficient of the largest value; enumerate the rest.
  std::size_t pivot = 0;
  for (std::size_t i = 1; i < k; ++i)
    if (std::abs(values[i]) > std::abs(values[pivot])) pivot = i;
  if (values[pivot] == 0.0) {
    std::vector<std::int64_t> unit(k, 0);
    unit[0] = 1;
    found.insert(unit);
    return {found.begin(), found.end()};
  }

  std::vector<std::int64_t> q(k, -bound);
  q[pivot] = 0;
  const long double mp = values[pivot];
  for (;;) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < k; ++i)
      if (i != pivot) s += static_cast<long double>(q[i]) * static_cast<long double>(values[i]);
    const long double t = -s / mp;
    for (long double c : {std::floor(t), std::ceil(t)}) {
      if (std::abs(c) > static_cast<long double>(bound)) continue;
      std::vector<std::int64_t> cand = q;
      cand[pivot] = static_cast<std::int64_t>(c);
      if (relation_holds(values, cand, tolerance)) {
        // Keep one representative per sign class.
        auto first = std::find_if(cand.begin(), cand.end(), [](auto v) { return v != 0; });
        if (*first < 0)
          for (auto& x : cand) x = -x;
        found.insert(std::move(cand));
      }
    }
    // Odometer over the non-pivot coordinates.
    std::size_t axis = k;
    while (axis-- > 0) {
      if (axis == pivot) continue;
      if (++q[axis] <= bound) break;
      q[axis] = -bound;
    }
    if (axis == static_cast<std::size_t>(-1)) break;
    if (k == 1) break;
  }
  return {found.begin(), found.end()};
}

namespace {

void checked_muladd(std::int64_t& target, std::int64_t factor, std::int64_t value) {
  std::int64_t product;
  if (__builtin_mul_overflow(factor, value, &product) ||
      __builtin_sub_overflow(target, product, &target))
    throw NumericalError("integer overflow in lattice reduction");
}

/// LLL reduction (delta = 0.99) of the rows (e_i, weight * mu_i). Integer
/// parts are tracked exactly; the weighted coordinate is recomputed from
/// them, so rounding never accumulates.
class RelationLattice {
 public:
  RelationLattice(std::span<const double> values, long double weight)
      : values_(values.begin(), values.end()), weight_(weight) {
    const std::size_t n = values_.size();
    rows_.assign(n, std::vector<std::int64_t>(n, 0));
    for (std::size_t i = 0; i < n; ++i) rows_[i][i] = 1;
  }

  void reduce() {
    const std::size_t n = rows_.size();
    if (n < 2) return;
    constexpr long double delta = 0.99L;
    std::size_t k = 1;
    std::size_t steps = 0;
    const std::size_t max_steps = 200000;
    while (k < n) {
      if (++steps > max_steps) throw NumericalError("lattice reduction exceeded its step budget");
      gram_schmidt();
      for (std::size_t j = k; j-- > 0;) {
        const long double m = mu_[k][j];
        if (std::abs(m) > 0.5L) {
          const long double r = std::round(m);
          if (std::abs(r) > 9.0e18L) throw NumericalError("integer overflow in lattice reduction");
          const auto ri = static_cast<std::int64_t>(r);
          for (std::size_t c = 0; c < n; ++c) checked_muladd(rows_[k][c], ri, rows_[j][c]);
          gram_schmidt();
        }
      }
      if (norms_[k] >= (delta - mu_[k][k - 1] * mu_[k][k - 1]) * norms_[k - 1]) {
        ++k;
      } else {
        std::swap(rows_[k], rows_[k - 1]);
        k = std::max<std::size_t>(k - 1, 1);
      }
    }
  }

  const std::vector<std::vector<std::int64_t>>& rows() const { return rows_; }

 private:
  std::vector<long double> embed(const std::vector<std::int64_t>& q) const {
    std::vector<long double> v(q.size() + 1);
    long double s = 0.0L;
    for (std::size_t i = 0; i < q.size(); ++i) {
      v[i] = static_cast<long double>(q[i]);
      s += v[i] * static_cast<long double>(values_[i]);
    }
    v[q.size()] = weight_ * s;
    return v;
  }

  void gram_schmidt() {
    const std::size_t n = rows_.size();
    std::vector<std::vector<long double>> b(n), star(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = embed(rows_[i]);
    mu_.assign(n, std::vector<long double>(n, 0.0L));
    norms_.assign(n, 0.0L);
    auto inner = [](const std::vector<long double>& x, const std::vector<long double>& y) {
      long double s = 0.0L;
      for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
      return s;
    };
    for (std::size_t i = 0; i < n; ++i) {
      star[i] = b[i];
      for (std::size_t j = 0; j < i; ++j) {
        mu_[i][j] = norms_[j] > 0.0L ? inner(b[i], star[j]) / norms_[j] : 0.0L;
        for (std::size_t c = 0; c < star[i].size(); ++c) star[i][c] -= mu_[i][j] * star[j][c];
      }
      norms_[i] = inner(star[i], star[i]);
    }
  }

  std::vector<double> values_;
  long double weight_;
  std::vector<std::vector<std::int64_t>> rows_;
  std::vector<std::vector<long double>> mu_;
  std::vector<long double> norms_;
};

}  // namespace

std::vector<std::vector<std::int64_t>> lattice_relations(std::span<const double> values,
                                                         std::int64_t bound, double tolerance) {
  if (values.empty() || bound < 1) throw InvalidArgument("lattice_relations: bad input");
  long double peak = 0.0L;
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgument("lattice_relations: non-finite value");
    peak = std::max(peak, std::abs(static_cast<long double>(v)));
  }
  if (peak == 0.0L) {
    std::vector<std::int64_t> unit(values.size(), 0);
    unit[0] = 1;
    return {unit};
  }
  // With this weight a row passes the acceptance test iff its weighted
  // coordinate is at most its l1 norm.
  const long double weight = 1.0L / (static_cast<long double>(tolerance) * peak);
  RelationLattice lattice(values, weight);
  lattice.reduce();

  std::set<std::vector<std::int64_t>> found;
  for (const auto& row : lattice.rows()) {
    auto q = canonical(row);
    if (within_bound(q, bound) && relation_holds(values, q, tolerance)) found.insert(std::move(q));
  }
  return {found.begin(), found.end()};
}

ResonanceVerdict rational_relation_search(std::span<const double> values,
                                          const RelationSearchOptions& options) {
  if (values.empty()) throw InvalidArgument("relation search needs at least one value");
  if (options.coeff_bound < 1) throw InvalidArgument("coefficient bound must be at least 1");
  if (!(options.tolerance >= 0.0)) throw InvalidArgument("tolerance must be nonnegative");
  for (double v : values)
    if (!std::isfinite(v)) throw InvalidArgument("relation search on non-finite value");

  ResonanceVerdict verdict;
  verdict.search_bound = options.coeff_bound;
  verdict.tolerance = options.tolerance;
  verdict.tested_count = values.size();
  const bool small_bound = options.coeff_bound <= options.exhaustive_bound;

  for (std::size_t k = 1; k <= values.size(); ++k) {
    const auto prefix = values.first(k);
    const auto candidates = (k <= options.exhaustive_max_count && small_bound)
                                ? enumerate_relations(prefix, options.coeff_bound, options.tolerance)
                                : lattice_relations(prefix, options.coeff_bound, options.tolerance);
    std::optional<std::vector<std::int64_t>> best;
    for (const auto& c : candidates) {
      auto q = canonical(c);
      if (!within_bound(q, options.coeff_bound) || !relation_holds(prefix, q, options.tolerance))
        continue;
      if (!best || better(q, *best)) best = std::move(q);
    }
    if (best) {
      long double sum = 0.0L;
      for (std::size_t i = 0; i < k; ++i)
        sum += static_cast<long double>((*best)[i]) * static_cast<long double>(values[i]);
      best->resize(values.size(), 0);
      verdict.status = ResonanceStatus::resonant;
      verdict.witness = std::move(best);
      verdict.residual = static_cast<double>(std::abs(sum));
      return verdict;
    }
  }
  verdict.status = ResonanceStatus::no_relation_found;
  return verdict;
}

ResonanceVerdict exact_nonresonance(std::span<const ExactValue> values) {
  if (values.empty()) throw InvalidArgument("exact test needs at least one value");
  const std::size_t rows = values.front().size();
  for (const auto& v : values)
    if (v.size() != rows) throw InvalidArgument("exact values over different bases");
  const std::size_t cols = values.size();

  // Reduced row echelon form of the rows x cols coefficient matrix.
  std::vector<std::vector<Rational>> m(rows, std::vector<Rational>(cols));
  for (std::size_t c = 0; c < cols; ++c)
    for (std::size_t r = 0; r < rows; ++r) m[r][c] = values[c][r];
  std::vector<std::size_t> pivot_col;
  std::size_t rank = 0;
  std::optional<std::size_t> free_col;
  for (std::size_t c = 0; c < cols; ++c) {
    std::size_t p = rank;
    while (p < rows && m[p][c] == 0) ++p;
    if (p == rows) {
      if (!free_col) free_col = c;
      continue;
    }
    std::swap(m[p], m[rank]);
    const Rational inv = 1 / m[rank][c];
    for (auto& x : m[rank]) x *= inv;
    for (std::size_t r = 0; r < rows; ++r) {
      if (r == rank || m[r][c] == 0) continue;
      const Rational f = m[r][c];
      for (std::size_t j = 0; j < cols; ++j) m[r][j] -= f * m[rank][j];
    }
    pivot_col.push_back(c);
    ++rank;
    if (free_col) break;
  }

  ResonanceVerdict verdict;
  verdict.tested_count = cols;
  verdict.tolerance = 0.0;
  if (!free_col) {
    verdict.status = ResonanceStatus::exact_nonresonant;
    return verdict;
  }
  // Null vector: x_free = 1, x_pivot = -m[row][free]; pivots beyond the
  // free column are not involved because elimination stopped there.
  std::vector<Rational> x(cols, Rational(0));
  x[*free_col] = 1;
  for (std::size_t r = 0; r < pivot_col.size(); ++r) x[pivot_col[r]] = -m[r][*free_col];

  using boost::multiprecision::cpp_int;
  cpp_int lcm = 1;
  for (const auto& v : x) {
    const cpp_int den = boost::multiprecision::denominator(v);
    lcm = lcm / boost::multiprecision::gcd(lcm, den) * den;
  }
  std::vector<cpp_int> ints;
  cpp_int g = 0;
  for (const auto& v : x) {
    cpp_int n = boost::multiprecision::numerator(v) * (lcm / boost::multiprecision::denominator(v));
    g = boost::multiprecision::gcd(g, abs(n));
    ints.push_back(n);
  }
  std::vector<std::int64_t> witness;
  const cpp_int limit = cpp_int(std::numeric_limits<std::int64_t>::max());
  for (auto& n : ints) {
    n /= g;
    if (abs(n) > limit) throw NumericalError("exact witness does not fit in 64-bit integers");
    witness.push_back(static_cast<std::int64_t>(n));
  }
  witness = canonical(std::move(witness));
  std::int64_t bound = 0;
  for (auto v : witness) bound = std::max(bound, std::abs(v));
  verdict.status = ResonanceStatus::resonant;
  verdict.witness = std::move(witness);
  verdict.search_bound = bound;
  return verdict;
}

std::vector<ExactBoxLevel> exact_box_levels(const ExactBox& box, std::size_t count) {
  const std::size_t d = box.basis_index.size();
  if (d == 0 || box.coefficient.size() != d)
    throw InvalidArgument("exact box: coefficient and basis index lists must match");
  if (box.basis_values.size() != box.basis_labels.size())
    throw InvalidArgument("exact box: basis labels and values must match");
  std::vector<double> sides(d);
  for (std::size_t i = 0; i < d; ++i) {
    if (box.basis_index[i] >= box.basis_values.size())
      throw InvalidArgument("exact box: basis index out of range");
    const double c = static_cast<double>(box.coefficient[i]) * box.basis_values[box.basis_index[i]];
    if (!(c > 0.0)) throw InvalidArgument("exact box: pi^2 / r_i^2 must be positive");
    sides[i] = std::numbers::pi / std::sqrt(c);
  }
  const auto modes = lowest_box_modes(sides, 1.0, count);
  std::vector<ExactBoxLevel> levels;
  for (const auto& mode : modes) {
    ExactBoxLevel level;
    level.index = mode.index;
    level.numeric = mode.eigenvalue;
    level.value.assign(box.basis_values.size(), Rational(0));
    for (std::size_t i = 0; i < d; ++i)
      level.value[box.basis_index[i]] +=
          box.coefficient[i] * Rational(mode.index[i]) * Rational(mode.index[i]);
    levels.push_back(std::move(level));
  }
  return levels;
}

ResonanceVerdict exact_box_nonresonance(const ExactBox& box, std::size_t gap_count) {
  if (gap_count == 0) throw InvalidArgument("need at least one gap");
  const auto levels = exact_box_levels(box, gap_count + 1);
  std::vector<ExactValue> gaps;
  for (std::size_t k = 0; k < gap_count; ++k) {
    ExactValue g(levels[k].value.size());
    for (std::size_t b = 0; b < g.size(); ++b) g[b] = levels[k + 1].value[b] - levels[k].value[b];
    gaps.push_back(std::move(g));
  }
  return exact_nonresonance(gaps);
}

}  // namespace fit4control
