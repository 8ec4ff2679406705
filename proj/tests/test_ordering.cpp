#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <set>

#include "fit4control/errors.hpp"
#include "fit4control/ordering.hpp"
#include "fit4control/spectral.hpp"
#include "support/generators.hpp"

using namespace fit4control;
using std::numbers::pi;

namespace {

bool unit_step(const std::vector<int>& a, const std::vector<int>& b) {
  int changed = 0, total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    changed += a[i] != b[i];
    total += std::abs(a[i] - b[i]);
  }
  return changed == 1 && total == 1;
}

/// Every point of {1..m_1} x ... x {1..m_d} appears among `points`.
bool covers_box(const std::vector<std::vector<int>>& points, const std::vector<int>& m) {
  std::set<std::vector<int>> seen(points.begin(), points.end());
  std::size_t volume = 1;
  for (int x : m) volume *= static_cast<std::size_t>(x);
  if (seen.size() != volume) return false;
  for (const auto& p : points)
    for (std::size_t i = 0; i < m.size(); ++i)
      if (p[i] < 1 || p[i] > m[i]) return false;
  return true;
}

bool prefix_connected(const std::vector<std::size_t>& order,
                      const std::function<bool(std::size_t, std::size_t)>& edge) {
  for (std::size_t n = 1; n <= order.size(); ++n) {
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    std::size_t reached = 1;
    while (!stack.empty()) {
      const auto a = stack.back();
      stack.pop_back();
      for (std::size_t b = 0; b < n; ++b)
        if (!seen[b] && edge(order[a], order[b])) {
          seen[b] = true;
          ++reached;
          stack.push_back(b);
        }
    }
    if (reached != n) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("snake in one dimension is the identity") {
  const auto s = snake(1, 50);
  for (std::size_t j = 0; j < 50; ++j) CHECK(s[j] == std::vector<int>{static_cast<int>(j + 1)});
}

TEST_CASE("snake d = 2, M = 9 runs through {1,2,3}^2 from (1,1) to (3,3)") {
  const auto s = snake(2, 9);
  CHECK(s.front() == std::vector<int>{1, 1});
  CHECK(s.back() == std::vector<int>{3, 3});
  CHECK(covers_box(s, {3, 3}));
  for (std::size_t j = 1; j < s.size(); ++j) CHECK(unit_step(s[j - 1], s[j]));
  const std::vector<std::vector<int>> expected{{1, 1}, {1, 2}, {1, 3}, {2, 3}, {2, 2},
                                               {2, 1}, {3, 1}, {3, 2}, {3, 3}};
  CHECK(s == expected);
}

TEST_CASE("each schedule step ends at the corner m of its odd box") {
  SnakeBijection s(3);
  for (int l = 0; l < 8; ++l) {
    s.step();
    const auto& m = s.box();
    for (int x : m) CHECK(x % 2 == 1);
    CHECK(s.at(s.size()) == m);
    CHECK(s.at(1) == std::vector<int>{1, 1, 1});
  }
}

TEST_CASE("boustrophedon enumerates an odd box with unit steps") {
  const std::vector<int> m{3, 5};
  const auto b = boustrophedon(m);
  CHECK(b.size() == 15);
  CHECK(b.front() == std::vector<int>{1, 1});
  CHECK(b.back() == m);
  CHECK(covers_box(b, m));
  for (std::size_t j = 1; j < b.size(); ++j) CHECK(unit_step(b[j - 1], b[j]));
}

TEST_CASE("alpha reordering examples") {
  SUBCASE("tridiagonal pattern gives the identity") {
    const auto r = alpha_reordering(
        [](std::size_t j, std::size_t k) { return j + 1 == k || k + 1 == j; }, 8);
    CHECK(r.table == std::vector<std::size_t>{1, 2, 3, 4, 5, 6, 7, 8});
  }
  SUBCASE("couplings 1-3, 3-2, 2-4 give (1, 3, 2, 4)") {
    const std::set<std::pair<std::size_t, std::size_t>> edges{{1, 3}, {3, 2}, {2, 4}};
    const auto edge = [&](std::size_t j, std::size_t k) {
      return edges.count({j, k}) || edges.count({k, j});
    };
    const auto r = alpha_reordering(edge, 4);
    CHECK(r.table == std::vector<std::size_t>{1, 3, 2, 4});
    // Oracle: the lexicographically least prefix-connected ordering starting at 1.
    std::vector<std::size_t> perm{1, 2, 3, 4}, best;
    do {
      if (perm[0] == 1 && prefix_connected(perm, edge)) {
        best = perm;
        break;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(best == r.table);
  }
  SUBCASE("empty pattern strands {1}") {
    try {
      alpha_reordering([](std::size_t, std::size_t) { return false; }, 3);
      FAIL("expected StrandedComponent");
    } catch (const StrandedComponent& e) {
      CHECK(std::string(e.what()) == "stranded component {1}");
      CHECK(e.component() == std::vector<std::size_t>{1});
    }
  }
  SUBCASE("disconnected pattern reports the component containing 1") {
    try {
      alpha_reordering([](std::size_t j, std::size_t k) { return (j + k) % 2 == 0; }, 5);
      FAIL("expected StrandedComponent");
    } catch (const StrandedComponent& e) {
      CHECK(std::string(e.what()) == "stranded component {1, 3, 5}");
    }
  }
}

TEST_CASE("sine-product bracket: antiderivative and quadrature") {
  for (int k = 1; k <= 20; ++k) {
    const double bracket = -4.0 * k * (1.0 + k) / ((1.0 + 2.0 * k) * (1.0 + 2.0 * k) * pi * pi);
    CHECK(sine_product_bracket(k) == doctest::Approx(bracket).epsilon(1e-15));
    CHECK(std::abs(sine_product_antiderivative(k) - bracket) < 1e-10);
    CHECK(std::abs(sine_product_quadrature(k, 20000) - bracket) < 1e-6);
    // Scaling: (1/L^2) int_0^L is independent of L.
    CHECK(std::abs(sine_product_antiderivative(k, 2.7) - bracket) < 1e-10);
  }
  double previous = 0.0;
  for (int k = 1; k <= 1000; ++k) {
    const double b = sine_product_bracket(k);
    CHECK(b < previous);
    CHECK(b > -1.0 / (pi * pi));
    previous = b;
  }
  CHECK(std::abs(sine_product_bracket(1000000) + 1.0 / (pi * pi)) < 1e-12);
}

TEST_CASE("consecutive couplings of Z = x on (0, alpha)") {
  const std::vector<double> sides{1.0};
  const std::vector<int> grid{4000};
  for (double alpha : {1.0, 0.6}) {
    SnakeBijection s(1);
    ConsecutiveCouplingOptions opts;
    opts.alpha = alpha;
    const auto box = make_domain(DomainKind::interval, {alpha}, grid);
    const auto z = sample_potential(box, "linear-x");
    const auto table = consecutive_coupling_check(sides, grid, z, s, 8, opts);
    CHECK(table.all_nonzero);
    for (const auto& row : table.rows) {
      const int k = row.from[0];
      // With normalized modes the entry is (2 / alpha) times the raw integral
      // alpha^2 * bracket.
      const double raw = alpha * alpha * sine_product_bracket(k);
      CHECK(std::abs(row.integral - 2.0 / alpha * raw) < 1e-5);
      CHECK(row.rank_from == static_cast<std::size_t>(k));
    }
  }
}

TEST_CASE("constant Z makes every consecutive entry vanish") {
  const std::vector<double> sides{1.0, std::pow(2.0, 0.25)};
  const std::vector<int> grid{60, 60};
  SnakeBijection s(2);
  const auto box = make_domain(DomainKind::orthotope, {sides[0], sides[1]}, grid);
  const auto z = sample_potential(box, "constant(c=1)");
  const auto table = consecutive_coupling_check(sides, grid, z, s, 12);
  CHECK_FALSE(table.all_nonzero);
  for (const auto& row : table.rows) CHECK_FALSE(row.nonzero);
}

TEST_CASE("box rank and default sides") {
  const auto r = default_snake_sides(3);
  CHECK(r[0] == doctest::Approx(std::pow(2.0, 0.25)));
  CHECK(r[1] == doctest::Approx(std::pow(3.0, 0.25)));
  CHECK(r[2] == doctest::Approx(std::pow(5.0, 0.25)));
  const std::vector<double> sides{1.0, std::pow(2.0, 0.25)};
  const auto modes = lowest_box_modes(sides, 1.0, 12);
  for (std::size_t j = 0; j < modes.size(); ++j) CHECK(box_rank(sides, 1.0, modes[j].index) == j + 1);
  const std::vector<double> square{1.0, 1.0};
  const std::vector<int> k{1, 2};
  CHECK_THROWS_AS(box_rank(square, 1.0, k), InvalidArgument);
}

TEST_CASE("property: snake prefixes are injective unit-step walks filling odd boxes") {
  gen::for_all(51, 12, [](Rng& rng, std::size_t) {
    const int d = static_cast<int>(rng.integer(2, 4));
    const auto m = static_cast<std::size_t>(rng.integer(100, 6000));
    SnakeBijection s(d);
    const auto pts = s.prefix(m);
    std::set<std::vector<int>> seen;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      CHECK(seen.insert(pts[j]).second);
      if (j) CHECK(unit_step(pts[j - 1], pts[j]));
    }
    // After each step the image is the odd box of that step.
    SnakeBijection t(d);
    t.step();
    while (t.size() <= m) {
      std::vector<std::vector<int>> image(pts.begin(), pts.begin() + static_cast<long>(t.size()));
      CHECK(covers_box(image, t.box()));
      t.step();
    }
  });
}

TEST_CASE("property: dropping the last schedule step leaves a prefix") {
  gen::for_all(52, 10, [](Rng& rng, std::size_t) {
    const int d = static_cast<int>(rng.integer(1, 4));
    const int steps = static_cast<int>(rng.integer(1, d == 1 ? 40 : 9));
    SnakeBijection shorter(d), longer(d);
    for (int l = 0; l < steps; ++l) shorter.step();
    for (int l = 0; l <= steps; ++l) longer.step();
    REQUIRE(shorter.size() < longer.size());
    for (std::size_t j = 1; j <= shorter.size(); ++j) CHECK(shorter.at(j) == longer.at(j));
  });
}

TEST_CASE("property: alpha reordering is a prefix-connected permutation") {
  gen::for_all(53, 100, [](Rng& rng, std::size_t) {
    const auto n = static_cast<std::size_t>(rng.integer(2, 30));
    const auto adj = gen::connected_pattern(rng, n, rng.uniform(0.0, 0.2));
    const auto edge = [&](std::size_t j, std::size_t k) { return bool(adj[j][k]); };
    const auto r = alpha_reordering(edge, n);
    auto sorted = r.table;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> expected(n);
    std::iota(expected.begin(), expected.end(), 1);
    CHECK(sorted == expected);
    CHECK(r.table.front() == 1);
    CHECK(prefix_connected(r.table, edge));
  });
}
