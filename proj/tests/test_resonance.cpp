#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "fit4control/errors.hpp"
#include "fit4control/resonance.hpp"
#include "fit4control/spectral.hpp"
#include "support/generators.hpp"

using namespace fit4control;
using std::numbers::pi;

namespace {

/// Independent re-evaluation of the acceptance inequality.
bool holds_extended(const std::vector<double>& mu, const std::vector<std::int64_t>& q, double eps) {
  long double s = 0.0L, l1 = 0.0L, top = 0.0L;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    s += static_cast<long double>(q[i]) * static_cast<long double>(mu[i]);
    l1 += std::abs(static_cast<long double>(q[i]));
    top = std::max(top, std::abs(static_cast<long double>(mu[i])));
  }
  return std::abs(s) <= static_cast<long double>(eps) * l1 * top;
}

bool nonzero(const std::vector<std::int64_t>& q) {
  return std::any_of(q.begin(), q.end(), [](std::int64_t x) { return x != 0; });
}

}  // namespace

TEST_CASE("gap sequences") {
  const std::vector<double> l{pi * pi, 4 * pi * pi, 9 * pi * pi};
  const auto g = gap_sequence(l);
  REQUIRE(g.size() == 2);
  CHECK(g[0] == doctest::Approx(3 * pi * pi));
  CHECK(g[1] == doctest::Approx(5 * pi * pi));

  std::vector<double> shifted = l;
  for (auto& x : shifted) x += 17.25;
  const auto gs = gap_sequence(shifted);
  CHECK(gs[0] == doctest::Approx(g[0]).epsilon(1e-14));
  CHECK(gs[1] == doctest::Approx(g[1]).epsilon(1e-14));
}

TEST_CASE("gaps of the (1, 2^(1/4)) box match brute-force enumeration") {
  const std::vector<double> sides{1.0, std::pow(2.0, 0.25)};
  const auto modes = lowest_box_modes(sides, 1.0, 6);
  std::vector<double> lambda;
  for (const auto& m : modes) lambda.push_back(m.eigenvalue);
  std::vector<double> all;
  for (int a = 1; a <= 8; ++a)
    for (int b = 1; b <= 8; ++b) all.push_back(pi * pi * (a * a + b * b / std::sqrt(2.0)));
  std::sort(all.begin(), all.end());
  const auto g = gap_sequence(lambda);
  for (std::size_t k = 0; k < 5; ++k) CHECK(g[k] == doctest::Approx(all[k + 1] - all[k]).epsilon(1e-12));
}

TEST_CASE("gaps 3, 5, 7 pi^2 are resonant with witness (5, -3, 0)") {
  const std::vector<double> mu{3 * pi * pi, 5 * pi * pi, 7 * pi * pi};
  const auto v = rational_relation_search(mu);
  CHECK(v.status == ResonanceStatus::resonant);
  REQUIRE(v.witness);
  CHECK(*v.witness == std::vector<std::int64_t>{5, -3, 0});
}

TEST_CASE("1, sqrt 2, sqrt 3 carry no relation with |q| <= 50") {
  const std::vector<double> mu{1.0, std::sqrt(2.0), std::sqrt(3.0)};
  RelationSearchOptions opts;
  opts.coeff_bound = 50;
  opts.tolerance = 1e-9;
  const auto v = rational_relation_search(mu, opts);
  CHECK(v.status == ResonanceStatus::no_relation_found);
  CHECK_FALSE(v.witness);
  // Oracle: exhaustive loop over the full box, written independently.
  std::size_t hits = 0;
  for (int a = -50; a <= 50; ++a)
    for (int b = -50; b <= 50; ++b)
      for (int c = -50; c <= 50; ++c) {
        if (!a && !b && !c) continue;
        hits += holds_extended(mu, {a, b, c}, 1e-9) ? 1 : 0;
      }
  CHECK(hits == 0);
}

TEST_CASE("1, 2, 3 is resonant") {
  const std::vector<double> mu{1.0, 2.0, 3.0};
  const auto v = rational_relation_search(mu);
  CHECK(v.status == ResonanceStatus::resonant);
  REQUIRE(v.witness);
  CHECK(holds_extended(mu, *v.witness, 1e-9));
  // The relation 1 + 2 - 3 = 0 is also accepted; the reported witness is
  // the shortest-prefix one.
  CHECK(relation_holds(mu, std::vector<std::int64_t>{1, 1, -1}, 1e-9));
  CHECK(*v.witness == std::vector<std::int64_t>{2, -1, 0});
}

TEST_CASE("enumeration and lattice reduction agree on planted relations") {
  gen::for_all(31, 30, [](Rng& rng, std::size_t) {
    const auto p = gen::planted_relation(rng, 4, 6);
    const auto enumerated = enumerate_relations(p.values, 6, 1e-11);
    const auto lattice = lattice_relations(p.values, 6, 1e-11);
    CHECK_FALSE(enumerated.empty());
    CHECK_FALSE(lattice.empty());
    for (const auto& q : lattice) CHECK(holds_extended(p.values, q, 1e-11));
  });
}

TEST_CASE("lattice path finds planted relations among longer families") {
  gen::for_all(32, 20, [](Rng& rng, std::size_t) {
    const auto p = gen::planted_relation(rng, 7, 20);
    RelationSearchOptions opts;
    opts.coeff_bound = 20;
    opts.tolerance = 1e-11;
    const auto v = rational_relation_search(p.values, opts);
    CHECK(v.status == ResonanceStatus::resonant);
    REQUIRE(v.witness);
    CHECK(holds_extended(p.values, *v.witness, 1e-11));
  });
}

TEST_CASE("exact verdicts") {
  SUBCASE("1-D spectrum k^2 pi^2 has resonant gaps") {
    ExactBox box{{"pi^2"}, {pi * pi}, {0}, {Rational(1)}};
    const auto v = exact_box_nonresonance(box, 3);
    CHECK(v.status == ResonanceStatus::resonant);
    REQUIRE(v.witness);
    // Gaps 3, 5, 7 in units of pi^2.
    const auto& q = *v.witness;
    CHECK(q[0] * 3 + q[1] * 5 + q[2] * 7 == 0);
    CHECK(nonzero(q));
  }
  SUBCASE("pi^2 and sqrt2 pi^2 are independent") {
    std::vector<ExactValue> values{{Rational(1), Rational(0)}, {Rational(0), Rational(1)}};
    const auto v = exact_nonresonance(values);
    CHECK(v.status == ResonanceStatus::exact_nonresonant);
    CHECK_FALSE(v.witness);
  }
  SUBCASE("box with r^2 = (1, sqrt 2) over the basis {pi^2, pi^2/sqrt 2}") {
    ExactBox box{{"pi^2", "pi^2/sqrt2"}, {pi * pi, pi * pi / std::sqrt(2.0)}, {0, 1},
                 {Rational(1), Rational(1)}};
    // Oracle: levels k1^2 pi^2 + k2^2 pi^2/sqrt 2 as integer pairs.
    std::vector<std::pair<double, std::array<long, 2>>> all;
    for (long a = 1; a <= 6; ++a)
      for (long b = 1; b <= 6; ++b)
        all.push_back({pi * pi * (a * a + b * b / std::sqrt(2.0)), {a * a, b * b}});
    std::sort(all.begin(), all.end(), [](auto& x, auto& y) { return x.first < y.first; });
    std::vector<std::array<long, 2>> gaps;
    for (int k = 0; k < 4; ++k)
      gaps.push_back({all[k + 1].second[0] - all[k].second[0], all[k + 1].second[1] - all[k].second[1]});

    // Two gaps: independent iff the 2x2 determinant is nonzero.
    const long det = gaps[0][0] * gaps[1][1] - gaps[0][1] * gaps[1][0];
    const auto two = exact_box_nonresonance(box, 2);
    CHECK((two.status == ResonanceStatus::exact_nonresonant) == (det != 0));

    // Four vectors in Q^2 are always dependent.
    const auto four = exact_box_nonresonance(box, 4);
    CHECK(four.status == ResonanceStatus::resonant);
    REQUIRE(four.witness);
    const auto& q = *four.witness;
    long s0 = 0, s1 = 0;
    for (int k = 0; k < 4; ++k) {
      s0 += q[k] * gaps[k][0];
      s1 += q[k] * gaps[k][1];
    }
    CHECK(s0 == 0);
    CHECK(s1 == 0);
    CHECK(nonzero(q));
  }
}

TEST_CASE("relation search rejects bad options") {
  const std::vector<double> mu{1.0, 2.0};
  RelationSearchOptions opts;
  opts.coeff_bound = 0;
  CHECK_THROWS_AS(rational_relation_search(mu, opts), InvalidArgument);
  opts.coeff_bound = 5;
  opts.tolerance = -1.0;
  CHECK_THROWS_AS(rational_relation_search(mu, opts), InvalidArgument);
}

TEST_CASE("property: every resonant witness passes the extended-precision check") {
  gen::for_all(33, 60, [](Rng& rng, std::size_t i) {
    std::vector<double> mu;
    if (i % 2 == 0) {
      mu = gen::planted_relation(rng, static_cast<std::size_t>(rng.integer(2, 5)), 9).values;
    } else {
      const auto k = static_cast<std::size_t>(rng.integer(2, 4));
      for (std::size_t j = 0; j < k; ++j) mu.push_back(static_cast<double>(rng.integer(1, 30)) * pi);
    }
    const auto v = rational_relation_search(mu);
    if (v.status == ResonanceStatus::resonant) {
      REQUIRE(v.witness);
      CHECK(holds_extended(mu, *v.witness, v.tolerance));
      CHECK(nonzero(*v.witness));
      const auto first = std::find_if(v.witness->begin(), v.witness->end(),
                                      [](std::int64_t x) { return x != 0; });
      CHECK(*first > 0);
    }
  });
}

TEST_CASE("property: status and witness are invariant under positive scaling") {
  gen::for_all(34, 40, [](Rng& rng, std::size_t i) {
    std::vector<double> mu = i % 2 ? gen::planted_relation(rng, 3, 8).values
                                   : gen::reals(rng, 3, 1.0, 10.0);
    const double c = std::ldexp(1.0, static_cast<int>(rng.integer(-20, 20)));
    std::vector<double> scaled = mu;
    for (auto& x : scaled) x *= c;
    const auto a = rational_relation_search(mu);
    const auto b = rational_relation_search(scaled);
    CHECK(a.status == b.status);
    CHECK(a.witness == b.witness);
  });
}

TEST_CASE("property: planted relations are recovered whenever B covers them") {
  gen::for_all(35, 50, [](Rng& rng, std::size_t) {
    const auto k = static_cast<std::size_t>(rng.integer(2, 4));
    const auto p = gen::planted_relation(rng, k, 12);
    std::int64_t inf = 0;
    for (auto q : p.relation) inf = std::max(inf, std::abs(q));
    RelationSearchOptions opts;
    opts.coeff_bound = inf + rng.integer(0, 10);
    const auto v = rational_relation_search(p.values, opts);
    CHECK(v.status == ResonanceStatus::resonant);
  });
}
