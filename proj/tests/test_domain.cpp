#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fit4control/domain.hpp"
#include "fit4control/errors.hpp"
#include "fit4control/spectral.hpp"
#include "support/generators.hpp"

using namespace fit4control;

TEST_CASE("unit interval with 2000 interior points") {
  const auto d = make_domain(DomainKind::interval, {1.0}, {2000});
  CHECK(d.dimension() == 1);
  CHECK(d.size() == 2000);
  CHECK(d.spacing(0) == doctest::Approx(1.0 / 2001.0));
  CHECK(d.coordinate(0, 0) == doctest::Approx(1.0 / 2001.0));
  CHECK(d.coordinate(0, 1999) == doctest::Approx(2000.0 / 2001.0));
  CHECK(d.cell_volume() == doctest::Approx(1.0 / 2001.0));
}

TEST_CASE("orthotope 1.0 x 1.3 on a 120 x 120 grid") {
  const auto d = make_domain(DomainKind::orthotope, {1.0, 1.3}, {120, 120});
  CHECK(d.size() == 14400);
  CHECK(d.cell_volume() == doctest::Approx(1.0 / 121.0 * 1.3 / 121.0));
  // Last axis varies fastest.
  CHECK(d.unravel(1) == std::vector<int>{0, 1});
  CHECK(d.unravel(120) == std::vector<int>{1, 0});
  const std::vector<int> idx{5, 7};
  CHECK(d.ravel(idx) == 5u * 120u + 7u);
}

TEST_CASE("truncated confining stand-in for the real line") {
  const auto d = make_domain(DomainKind::truncated_confining, {20.0}, {4000},
                             TruncationBox{{0.0}, 10.0});
  CHECK(d.lower(0) == doctest::Approx(-10.0));
  CHECK(d.upper(0) == doctest::Approx(10.0));
  CHECK_THROWS_AS(make_domain(DomainKind::truncated_confining, {20.0}, {100}), InvalidArgument);
  CHECK_THROWS_AS(make_domain(DomainKind::truncated_confining, {10.0}, {100},
                              TruncationBox{{0.0}, 10.0}),
                  InvalidArgument);
}

TEST_CASE("domain construction rejects malformed input") {
  CHECK_THROWS_AS(make_domain(DomainKind::interval, {1.0, 1.0}, {10, 10}), InvalidArgument);
  CHECK_THROWS_AS(make_domain(DomainKind::orthotope, {1.0, -1.0}, {10, 10}), InvalidArgument);
  CHECK_THROWS_AS(make_domain(DomainKind::orthotope, {1.0, 1.0}, {10}), InvalidArgument);
  CHECK_THROWS_AS(make_domain(DomainKind::orthotope, {1.0}, {2}), InvalidArgument);
  CHECK_THROWS_AS(parse_domain_kind("sphere"), InvalidArgument);
  CHECK(parse_domain_kind("truncated-confining") == DomainKind::truncated_confining);
}

TEST_CASE("analytic potential forms") {
  const auto d = make_domain(DomainKind::interval, {1.0}, {99});
  const auto zero = sample_potential(d, "zero");
  for (double v : zero.values) CHECK(v == 0.0);

  const auto x = sample_potential(d, "linear-x");
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(x.values[i] == doctest::Approx((i + 1) / 100.0));
  CHECK(x.analytic_form == std::optional<std::string>("linear-x"));

  const auto c = sample_potential(d, "constant(c=2.5)");
  CHECK(c.values[17] == 2.5);

  const auto well = sample_potential(d, "well(a=0.25, b=0.5, inside=1, outside=7)");
  CHECK(well.values[29] == 1.0);  // x = 0.30
  CHECK(well.values[79] == 7.0);  // x = 0.80

  const auto r = sample_potential(d, "random-piecewise-linear(seed=7, amp=10, knots=8)");
  for (double v : r.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 10.0);
  }

  const auto sq = make_domain(DomainKind::orthotope, {1.0, 2.0}, {9, 19});
  const auto xy = sample_potential(sq, "product-xy");
  std::vector<double> node(2);
  sq.node(37, node);
  CHECK(xy.values[37] == doctest::Approx(node[0] * node[1]));
  CHECK_THROWS_AS(sample_potential(d, "product-xy"), InvalidArgument);
  CHECK_THROWS_AS(sample_potential(d, "mystery"), InvalidArgument);
  CHECK_THROWS_AS(sample_potential(d, "constant(c=abc)"), InvalidArgument);
  CHECK_THROWS_AS(sample_potential(d, "constant"), InvalidArgument);
}

TEST_CASE("callback potentials reject non-finite samples") {
  const auto d = make_domain(DomainKind::interval, {1.0}, {9});
  CHECK_THROWS_AS(sample_potential(
                      d, [](std::span<const double> x) { return 1.0 / (x[0] - 0.5); }, "pole"),
                  InvalidArgument);
}

TEST_CASE("control sets and anchor windows") {
  const ControlSet u({{0.0, 1.0, true, false}}, 0.0, 1.0);
  CHECK(u.contains(0.0));
  CHECK_FALSE(u.contains(1.0));
  CHECK(u.contains_window(0.25, 0.75));
  CHECK_FALSE(u.contains_window(0.25, 0.8));

  const ControlSet joined({{0.0, 1.0, true, false}, {1.0, 2.0, true, true}}, 0.5, 1.5);
  CHECK(joined.contains(2.0));
  CHECK_THROWS_AS(ControlSet({{0.0, 1.0, true, false}}, 0.5, 1.0), InvalidArgument);
  CHECK_THROWS_AS(ControlSet({{0.0, 1.0, true, false}, {1.5, 2.0, true, false}}, 0.5, 1.2),
                  InvalidArgument);
  CHECK_THROWS_AS(ControlSet({}, 0.0, 1.0), InvalidArgument);
}

TEST_CASE("property: seeded potentials rebuild bit-identically") {
  gen::for_all(11, 25, [](Rng& rng, std::size_t) {
    const int dim = static_cast<int>(rng.integer(1, 2));
    const auto d = dim == 1 ? make_domain(DomainKind::interval, {rng.uniform(0.5, 3.0)},
                                          {static_cast<int>(rng.integer(3, 400))})
                            : make_domain(DomainKind::orthotope,
                                          {rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0)},
                                          {static_cast<int>(rng.integer(3, 40)),
                                           static_cast<int>(rng.integer(3, 40))});
    const std::string form = "random-piecewise-linear(seed=" + std::to_string(rng.integer(0, 1 << 30)) +
                             ", amp=" + std::to_string(rng.integer(1, 50)) +
                             ", knots=" + std::to_string(rng.integer(2, 12)) + ")";
    const auto a = sample_potential(d, form);
    const auto b = sample_potential(d, form);
    REQUIRE(a.values.size() == b.values.size());
    CHECK(std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) == 0);
  });
}

TEST_CASE("property: grid quadrature of eigenfunctions is orthonormal") {
  gen::for_all(12, 12, [](Rng& rng, std::size_t) {
    const int dim = static_cast<int>(rng.integer(1, 2));
    const auto d = dim == 1 ? make_domain(DomainKind::interval, {rng.uniform(0.5, 2.0)},
                                          {static_cast<int>(rng.integer(50, 600))})
                            : make_domain(DomainKind::orthotope,
                                          {rng.uniform(0.7, 1.5), rng.uniform(0.7, 1.5)},
                                          {static_cast<int>(rng.integer(10, 30)),
                                           static_cast<int>(rng.integer(10, 30))});
    const auto v = sample_potential(
        d, "random-piecewise-linear(seed=" + std::to_string(rng.integer(0, 100000)) + ", amp=20, knots=6)");
    const auto spec = solve_schrodinger(d, v, 6);
    const double tol = default_orthonormality_tolerance(dim);
    for (std::size_t j = 0; j < spec.count(); ++j)
      for (std::size_t k = 0; k < spec.count(); ++k) {
        const double ip = spec.inner(spec.eigenfunctions[j], spec.eigenfunctions[k]);
        CHECK(std::abs(ip - (j == k ? 1.0 : 0.0)) <= 10.0 * tol);
      }
  });
}
