#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fit4control/errors.hpp"
#include "fit4control/spectral.hpp"
#include "support/generators.hpp"

using namespace fit4control;
using std::numbers::pi;

namespace {

double residual(const DiscreteOperator& op, double lambda, const std::vector<double>& f) {
  std::vector<double> y(f.size());
  op.apply(f, y);
  double r = 0.0, n = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    r += (y[i] - lambda * f[i]) * (y[i] - lambda * f[i]);
    n += f[i] * f[i];
  }
  return std::sqrt(r / n);
}

}  // namespace

TEST_CASE("three-point stencil on (0,1) with N = 3") {
  const auto d = make_domain(DomainKind::interval, {1.0}, {3});
  const auto op = discretize(d, sample_potential(d, "zero"));
  const auto a = op.dense();
  for (int i = 0; i < 3; ++i) {
    CHECK(a(i, i) == doctest::Approx(32.0));  // 2 / h^2, h = 1/4
    if (i + 1 < 3) {
      CHECK(a(i, i + 1) == doctest::Approx(-16.0));
      CHECK(a(i + 1, i) == doctest::Approx(-16.0));
    }
  }
  CHECK(a(0, 2) == 0.0);

  const auto shifted = discretize(d, sample_potential(d, "constant(c=3)")).dense();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(shifted(i, j) == doctest::Approx(a(i, j) + (i == j ? 3.0 : 0.0)));
}

TEST_CASE("2-D operator is the Kronecker sum plus diag(V)") {
  const auto d = make_domain(DomainKind::orthotope, {1.0, 1.5}, {4, 5});
  const auto v = sample_potential(d, "product-xy");
  const auto a = discretize(d, v).dense();
  const double hx = 1.0 / 5.0, hy = 1.5 / 6.0;
  auto lap = [](int n, double h, int i, int j) {
    if (i == j) return 2.0 / (h * h);
    if (std::abs(i - j) == 1) return -1.0 / (h * h);
    return 0.0;
  };
  for (int i1 = 0; i1 < 4; ++i1)
    for (int i2 = 0; i2 < 5; ++i2)
      for (int j1 = 0; j1 < 4; ++j1)
        for (int j2 = 0; j2 < 5; ++j2) {
          double expected = lap(4, hx, i1, j1) * (i2 == j2) + (i1 == j1) * lap(5, hy, i2, j2);
          if (i1 == j1 && i2 == j2) expected += v.values[i1 * 5 + i2];
          CHECK(a(i1 * 5 + i2, j1 * 5 + j2) == doctest::Approx(expected));
        }
}

TEST_CASE("Dirichlet spectrum of (0,1) with 2000 grid points") {
  const auto d = make_domain(DomainKind::interval, {1.0}, {2000});
  const auto spec = solve_schrodinger(d, sample_potential(d, "zero"), 10);
  for (int k = 1; k <= 10; ++k)
    CHECK(std::abs(spec.eigenvalues[k - 1] - k * k * pi * pi) / (k * k * pi * pi) < 1e-3);
  CHECK(simplicity_check(spec, default_simplicity_tolerance(spec)).size() == 10);
}

TEST_CASE("square box has the degenerate pair 5 pi^2") {
  const auto d = make_domain(DomainKind::orthotope, {1.0, 1.0}, {40, 40});
  const auto spec = solve_schrodinger(d, sample_potential(d, "zero"), 4);
  CHECK(spec.eigenvalues[2] - spec.eigenvalues[1] < default_simplicity_tolerance(spec));
  CHECK(spec.eigenvalues[1] == doctest::Approx(5 * pi * pi).epsilon(2e-3));
  const auto simple = simplicity_check(spec, default_simplicity_tolerance(spec));
  CHECK(std::find(simple.begin(), simple.end(), 2u) == simple.end());
  CHECK(std::find(simple.begin(), simple.end(), 3u) == simple.end());
  CHECK(std::find(simple.begin(), simple.end(), 1u) != simple.end());
}

TEST_CASE("the x*y potential splits the square degeneracy") {
  const auto d = make_domain(DomainKind::orthotope, {1.0, 1.0}, {16, 16});
  const auto spec = solve_schrodinger(d, sample_potential(d, "product-xy"), 6);
  // Oracle: dense diagonalization of the same operator.
  const auto op = discretize(d, sample_potential(d, "product-xy"));
  const auto dense = linalg::jacobi_eigen(op.dense());
  for (std::size_t j = 0; j < 6; ++j)
    CHECK(spec.eigenvalues[j] == doctest::Approx(dense.values[j]).epsilon(1e-10));
  CHECK(simplicity_check(spec, default_simplicity_tolerance(spec)).size() == 6);
}

TEST_CASE("confinement on (1,2) pushes lambda_1 of (0,2) towards pi^2") {
  const auto d = make_domain(DomainKind::interval, {2.0}, {1999});
  std::vector<double> errors;
  for (double k : {1e1, 1e2, 1e3, 1e4}) {
    const auto v = sample_potential(d, [k](std::span<const double> x) { return x[0] > 1.0 ? k : 0.0; },
                                    "step");
    const auto spec = solve_schrodinger(d, v, 1);
    errors.push_back(std::abs(spec.eigenvalues[0] - pi * pi));
  }
  for (std::size_t i = 1; i < errors.size(); ++i) CHECK(errors[i] < errors[i - 1]);
  CHECK(errors.back() < 0.05 * pi * pi);
}

TEST_CASE("analytic box spectrum") {
  const std::vector<double> unit{1.0};
  const std::vector<std::vector<int>> first{{1}};
  const std::vector<int> grid{99};
  const auto one = box_spectrum_analytic(unit, 1.0, first, grid);
  CHECK(one.spectrum.eigenvalues[0] == doctest::Approx(pi * pi));
  for (int i = 0; i < 99; ++i) {
    const double x = (i + 1) / 100.0;
    CHECK(one.spectrum.eigenfunctions[0][i] == doctest::Approx(std::sqrt(2.0) * std::sin(pi * x)));
  }

  const std::vector<double> square{1.0, 1.0};
  const std::vector<std::vector<int>> pair{{1, 2}, {2, 1}};
  const auto two = box_spectrum_analytic(square, 1.0, pair);
  CHECK(two.spectrum.eigenvalues[0] == doctest::Approx(5 * pi * pi));
  CHECK(two.spectrum.eigenvalues[1] == doctest::Approx(5 * pi * pi));
}

TEST_CASE("box (1, 2^(1/4)): first 10 eigenvalues are simple") {
  const std::vector<double> sides{1.0, std::pow(2.0, 0.25)};
  const auto modes = lowest_box_modes(sides, 1.0, 10);
  // Oracle: brute-force enumeration of pi^2 (k1^2 + k2^2 / sqrt 2), k <= 10.
  std::vector<double> all;
  for (int k1 = 1; k1 <= 10; ++k1)
    for (int k2 = 1; k2 <= 10; ++k2) all.push_back(pi * pi * (k1 * k1 + k2 * k2 / std::sqrt(2.0)));
  std::sort(all.begin(), all.end());
  for (std::size_t j = 0; j < 10; ++j) {
    CHECK(modes[j].eigenvalue == doctest::Approx(all[j]).epsilon(1e-14));
    if (j > 0) CHECK(all[j] - all[j - 1] > 1e-6 * all[j]);
  }
}

TEST_CASE("eigensolver paths agree on a 2-D problem") {
  const auto d = make_domain(DomainKind::orthotope, {1.0, 1.3}, {18, 20});
  const auto v = sample_potential(d, "random-piecewise-linear(seed=4, amp=10, knots=5)");
  const auto op = discretize(d, v);
  EigensolveOptions dense, lanczos, davidson;
  dense.method = EigenMethod::dense;
  lanczos.method = EigenMethod::lanczos;
  davidson.method = EigenMethod::davidson;
  const auto a = eigensolve(op, 6, dense);
  const auto b = eigensolve(op, 6, lanczos);
  const auto c = eigensolve(op, 6, davidson);
  for (std::size_t j = 0; j < 6; ++j) {
    CHECK(b.eigenvalues[j] == doctest::Approx(a.eigenvalues[j]).epsilon(1e-9));
    CHECK(c.eigenvalues[j] == doctest::Approx(a.eigenvalues[j]).epsilon(1e-9));
  }
}

TEST_CASE("1-D tridiagonal and bisection paths agree") {
  const auto d = make_domain(DomainKind::interval, {1.0}, {300});
  const auto op = discretize(d, sample_potential(d, "random-piecewise-linear(seed=2, amp=10, knots=8)"));
  EigensolveOptions ql, bis;
  ql.method = EigenMethod::tridiagonal;
  bis.method = EigenMethod::bisection;
  const auto a = eigensolve(op, 8, ql);
  const auto b = eigensolve(op, 8, bis);
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(a.eigenvalues[j] == doctest::Approx(b.eigenvalues[j]).epsilon(1e-10));
    for (std::size_t i = 0; i < 300; i += 37)
      CHECK(a.eigenfunctions[j][i] == doctest::Approx(b.eigenfunctions[j][i]).epsilon(1e-6));
  }
}

TEST_CASE("eigensolve rejects bad requests") {
  const auto d = make_domain(DomainKind::interval, {1.0}, {10});
  const auto op = discretize(d, sample_potential(d, "zero"));
  CHECK_THROWS_AS(eigensolve(op, 0), InvalidArgument);
  CHECK_THROWS_AS(eigensolve(op, 11), InvalidArgument);
  const auto sq = make_domain(DomainKind::orthotope, {1.0, 1.0}, {5, 5});
  EigensolveOptions tri;
  tri.method = EigenMethod::tridiagonal;
  CHECK_THROWS_AS(eigensolve(discretize(sq, sample_potential(sq, "zero")), 3, tri), InvalidArgument);
}

TEST_CASE("eigenfunction sign convention") {
  std::vector<double> f{0.1, -0.5, 0.5 - 1e-9, 0.2};
  normalize_sign(f);
  CHECK(f[1] == 0.5);
  std::vector<double> g{0.3, 0.2};
  normalize_sign(g);
  CHECK(g[0] == 0.3);
}

TEST_CASE("property: Rayleigh residuals meet the tolerance") {
  gen::for_all(21, 10, [](Rng& rng, std::size_t i) {
    const bool two_d = i % 2 == 1;
    const auto d = two_d ? make_domain(DomainKind::orthotope, {1.0, rng.uniform(0.8, 1.6)},
                                       {static_cast<int>(rng.integer(15, 30)),
                                        static_cast<int>(rng.integer(15, 30))})
                         : make_domain(DomainKind::interval, {rng.uniform(0.5, 2.0)},
                                       {static_cast<int>(rng.integer(100, 1500))});
    const auto v = sample_potential(
        d, "random-piecewise-linear(seed=" + std::to_string(rng.integer(0, 99999)) + ", amp=30, knots=7)");
    const auto op = discretize(d, v);
    EigensolveOptions opts;
    const auto spec = eigensolve(op, 8, opts);
    for (std::size_t j = 0; j < spec.count(); ++j) {
      const double r = residual(op, spec.eigenvalues[j], spec.eigenfunctions[j]);
      CHECK(r <= opts.residual_tol * std::max(1.0, std::abs(spec.eigenvalues[j])));
      CHECK(spec.residuals[j] <= opts.residual_tol);
    }
  });
}

TEST_CASE("property: second-order convergence against the analytic box") {
  gen::for_all(22, 6, [](Rng& rng, std::size_t) {
    const std::vector<double> sides{rng.uniform(0.8, 1.5), rng.uniform(0.8, 1.5)};
    const int n1 = static_cast<int>(rng.integer(12, 20));
    const int n2 = 2 * n1 + 1;  // half the spacing
    const auto modes = lowest_box_modes(sides, 1.0, 1);
    double err[2];
    int idx = 0;
    for (int n : {n1, n2}) {
      const auto d = make_domain(DomainKind::orthotope, sides, {n, n});
      const auto spec = solve_schrodinger(d, sample_potential(d, "zero"), 1);
      err[idx++] = std::abs(spec.eigenvalues[0] - modes[0].eigenvalue);
    }
    const double order = std::log2(err[0] / err[1]);
    CHECK(order >= 1.7);
    CHECK(order <= 2.3);
  });
}

TEST_CASE("property: a constant shift moves every eigenvalue by that constant") {
  gen::for_all(23, 10, [](Rng& rng, std::size_t i) {
    const auto d = i % 2 ? make_domain(DomainKind::orthotope, {1.0, 1.2}, {14, 16})
                         : make_domain(DomainKind::interval, {1.0}, {static_cast<int>(rng.integer(50, 800))});
    const auto v = sample_potential(
        d, "random-piecewise-linear(seed=" + std::to_string(rng.integer(0, 99999)) + ", amp=10, knots=5)");
    const double c = rng.uniform(-50.0, 50.0);
    Potential shifted = v;
    for (auto& x : shifted.values) x += c;
    EigensolveOptions opts;
    const auto a = solve_schrodinger(d, v, 5, opts);
    const auto b = solve_schrodinger(d, shifted, 5, opts);
    for (std::size_t j = 0; j < 5; ++j)
      CHECK(std::abs(b.eigenvalues[j] - (a.eigenvalues[j] + c)) <=
            opts.residual_tol * std::max(1.0, std::abs(b.eigenvalues[j])));
  });
}
