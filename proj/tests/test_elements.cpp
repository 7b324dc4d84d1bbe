#include <doctest.h>

#include <cmath>
#include <numeric>

#include "stabfem/assembly.hpp"
#include "stabfem/quadrature.hpp"
#include "stabfem/reference_element.hpp"

using namespace stabfem;

namespace {

/// Normalized integral of xi^a eta^b over the reference triangle: 2 a! b! / (a + b + 2)!.
double monomial_oracle(int a, int b) {
  return 2.0 * std::tgamma(a + 1.0) * std::tgamma(b + 1.0) / std::tgamma(a + b + 3.0);
}

double rule_integral(const QuadratureRule& r, int a, int b) {
  double s = 0.0;
  for (std::size_t q = 0; q < r.size(); ++q)
    s += r.weights[q] * std::pow(r.points[q][0], a) * std::pow(r.points[q][1], b);
  return s;
}

std::vector<double> weights_by_kind(const ReferenceElement& el, NodeKind kind) {
  std::vector<double> w;
  for (int i = 0; i < el.size(); ++i)
    if (el.kinds[i] == kind) w.push_back(el.weights[i]);
  return w;
}

}  // namespace

TEST_CASE("triangle rules integrate monomials up to their degree") {
  for (int degree : {1, 2, 3, 4, 5, 6, 7, 8, 10}) {
    const QuadratureRule r = triangle_rule(degree);
    CHECK(r.degree >= degree);
    CHECK(std::accumulate(r.weights.begin(), r.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
    for (int a = 0; a <= degree; ++a)
      for (int b = 0; a + b <= degree; ++b)
        CHECK(rule_integral(r, a, b) == doctest::Approx(monomial_oracle(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("gauss legendre on [0,1]") {
  std::vector<double> x, w;
  gauss_legendre(5, x, w);
  for (int k = 0; k <= 9; ++k) {
    double s = 0.0;
    for (int i = 0; i < 5; ++i) s += w[i] * std::pow(x[i], k);
    CHECK(s == doctest::Approx(1.0 / (k + 1)).epsilon(1e-14));
  }
}

TEST_CASE("basic element weights") {
  const auto& p1 = reference_element(Family::Basic, 1);
  for (double w : p1.weights) CHECK(w == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  const auto& p2 = reference_element(Family::Basic, 2);
  for (double w : weights_by_kind(p2, NodeKind::Vertex)) CHECK(std::abs(w) < 1e-14);
  for (double w : weights_by_kind(p2, NodeKind::Edge)) CHECK(w == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  const auto& p3 = reference_element(Family::Basic, 3);
  for (double w : weights_by_kind(p3, NodeKind::Vertex)) CHECK(w == doctest::Approx(1.0 / 30.0).epsilon(1e-13));
  for (double w : weights_by_kind(p3, NodeKind::Edge)) CHECK(w == doctest::Approx(3.0 / 40.0).epsilon(1e-13));
  for (double w : weights_by_kind(p3, NodeKind::Interior)) CHECK(w == doctest::Approx(9.0 / 20.0).epsilon(1e-13));
}

TEST_CASE("cubature element weights") {
  const auto& c2 = reference_element(Family::Cubature, 2);
  CHECK(c2.size() == 7);
  for (double w : weights_by_kind(c2, NodeKind::Vertex)) CHECK(w == doctest::Approx(1.0 / 20.0).epsilon(1e-13));
  for (double w : weights_by_kind(c2, NodeKind::Edge)) CHECK(w == doctest::Approx(2.0 / 15.0).epsilon(1e-13));
  for (double w : weights_by_kind(c2, NodeKind::Interior)) CHECK(w == doctest::Approx(9.0 / 20.0).epsilon(1e-13));

  const double s7 = std::sqrt(7.0);
  const double wv = (1369 + 767 * s7) / (120 * (859 + 395 * s7));
  const double wa = (287 + 115 * s7) / (40 * (173 + 49 * s7));
  const double wb = 21 * s7 / (40 * (2 * s7 + 1));
  CHECK(3 * wv + 6 * wa + 3 * wb == doctest::Approx(1.0).epsilon(1e-13));
  const auto& c3 = reference_element(Family::Cubature, 3);
  CHECK(c3.size() == 12);
  for (double w : weights_by_kind(c3, NodeKind::Vertex)) CHECK(std::abs(w - wv) < 1e-12);
  for (double w : weights_by_kind(c3, NodeKind::Edge)) CHECK(std::abs(w - wa) < 1e-12);
  for (double w : weights_by_kind(c3, NodeKind::Interior)) CHECK(std::abs(w - wb) < 1e-12);

  const double alpha = (-15 * s7 - 21 + std::sqrt(168 + 174 * s7)) / (2 * (-15 * s7 - 21));
  const double beta = 1.0 / 3.0 + 2 * s7 / 21;
  CHECK(std::abs(cubature::p3_alpha() - alpha) < 1e-14);
  CHECK(std::abs(cubature::p3_beta() - beta) < 1e-14);
}

TEST_CASE("nodal bases interpolate and sum to one") {
  for (Family f : {Family::Basic, Family::Cubature, Family::Bernstein})
    for (int p = 1; p <= 3; ++p) {
      const auto& el = reference_element(f, p);
      std::vector<double> v(el.size());
      el.eval(0.21, 0.33, v.data());
      CHECK(std::accumulate(v.begin(), v.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-13));
      if (!el.is_nodal()) continue;
      for (int i = 0; i < el.size(); ++i) {
        el.eval(el.nodes[i][1], el.nodes[i][2], v.data());
        for (int j = 0; j < el.size(); ++j) CHECK(std::abs(v[j] - (i == j ? 1.0 : 0.0)) < 1e-12);
      }
    }
}

TEST_CASE("weights are integrals of the basis") {
  const QuadratureRule exact = triangle_rule(8);
  for (Family f : {Family::Basic, Family::Cubature, Family::Bernstein})
    for (int p = 1; p <= 3; ++p) {
      const auto& el = reference_element(f, p);
      const ElementTables t = tabulate(el, exact);
      for (int i = 0; i < el.size(); ++i) {
        double s = 0.0;
        for (std::size_t q = 0; q < exact.size(); ++q) s += exact.weights[q] * t.phi(q, i);
        CHECK(std::abs(s - el.weights[i]) < 1e-12);
      }
    }
}

TEST_CASE("cubature self-quadrature gives a diagonal mass") {
  for (int p = 1; p <= 3; ++p) {
    const auto& el = reference_element(Family::Cubature, p);
    const ElementTables t = tabulate(el, el.quadrature);
    const Eigen::MatrixXd M = local_matrix({Vec2{0, 0}, Vec2{1, 0}, Vec2{0, 1}}, t, Form::Mass);
    for (int i = 0; i < el.size(); ++i)
      for (int j = 0; j < el.size(); ++j)
        if (i != j) CHECK(std::abs(M(i, j)) < 1e-12);
  }
}

TEST_CASE("cubature rules are exact to their declared degree") {
  // Self-quadrature exactness: 1, 3 and 5 for degrees 1, 2 and 3.
  const int declared[] = {1, 3, 5};
  for (int p = 1; p <= 3; ++p) {
    const auto& r = reference_element(Family::Cubature, p).quadrature;
    for (int a = 0; a <= declared[p - 1]; ++a)
      for (int b = 0; a + b <= declared[p - 1]; ++b)
        CHECK(rule_integral(r, a, b) == doctest::Approx(monomial_oracle(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("unsupported degree is rejected") {
  CHECK_THROWS_AS(reference_element(Family::Basic, 4), InvalidArgument);
  CHECK_THROWS_AS(reference_element(Family::Cubature, 0), InvalidArgument);
}
