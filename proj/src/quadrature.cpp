#include "stabfem/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "stabfem/common.hpp"
#include "stabfem/polynomial.hpp"

namespace stabfem {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

void add_orbit3(QuadratureRule& r, double a, double w) {
  const double b = 1.0 - 2.0 * a;
  r.points.push_back({a, a});
  r.points.push_back({b, a});
  r.points.push_back({a, b});
  for (int i = 0; i < 3; ++i) r.weights.push_back(w);
}

void add_orbit6(QuadratureRule& r, double a, double b, double w) {
  const double c = 1.0 - a - b;
  const double l[3] = {a, b, c};
  const int perm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (const auto& p : perm) {
    r.points.push_back({l[p[1]], l[p[2]]});
    r.weights.push_back(w);
  }
}

}  // namespace

double Poly2::integral() const {
  double sum = 0.0;
  for (int a = 0; a <= kMaxDegree; ++a)
    for (int b = 0; a + b <= kMaxDegree; ++b)
      if (at(a, b) != 0.0)
        sum += at(a, b) * 2.0 * factorial(a) * factorial(b) / factorial(a + b + 2);
  return sum;
}

Poly2 operator*(const Poly2& p, const Poly2& q) {
  Poly2 r;
  for (int a = 0; a <= Poly2::kMaxDegree; ++a)
    for (int b = 0; a + b <= Poly2::kMaxDegree; ++b) {
      const double pa = p.at(a, b);
      if (pa == 0.0) continue;
      for (int c = 0; a + c <= Poly2::kMaxDegree; ++c)
        for (int d = 0; a + b + c + d <= Poly2::kMaxDegree; ++d) {
          const double qc = q.at(c, d);
          if (qc != 0.0) r.at(a + c, b + d) += pa * qc;
        }
    }
  return r;
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  if (n < 1) throw InvalidArgument("gauss_legendre: need at least one point");
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    double p0 = 1.0, p1 = t;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (t * p1 - p0) / (t * t - 1.0);
    x[n - 1 - i] = 0.5 * (1.0 + t);
    w[n - 1 - i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
}

QuadratureRule collapsed_gauss_rule(int degree) {
  const int n = std::max(1, (degree + 3) / 2);
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  QuadratureRule r;
  r.degree = degree;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double v = x[j];
      r.points.push_back({x[i] * (1.0 - v), v});
      r.weights.push_back(2.0 * w[i] * w[j] * (1.0 - v));
    }
  return r;
}

QuadratureRule triangle_rule(int degree) {
  QuadratureRule r;
  r.degree = degree;
  if (degree <= 1) {
    r.points.push_back({1.0 / 3.0, 1.0 / 3.0});
    r.weights.push_back(1.0);
    r.degree = 1;
  } else if (degree == 2) {
    add_orbit3(r, 1.0 / 6.0, 1.0 / 3.0);
  } else if (degree == 4) {
    add_orbit3(r, 0.445948490915965, 0.223381589678011);
    add_orbit3(r, 0.091576213509771, 0.109951743655322);
  } else if (degree == 6) {
    add_orbit3(r, 0.249286745170910, 0.116786275726379);
    add_orbit3(r, 0.063089014491502, 0.050844906370207);
    add_orbit6(r, 0.053145049844817, 0.310352451033784, 0.082851075618374);
  } else {
    return collapsed_gauss_rule(degree);
  }
  return r;
}

}  // namespace stabfem
