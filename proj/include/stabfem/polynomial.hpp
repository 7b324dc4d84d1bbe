#pragma once

#include <array>

namespace stabfem {

/// Bivariate polynomial in reference coordinates (xi, eta) with
/// lambda1 = 1 - xi - eta, lambda2 = xi, lambda3 = eta.
class Poly2 {
 public:
  static constexpr int kMaxDegree = 6;

  Poly2() { c_.fill(0.0); }
  static Poly2 constant(double v) {
    Poly2 p;
    p.at(0, 0) = v;
    return p;
  }
  /// Barycentric coordinate lambda_{i+1}, i in {0,1,2}.
  static Poly2 lambda(int i) {
    Poly2 p;
    if (i == 0) {
      p.at(0, 0) = 1.0;
      p.at(1, 0) = -1.0;
      p.at(0, 1) = -1.0;
    } else if (i == 1) {
      p.at(1, 0) = 1.0;
    } else {
      p.at(0, 1) = 1.0;
    }
    return p;
  }

  double& at(int a, int b) { return c_[a * (kMaxDegree + 1) + b]; }
  double at(int a, int b) const { return c_[a * (kMaxDegree + 1) + b]; }

  int degree() const {
    int d = -1;
    for (int a = 0; a <= kMaxDegree; ++a)
      for (int b = 0; a + b <= kMaxDegree; ++b)
        if (at(a, b) != 0.0 && a + b > d) d = a + b;
    return d;
  }

  double operator()(double xi, double eta) const {
    double sum = 0.0;
    double xa = 1.0;
    for (int a = 0; a <= kMaxDegree; ++a) {
      double term = 0.0;
      double yb = 1.0;
      for (int b = 0; a + b <= kMaxDegree; ++b) {
        term += at(a, b) * yb;
        yb *= eta;
      }
      sum += term * xa;
      xa *= xi;
    }
    return sum;
  }

  Poly2 d_xi() const {
    Poly2 p;
    for (int a = 1; a <= kMaxDegree; ++a)
      for (int b = 0; a + b <= kMaxDegree; ++b) p.at(a - 1, b) = a * at(a, b);
    return p;
  }
  Poly2 d_eta() const {
    Poly2 p;
    for (int a = 0; a <= kMaxDegree; ++a)
      for (int b = 1; a + b <= kMaxDegree; ++b) p.at(a, b - 1) = b * at(a, b);
    return p;
  }

  /// Exact integral over the reference triangle, measure normalized to 1.
  double integral() const;

  Poly2& operator+=(const Poly2& o) {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  Poly2& operator*=(double s) {
    for (double& v : c_) v *= s;
    return *this;
  }
  friend Poly2 operator+(Poly2 a, const Poly2& b) { return a += b; }
  friend Poly2 operator-(Poly2 a, const Poly2& b) {
    Poly2 nb = b;
    nb *= -1.0;
    return a += nb;
  }
  friend Poly2 operator*(double s, Poly2 a) { return a *= s; }
  friend Poly2 operator*(const Poly2& p, const Poly2& q);

 private:
  std::array<double, (kMaxDegree + 1) * (kMaxDegree + 1)> c_;
};

}  // namespace stabfem
