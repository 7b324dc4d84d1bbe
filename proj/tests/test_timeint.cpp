#include <doctest.h>

#include <cmath>
#include <complex>

#include "stabfem/timeint.hpp"

using namespace stabfem;
using cd = std::complex<double>;

namespace {

/// u' = lambda u on (Re, Im) pairs, identity mass.
class LinearOde : public OdeSystem {
 public:
  explicit LinearOde(cd lambda) : lambda_(lambda), ones_(Eigen::VectorXd::Ones(2)) {}
  int size() const override { return 2; }
  void rhs(double, const Eigen::VectorXd& u, Eigen::VectorXd& dudt) override {
    dudt.resize(2);
    dudt[0] = lambda_.real() * u[0] - lambda_.imag() * u[1];
    dudt[1] = lambda_.imag() * u[0] + lambda_.real() * u[1];
  }
  void residual(double t, const Eigen::VectorXd& u, Eigen::VectorXd& r) override {
    rhs(t, u, r);
    r = -r;
  }
  void apply_mass(const Eigen::VectorXd& v, Eigen::VectorXd& out) override { out = v; }
  const Eigen::VectorXd& lumped_mass() const override { return ones_; }

 private:
  cd lambda_;
  Eigen::VectorXd ones_;
};

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

double solve_error(const Scheme& s, cd lambda, int steps) {
  LinearOde ode(lambda);
  TimeStepper stepper(s, 2);
  Eigen::VectorXd u(2);
  u << 1.0, 0.0;
  const double dt = 1.0 / steps;
  for (int n = 0; n < steps; ++n) stepper.step(ode, n * dt, dt, u);
  return std::abs(cd(u[0], u[1]) - std::exp(lambda));
}

}  // namespace

TEST_CASE("stability polynomials match the exponential to the scheme order") {
  for (SchemeKind k : {SchemeKind::RK, SchemeKind::SSPRK, SchemeKind::DeC})
    for (int order = 2; order <= 4; ++order) {
      const Scheme s = make_scheme(k, order);
      const auto nu = stability_polynomial(s);
      REQUIRE(static_cast<int>(nu.size()) > order);
      for (int j = 0; j <= order; ++j)
        CHECK(nu[j] == doctest::Approx(1.0 / factorial(j)).epsilon(1e-12));
      if (k != SchemeKind::DeC) CHECK(static_cast<int>(nu.size()) == s.stages + 1);
    }
}

TEST_CASE("ssprk stage counts") {
  CHECK(make_scheme(SchemeKind::SSPRK, 2).stages == 3);
  CHECK(make_scheme(SchemeKind::SSPRK, 3).stages == 4);
  CHECK(make_scheme(SchemeKind::SSPRK, 4).stages == 5);
  CHECK(scheme_for_degree(SchemeKind::RK, 2).order == 3);
  CHECK_THROWS_AS(make_scheme(SchemeKind::RK, 7), InvalidArgument);
}

TEST_CASE("time steppers converge at their order") {
  const cd lambda(-0.5, 2.0);
  for (SchemeKind k : {SchemeKind::RK, SchemeKind::SSPRK, SchemeKind::DeC})
    for (int order = 2; order <= 4; ++order) {
      const Scheme s = make_scheme(k, order);
      const double e1 = solve_error(s, lambda, 40), e2 = solve_error(s, lambda, 80);
      const double observed = std::log2(e1 / e2);
      CAPTURE(s.name());
      CHECK(observed == doctest::Approx(order).epsilon(0.1));
    }
}

TEST_CASE("one step equals the stability polynomial") {
  const cd lambda(-0.3, 1.1);
  const double dt = 0.4;
  for (SchemeKind k : {SchemeKind::RK, SchemeKind::SSPRK, SchemeKind::DeC})
    for (int order = 2; order <= 4; ++order) {
      const Scheme s = make_scheme(k, order);
      const cd g = eval_polynomial(stability_polynomial(s), dt * lambda);
      LinearOde ode(lambda);
      TimeStepper stepper(s, 2);
      Eigen::VectorXd u(2);
      u << 1.0, 0.0;
      stepper.step(ode, 0.0, dt, u);
      CHECK(std::abs(cd(u[0], u[1]) - g) < 1e-13);

      Eigen::MatrixXcd a(1, 1);
      a(0, 0) = -lambda;
      if (k == SchemeKind::DeC) {
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(1, 1);
        const Eigen::MatrixXcd G = dec_amplification(s, m, Eigen::VectorXd::Ones(1), a, dt);
        CHECK(std::abs(G(0, 0) - g) < 1e-13);
      } else {
        CHECK(std::abs(polynomial_amplification(s, a, dt)(0, 0) - g) < 1e-13);
      }
    }
}
