#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stabfem/common.hpp"

namespace stabfem {

/// Coefficients of one explicit scheme.
///
/// RK: Butcher a, b, c. SSPRK: U(s) = sum_j gamma(s,j) U(j) + dt mu(s,j) F(U(j)),
/// with rows s = 1..S stored at index s-1. DeC: subtimesteps beta (beta(0) = 0),
/// weights rho(m-1, z) for m = 1..M and z = 0..M, and `corrections` iterations.
struct Scheme {
  SchemeKind kind = SchemeKind::SSPRK;
  int order = 2;
  int stages = 0;
  Eigen::MatrixXd a;
  Eigen::VectorXd b, c;
  Eigen::MatrixXd gamma, mu;
  Eigen::VectorXd beta;
  Eigen::MatrixXd rho;
  int corrections = 0;

  std::string name() const;
};

/// RK orders 2-4, SSPRK orders 2-4 ((3,2), (4,3), (5,4)), DeC orders 2-4.
Scheme make_scheme(SchemeKind kind, int order);
/// Scheme of order p + 1 paired with element degree p.
Scheme scheme_for_degree(SchemeKind kind, int degree);

/// nu_0..nu_N of Gamma(z) = sum_j nu_j z^j for du/dt = lambda u, z = dt lambda
/// (DeC with identity mass).
std::vector<double> stability_polynomial(const Scheme& scheme);
std::complex<double> eval_polynomial(const std::vector<double>& nu, std::complex<double> z);

/// Gamma(-dt A) for RK and SSPRK with dU/dt = -A U.
Eigen::MatrixXcd polynomial_amplification(const Scheme& scheme, const Eigen::MatrixXcd& A,
                                          double dt);

/// DeC amplification for M dU/dt = -R U with lumped mass ML.
Eigen::MatrixXcd dec_amplification(const Scheme& scheme, const Eigen::MatrixXcd& M,
                                   const Eigen::VectorXd& ML, const Eigen::MatrixXcd& R,
                                   double dt);

/// Semi-discrete system for the time steppers.
class OdeSystem {
 public:
  virtual ~OdeSystem() = default;
  virtual int size() const = 0;
  /// du/dt at (t, u) for RK and SSPRK.
  virtual void rhs(double t, const Eigen::VectorXd& u, Eigen::VectorXd& dudt) = 0;
  /// R(u) with M du/dt + R(u) = 0 (DeC).
  virtual void residual(double t, const Eigen::VectorXd& u, Eigen::VectorXd& r) = 0;
  /// out = M v (DeC).
  virtual void apply_mass(const Eigen::VectorXd& v, Eigen::VectorXd& out) = 0;
  /// Positive lumped mass (DeC).
  virtual const Eigen::VectorXd& lumped_mass() const = 0;
  /// Called once at the start of every step.
  virtual void begin_step(double /*t*/, const Eigen::VectorXd& /*u*/) {}
  /// Overwrites constrained entries with their values at time t.
  virtual void impose(double /*t*/, Eigen::VectorXd& /*u*/) {}
};

class TimeStepper {
 public:
  TimeStepper(Scheme scheme, int n);
  void step(OdeSystem& sys, double t, double dt, Eigen::VectorXd& u);
  const Scheme& scheme() const { return scheme_; }
  /// Right-hand side or residual evaluations per step.
  int evaluations_per_step() const;

 private:
  void step_rk(OdeSystem& sys, double t, double dt, Eigen::VectorXd& u);
  void step_ssprk(OdeSystem& sys, double t, double dt, Eigen::VectorXd& u);
  void step_dec(OdeSystem& sys, double t, double dt, Eigen::VectorXd& u);

  Scheme scheme_;
  int n_;
  std::vector<Eigen::VectorXd> stages_, slopes_;
  Eigen::VectorXd work_, work2_;
};

}  // namespace stabfem
