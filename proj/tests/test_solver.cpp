#include <doctest.h>

#include <cmath>
#include <sstream>

#include "stabfem/fourier.hpp"
#include "stabfem/solver.hpp"

using namespace stabfem;

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

TEST_CASE("interpolation reproduces polynomials of the element degree") {
  const TriMesh m = structured_mesh(Pattern::T, 3, 2, {1.0, 1.0});
  for (Family f : {Family::Basic, Family::Bernstein, Family::Cubature})
    for (int p = 1; p <= 3; ++p) {
      const ReferenceElement& el = reference_element(f, p);
      const DofMap d = build_dof_map(m, el);
      const ScalarField u = [p](Vec2 x) { return std::pow(x.x + 0.5 * x.y - 0.2, p) + x.y; };
      const Eigen::VectorXd c = interpolate(m, d, el, u);
      const ErrorNorms e = error_norms(m, d, el, c, u);
      CAPTURE(el.name());
      CHECK(e.linf < 1e-12);
      const Eigen::VectorXd v = values_at_dofs(m, d, el, c);
      for (int i = 0; i < d.ndofs; ++i) CHECK(v[i] == doctest::Approx(u(d.dof_coords[i])));
    }
}

TEST_CASE("a constant offset on the unit square gives equal norms") {
  const TriMesh m = structured_mesh(Pattern::X, 4, 4, {1.0, 1.0});
  for (Family f : {Family::Basic, Family::Bernstein}) {
    const ReferenceElement& el = reference_element(f, 2);
    const DofMap d = build_dof_map(m, el);
    const ScalarField u = [](Vec2 x) { return std::sin(x.x) * x.y; };
    const Eigen::VectorXd c = interpolate(m, d, el, [&](Vec2 x) { return u(x) + 0.1; });
    const ErrorNorms e = error_norms(m, d, el, c, [&](Vec2 x) { return u(x); });
    CHECK(e.l1 == doctest::Approx(0.1).epsilon(1e-3));
    CHECK(e.l2 == doctest::Approx(0.1).epsilon(1e-3));
    CHECK(e.linf == doctest::Approx(0.1).epsilon(1e-3));
  }
}

TEST_CASE("cosine wave is transported") {
  const CosineWave w{0.3, 0.1, 2.0};
  const Vec2 a = w.velocity();
  CHECK(std::hypot(a.x, a.y) == doctest::Approx(2.0));
  const Vec2 x{0.3, 0.7};
  CHECK(w.value(x + 0.25 * a, 0.25) == doctest::Approx(w.value(x, 0.0)));
  const double h = 1e-6;
  CHECK(w.rate(x, 0.4) == doctest::Approx((w.value(x, 0.4 + h) - w.value(x, 0.4 - h)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("vortex profile") {
  VortexParams p;
  p.uc = 0.0;
  const auto c = vortex_exact(p.center, 0.0, p);
  CHECK(c[1] == doctest::Approx(0.0));
  CHECK(c[2] == doctest::Approx(0.0));
  CHECK(c[0] == doctest::Approx(p.hc - p.dh).epsilon(1e-10));
  CHECK(p.gamma() > 0.0);
  CHECK(vortex_exact({p.center.x + p.r0, p.center.y}, 0.0, p)[0] == doctest::Approx(p.hc));
  const auto far = vortex_exact({0.99, 0.99}, 0.0, p);
  CHECK(far[0] == p.hc);

  // Steady radial balance g dh/dr = v^2 / r.
  for (double r : {0.05, 0.15, 0.3, 0.4}) {
    const double e = 1e-5;
    const double dh = (vortex_exact({p.center.x + r + e, p.center.y}, 0, p)[0] -
                       vortex_exact({p.center.x + r - e, p.center.y}, 0, p)[0]) /
                      (2 * e);
    const double v = vortex_exact({p.center.x + r, p.center.y}, 0, p)[2];
    CHECK(p.g * dh == doctest::Approx(v * v / r).epsilon(1e-6));
  }

  VortexParams moving;
  const auto s = vortex_exact({moving.center.x + 0.3 * moving.uc, moving.center.y}, 0.3, moving);
  CHECK(s[1] == doctest::Approx(moving.uc));
}

TEST_CASE("periodic advection with OSS conserves mass and dissipates energy") {
  AdvectionConfig cfg;
  cfg.family = Family::Cubature;
  cfg.degree = 2;
  cfg.mesh = {Pattern::X, 6, 3, {0.0, 0.0}, {2.0, 1.0}, "", true};
  cfg.stab = {Stabilization::OSS, 0.03, 0.0, 0.0};
  cfg.cfl = 0.3;
  cfg.t_final = 0.5;
  cfg.wave = {0.0, 0.1, 1.0};
  cfg.record_history = true;
  const RunReport r = solve_linear_advection(cfg);
  REQUIRE(r.ok);
  REQUIRE(r.energy.size() > 2);
  CHECK(r.mass_factorizations == 0);
  for (std::size_t i = 1; i < r.energy.size(); ++i) {
    CHECK(r.energy[i] <= r.energy[i - 1] * (1 + 1e-12));
    CHECK(r.mass[i] == doctest::Approx(r.mass[0]).epsilon(1e-12).scale(1.0));
  }
  CHECK(r.t_reached == doctest::Approx(0.5));
  CHECK(r.error.l2 < 2e-2);
}

TEST_CASE("consistent mass elements factorize the mass") {
  AdvectionConfig cfg;
  cfg.family = Family::Basic;
  cfg.degree = 2;
  cfg.mesh = {Pattern::X, 3, 2, {0.0, 0.0}, {2.0, 1.0}, "", false};
  cfg.stab = {Stabilization::OSS, 0.026, 0.0, 0.0};
  cfg.max_steps = 2;
  CHECK(solve_linear_advection(cfg).mass_factorizations > 0);
  cfg.family = Family::Cubature;
  CHECK(solve_linear_advection(cfg).mass_factorizations == 0);
}

TEST_CASE("large cfl without stabilization is flagged as a blow-up") {
  // Fourier analysis says basic P1 with SSPRK is unstable here.
  const FourierAnalyzer fa(Family::Basic, 1, Pattern::X, scheme_for_degree(SchemeKind::SSPRK, 1));
  const StabilizationConfig none{Stabilization::None, 0.0, 0.0, 0.0};
  AnalysisOptions o;
  const double cfl = 1.5 * 0.403;
  CHECK(fa.max_damping(none, 3 * kPi / 16, {cfl}, o)[0] > 1e-3);

  AdvectionConfig cfg;
  cfg.mesh = {Pattern::X, 10, 5, {0.0, 0.0}, {2.0, 1.0}, "", true};
  cfg.wave = {0.0, 0.1, 1.0};
  cfg.stab = none;
  cfg.cfl = cfl;
  cfg.t_final = 400.0;
  const RunReport r = solve_linear_advection(cfg);
  CHECK(!r.ok);
  CHECK(r.failed_step > 0);
  CHECK(!r.failure.empty());
}

TEST_CASE("shallow water keeps a uniform flow") {
  ShallowWaterConfig cfg;
  cfg.family = Family::Cubature;
  cfg.degree = 2;
  cfg.mesh = {Pattern::X, 3, 3, {0.0, 0.0}, {1.0, 1.0}, "", false};
  cfg.stab = {Stabilization::OSS, 0.03, 0.0, 0.0};
  cfg.vortex.dh = 0.0;
  cfg.t_final = 0.05;
  const RunReport r = solve_shallow_water(cfg);
  REQUIRE(r.ok);
  REQUIRE(r.components.size() == 3u);
  for (const ErrorNorms& e : r.components) CHECK(e.linf < 1e-10);
}

TEST_CASE("degree matched sizes and convergence output") {
  const auto s = degree_matched_sizes({0.1, 0.05}, 3);
  CHECK(s[0] == doctest::Approx(0.3));
  CHECK(s[1] == doctest::Approx(0.15));

  AdvectionConfig cfg;
  cfg.family = Family::Basic;
  cfg.degree = 1;
  cfg.stab = {Stabilization::OSS, 0.127, 0.0, 0.0};
  cfg.cfl = 0.403;
  cfg.t_final = 0.5;
  const ConvergenceResult res = convergence_study(cfg, {0.4, 0.2, 0.1});
  REQUIRE(res.levels.size() == 3u);
  CHECK(res.ok);
  CHECK(res.levels[2].order > 1.0);
  std::ostringstream a, b;
  write_convergence_csv(a, res, false);
  write_convergence_csv(b, res, false);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("level,dx,dofs,L1,L2,Linf,order,seconds,steps,ok", 0) == 0);
}

TEST_CASE("unsupported combinations are rejected") {
  AdvectionConfig cfg;
  cfg.degree = 4;
  CHECK_THROWS_AS(solve_linear_advection(cfg), InvalidArgument);
  CHECK_THROWS_AS(parse_href("bogus"), InvalidArgument);
}
