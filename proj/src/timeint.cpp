#include "stabfem/timeint.hpp"

#include "stabfem/kernels.hpp"

namespace stabfem {

namespace {

using Poly = std::vector<double>;

Poly padd(const Poly& p, const Poly& q, double sq = 1.0) {
  Poly r(std::max(p.size(), q.size()), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) r[i] += p[i];
  for (std::size_t i = 0; i < q.size(); ++i) r[i] += sq * q[i];
  return r;
}

Poly ztimes(const Poly& p) {
  Poly r(p.size() + 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) r[i + 1] = p[i];
  return r;
}

Eigen::MatrixXd rows(std::initializer_list<std::initializer_list<double>> r) {
  const int n = static_cast<int>(r.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  int i = 0;
  for (const auto& row : r) {
    int j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

std::string Scheme::name() const {
  switch (kind) {
    case SchemeKind::RK: return "RK" + std::to_string(order);
    case SchemeKind::SSPRK:
      return "SSPRK(" + std::to_string(stages) + "," + std::to_string(order) + ")";
    case SchemeKind::DeC: return "DeC" + std::to_string(order);
  }
  return "?";
}

Scheme make_scheme(SchemeKind kind, int order) {
  Scheme s;
  s.kind = kind;
  s.order = order;
  if (order < 2 || order > 4)
    throw InvalidArgument("unsupported time scheme order " + std::to_string(order) +
                          " (supported: 2, 3, 4)");
  switch (kind) {
    case SchemeKind::RK:
      if (order == 2) {
        s.a = rows({{0, 0}, {1, 0}});
        s.b = Eigen::Vector2d(0.5, 0.5);
      } else if (order == 3) {
        s.a = rows({{0, 0, 0}, {0.5, 0, 0}, {-1, 2, 0}});
        s.b = Eigen::Vector3d(1.0 / 6, 2.0 / 3, 1.0 / 6);
      } else {
        s.a = rows({{0, 0, 0, 0}, {0.5, 0, 0, 0}, {0, 0.5, 0, 0}, {0, 0, 1, 0}});
        s.b = Eigen::Vector4d(1.0 / 6, 1.0 / 3, 1.0 / 3, 1.0 / 6);
      }
      s.stages = static_cast<int>(s.b.size());
      s.c = s.a.rowwise().sum();
      break;
    case SchemeKind::SSPRK:
      if (order == 2) {
        s.gamma = rows({{1}, {0, 1}, {1.0 / 3, 0, 2.0 / 3}});
        s.mu = rows({{0.5}, {0, 0.5}, {0, 0, 1.0 / 3}});
      } else if (order == 3) {
        s.gamma = rows({{1}, {0, 1}, {2.0 / 3, 0, 1.0 / 3}, {0, 0, 0, 1}});
        s.mu = rows({{0.5}, {0, 0.5}, {0, 0, 1.0 / 6}, {0, 0, 0, 0.5}});
      } else {
        s.gamma = rows({{1},
                        {0.444370493651235, 0.555629506348765},
                        {0.620101851488403, 0, 0.379898148511597},
                        {0.178079954393132, 0, 0, 0.821920045606868},
                        {0, 0, 0.517231671970585, 0.096059710526147, 0.386708617503269}});
        s.mu = rows({{0.391752226571890},
                     {0, 0.368410593050371},
                     {0, 0, 0.251891774271694},
                     {0, 0, 0, 0.544974750228521},
                     {0, 0, 0, 0.063692468666290, 0.226007483236906}});
      }
      s.stages = static_cast<int>(s.gamma.rows());
      s.c = Eigen::VectorXd::Zero(s.stages + 1);
      for (int r = 0; r < s.stages; ++r)
        for (int j = 0; j <= r; ++j) s.c[r + 1] += s.gamma(r, j) * s.c[j] + s.mu(r, j);
      break;
    case SchemeKind::DeC: {
      const int M = order - 1;
      s.beta = Eigen::VectorXd::LinSpaced(M + 1, 0.0, 1.0);
      s.rho = Eigen::MatrixXd::Zero(M, M + 1);
      if (order == 2) {
        s.rho << 0.5, 0.5;
      } else if (order == 3) {
        s.rho << 5.0 / 24, 1.0 / 3, -1.0 / 24, 1.0 / 6, 2.0 / 3, 1.0 / 6;
      } else {
        s.rho << 1.0 / 8, 19.0 / 72, -5.0 / 72, 1.0 / 72, 1.0 / 9, 4.0 / 9, 1.0 / 9, 0.0,
            1.0 / 8, 3.0 / 8, 3.0 / 8, 1.0 / 8;
      }
      s.corrections = order;
      s.stages = M;
      break;
    }
  }
  return s;
}

Scheme scheme_for_degree(SchemeKind kind, int degree) { return make_scheme(kind, degree + 1); }

std::vector<double> stability_polynomial(const Scheme& s) {
  switch (s.kind) {
    case SchemeKind::RK: {
      std::vector<Poly> k(s.stages);
      Poly u = {1.0};
      for (int i = 0; i < s.stages; ++i) {
        Poly arg = {1.0};
        for (int j = 0; j < i; ++j) arg = padd(arg, k[j], s.a(i, j));
        k[i] = ztimes(arg);
        u = padd(u, k[i], s.b[i]);
      }
      return u;
    }
    case SchemeKind::SSPRK: {
      std::vector<Poly> U = {{1.0}};
      for (int r = 0; r < s.stages; ++r) {
        Poly next = {0.0};
        for (int j = 0; j <= r; ++j) {
          next = padd(next, U[j], s.gamma(r, j));
          next = padd(next, ztimes(U[j]), s.mu(r, j));
        }
        U.push_back(next);
      }
      return U.back();
    }
    case SchemeKind::DeC: {
      const int M = static_cast<int>(s.rho.rows());
      std::vector<Poly> u(M + 1, Poly{1.0});
      for (int k = 0; k < s.corrections; ++k) {
        std::vector<Poly> next = u;
        for (int m = 1; m <= M; ++m) {
          Poly sum = {0.0};
          for (int z = 0; z <= M; ++z) sum = padd(sum, u[z], s.rho(m - 1, z));
          next[m] = padd(Poly{1.0}, ztimes(sum));
        }
        u = next;
      }
      return u[M];
    }
  }
  return {1.0};
}

std::complex<double> eval_polynomial(const std::vector<double>& nu, std::complex<double> z) {
  std::complex<double> r = 0.0;
  for (auto it = nu.rbegin(); it != nu.rend(); ++it) r = r * z + *it;
  return r;
}

Eigen::MatrixXcd polynomial_amplification(const Scheme& scheme, const Eigen::MatrixXcd& A,
                                          double dt) {
  const auto nu = stability_polynomial(scheme);
  const Eigen::MatrixXcd Z = -dt * A;
  const int n = static_cast<int>(A.rows());
  Eigen::MatrixXcd G = nu.back() * Eigen::MatrixXcd::Identity(n, n);
  for (int j = static_cast<int>(nu.size()) - 2; j >= 0; --j)
    G = Z * G + nu[j] * Eigen::MatrixXcd::Identity(n, n);
  return G;
}

Eigen::MatrixXcd dec_amplification(const Scheme& s, const Eigen::MatrixXcd& M,
                                   const Eigen::VectorXd& ML, const Eigen::MatrixXcd& R,
                                   double dt) {
  const int n = static_cast<int>(M.rows());
  const int nsub = static_cast<int>(s.rho.rows());
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(n, n);
  const Eigen::VectorXcd inv = ML.cwiseInverse().cast<std::complex<double>>();
  std::vector<Eigen::MatrixXcd> u(nsub + 1, I);
  for (int k = 0; k < s.corrections; ++k) {
    std::vector<Eigen::MatrixXcd> Ru(nsub + 1);
    for (int z = 0; z <= nsub; ++z) Ru[z] = R * u[z];
    std::vector<Eigen::MatrixXcd> next = u;
    for (int m = 1; m <= nsub; ++m) {
      Eigen::MatrixXcd L2 = M * (u[m] - I);
      for (int z = 0; z <= nsub; ++z) L2 += (dt * s.rho(m - 1, z)) * Ru[z];
      next[m] = u[m] - inv.asDiagonal() * L2;
    }
    u = std::move(next);
  }
  return u[nsub];
}

TimeStepper::TimeStepper(Scheme scheme, int n) : scheme_(std::move(scheme)), n_(n) {
  const int count = scheme_.kind == SchemeKind::DeC ? static_cast<int>(scheme_.rho.rows()) + 1
                                                    : scheme_.stages + 1;
  stages_.assign(count, Eigen::VectorXd::Zero(n));
  slopes_.assign(count, Eigen::VectorXd::Zero(n));
  work_ = Eigen::VectorXd::Zero(n);
  work2_ = Eigen::VectorXd::Zero(n);
}

int TimeStepper::evaluations_per_step() const {
  if (scheme_.kind == SchemeKind::DeC) {
    const int M = static_cast<int>(scheme_.rho.rows());
    return 1 + (scheme_.corrections - 1) * M;
  }
  return scheme_.stages;
}

void TimeStepper::step(OdeSystem& sys, double t, double dt, Eigen::VectorXd& u) {
  sys.begin_step(t, u);
  switch (scheme_.kind) {
    case SchemeKind::RK: step_rk(sys, t, dt, u); break;
    case SchemeKind::SSPRK: step_ssprk(sys, t, dt, u); break;
    case SchemeKind::DeC: step_dec(sys, t, dt, u); break;
  }
}

void TimeStepper::step_rk(OdeSystem& sys, double t, double dt, Eigen::VectorXd& u) {
  const int s = scheme_.stages;
  std::vector<const double*> ptr;
  std::vector<double> coef;
  for (int i = 0; i < s; ++i) {
    ptr.assign(1, u.data());
    coef.assign(1, 1.0);
    for (int j = 0; j < i; ++j)
      if (scheme_.a(i, j) != 0.0) {
        ptr.push_back(slopes_[j].data());
        coef.push_back(dt * scheme_.a(i, j));
      }
    kernels::lincomb(n_, static_cast<int>(ptr.size()), coef.data(), ptr.data(), work_.data());
    const double ti = t + scheme_.c[i] * dt;
    if (i > 0) sys.impose(ti, work_);
    sys.rhs(ti, work_, slopes_[i]);
  }
  ptr.assign(1, u.data());
  coef.assign(1, 1.0);
  for (int i = 0; i < s; ++i) {
    ptr.push_back(slopes_[i].data());
    coef.push_back(dt * scheme_.b[i]);
  }
  kernels::lincomb(n_, static_cast<int>(ptr.size()), coef.data(), ptr.data(), work_.data());
  u.swap(work_);
  sys.impose(t + dt, u);
}

void TimeStepper::step_ssprk(OdeSystem& sys, double t, double dt, Eigen::VectorXd& u) {
  const int s = scheme_.stages;
  stages_[0] = u;
  std::vector<const double*> ptr;
  std::vector<double> coef;
  std::vector<char> have(s + 1, 0);
  for (int r = 0; r < s; ++r) {
    ptr.clear();
    coef.clear();
    for (int j = 0; j <= r; ++j) {
      if (scheme_.gamma(r, j) != 0.0) {
        ptr.push_back(stages_[j].data());
        coef.push_back(scheme_.gamma(r, j));
      }
      if (scheme_.mu(r, j) != 0.0) {
        if (!have[j]) {
          sys.rhs(t + scheme_.c[j] * dt, stages_[j], slopes_[j]);
          have[j] = 1;
        }
        ptr.push_back(slopes_[j].data());
        coef.push_back(dt * scheme_.mu(r, j));
      }
    }
    kernels::lincomb(n_, static_cast<int>(ptr.size()), coef.data(), ptr.data(),
                     stages_[r + 1].data());
    sys.impose(t + scheme_.c[r + 1] * dt, stages_[r + 1]);
  }
  u = stages_[s];
}

void TimeStepper::step_dec(OdeSystem& sys, double t, double dt, Eigen::VectorXd& u) {
  const int M = static_cast<int>(scheme_.rho.rows());
  const Eigen::VectorXd& ML = sys.lumped_mass();
  for (int m = 0; m <= M; ++m) stages_[m] = u;
  sys.residual(t, u, slopes_[0]);
  std::vector<Eigen::VectorXd> next(M + 1);
  for (int k = 0; k < scheme_.corrections; ++k) {
    for (int z = 1; z <= M && k > 0; ++z)
      sys.residual(t + scheme_.beta[z] * dt, stages_[z], slopes_[z]);
    if (k == 0)
      for (int z = 1; z <= M; ++z) slopes_[z] = slopes_[0];
    const bool last = k + 1 == scheme_.corrections;
    for (int m = last ? M : 1; m <= M; ++m) {
      work_ = stages_[m] - u;
      sys.apply_mass(work_, work2_);
      for (int z = 0; z <= M; ++z) kernels::axpy(n_, dt * scheme_.rho(m - 1, z), slopes_[z].data(), work2_.data());
      next[m] = stages_[m] - work2_.cwiseQuotient(ML);
      sys.impose(t + scheme_.beta[m] * dt, next[m]);
    }
    for (int m = last ? M : 1; m <= M; ++m) stages_[m].swap(next[m]);
  }
  u = stages_[M];
}

}  // namespace stabfem
