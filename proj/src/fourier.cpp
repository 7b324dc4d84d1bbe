#include "stabfem/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <thread>

#include <Eigen/Eigenvalues>

namespace stabfem {

namespace {

constexpr double kPi = std::numbers::pi;
using cplx = std::complex<double>;

/// Principal index among eigenvectors of A by M-weighted overlap with the wave.
int select_principal(const Eigen::MatrixXcd& vectors, const Eigen::VectorXcd& values,
                     const Eigen::MatrixXcd& M, const Eigen::VectorXcd& wave, bool have_prev,
                     cplx prev) {
  const Eigen::VectorXcd Mw = M * wave;
  const double wn = std::sqrt(std::abs(wave.dot(Mw)));
  const int n = static_cast<int>(values.size());
  std::vector<double> overlap(n);
  double best = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXcd v = vectors.col(i);
    const double vn = std::sqrt(std::abs(v.dot(M * v)));
    overlap[i] = vn > 0 ? std::abs(v.dot(Mw)) / (vn * wn) : 0.0;
    best = std::max(best, overlap[i]);
  }
  int pick = -1;
  double pick_score = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    if (overlap[i] < 0.9 * best) continue;
    const double score = have_prev ? std::abs(values[i] - prev) : -overlap[i];
    if (score < pick_score) {
      pick_score = score;
      pick = i;
    }
  }
  return pick;
}

double damping(cplx g, double dt) {
  const double m = std::abs(g);
  return m > 0 ? std::log(m) / dt : -std::numeric_limits<double>::infinity();
}

double unwrap(double w, double prev, double period) {
  while (w - prev > 0.5 * period) w -= period;
  while (prev - w > 0.5 * period) w += period;
  return w;
}

}  // namespace

ModeSpectrum mode_spectrum(const Eigen::VectorXcd& ev, double dt) {
  ModeSpectrum s;
  s.eigenvalues = ev;
  const int n = static_cast<int>(ev.size());
  s.eps.resize(n);
  s.omega.resize(n);
  for (int i = 0; i < n; ++i) {
    s.eps[i] = damping(ev[i], dt);
    s.omega[i] = std::atan2(-ev[i].imag(), ev[i].real()) / dt;
  }
  return s;
}

double dispersion_error(const std::vector<double>& k, const std::vector<double>& eps,
                        const std::vector<double>& omega, const std::vector<double>& omega_exact) {
  if (k.size() < 2 || eps.size() != k.size() || omega.size() != k.size() ||
      omega_exact.size() != k.size())
    throw InvalidArgument("dispersion error needs at least two matching samples");
  auto f = [&](std::size_t i) {
    const double e = std::exp(eps[i]);
    const double dw = omega[i] - omega_exact[i];
    return (e - 1.0) * (e - 1.0) + e * dw * dw;
  };
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < k.size(); ++i) sum += 0.5 * (k[i + 1] - k[i]) * (f(i) + f(i + 1));
  return std::sqrt(3.0 / (2.0 * kPi) * sum);
}

FourierAnalyzer::FourierAnalyzer(Family family, int degree, Pattern pattern, Scheme scheme)
    : element_(&reference_element(family, degree)),
      unit_(build_periodic_unit(pattern, *element_, static_cast<double>(degree))),
      ops_(build_unit_operators(unit_, *element_)),
      scheme_(std::move(scheme)),
      nu_(stability_polynomial(scheme_)) {
  const Eigen::MatrixXcd M0 = ops_.mass.symbol(0.0, 0.0);
  lumped_ = M0.real().rowwise().sum();
  if (scheme_.kind == SchemeKind::DeC) {
    if (family == Family::Basic && degree > 1)
      throw InvalidArgument("DeC needs positive basis integrals; " + element_->name() +
                            " has non-positive ones");
    if (lumped_.minCoeff() <= 0.0)
      throw InvalidArgument("DeC needs a positive lumped mass");
  }
}

bool FourierAnalyzer::spectral_shortcut(const StabilizationConfig& stab) const {
  if (scheme_.kind != SchemeKind::DeC) return true;
  const bool supg = stab.kind == Stabilization::SUPG && stab.delta != 0.0;
  return element_->family == Family::Cubature && !supg;
}

Symbols FourierAnalyzer::symbols(const StabilizationConfig& stab, double phi, double tx,
                                 double ty) const {
  return assemble_symbols(ops_, unit_, stab, {std::cos(phi), std::sin(phi)}, tx, ty);
}

Eigen::MatrixXcd FourierAnalyzer::semi_discrete(const StabilizationConfig& stab, double phi,
                                                double tx, double ty) const {
  return semi_discrete_operator(symbols(stab, phi, tx, ty), {std::cos(phi), std::sin(phi)});
}

Eigen::MatrixXcd FourierAnalyzer::amplification(const Symbols& s, double phi, double cfl) const {
  const Vec2 a{std::cos(phi), std::sin(phi)};
  const double step = dt(cfl);
  if (scheme_.kind == SchemeKind::DeC) {
    const Eigen::MatrixXcd R = a.x * s.Kx + a.y * s.Ky + s.S;
    return dec_amplification(scheme_, s.M + s.M_supg, lumped_, R, step);
  }
  return polynomial_amplification(scheme_, semi_discrete_operator(s, a), step);
}

Eigen::MatrixXcd FourierAnalyzer::amplification(const StabilizationConfig& stab, double phi,
                                                double tx, double ty, double cfl) const {
  return amplification(symbols(stab, phi, tx, ty), phi, cfl);
}

Eigen::VectorXcd FourierAnalyzer::plane_wave(double tx, double ty) const {
  const auto& coords = unit_.dofs.dof_coords;
  Eigen::VectorXcd v(static_cast<int>(coords.size()));
  for (std::size_t j = 0; j < coords.size(); ++j)
    v[j] = std::polar(1.0, (tx * coords[j].x + ty * coords[j].y) / unit_.dx);
  return v;
}

std::vector<std::array<double, 2>> FourierAnalyzer::theta_samples(double phi,
                                                                  const AnalysisOptions& o) const {
  const double tmax = o.theta_max > 0 ? o.theta_max : kPi / element_->max_edge_node_gap;
  std::vector<std::array<double, 2>> out;
  if (o.theta_grid) {
    for (int i = 0; i < o.n_theta; ++i)
      for (int j = 0; j < o.n_theta; ++j) {
        const double tx = -tmax + 2.0 * tmax * (i + 0.5) / o.n_theta;
        const double ty = -tmax + 2.0 * tmax * (j + 0.5) / o.n_theta;
        out.push_back({tx, ty});
      }
    return out;
  }
  for (int i = 1; i <= o.n_theta; ++i) {
    const double t = tmax * i / o.n_theta;
    out.push_back({t * std::cos(phi), t * std::sin(phi)});
  }
  return out;
}

std::vector<double> FourierAnalyzer::phi_samples(const AnalysisOptions& o) const {
  const double range = unit_.pattern == Pattern::X ? 0.5 * kPi : kPi;
  std::vector<double> out(o.n_phi);
  for (int i = 0; i < o.n_phi; ++i) out[i] = range * i / o.n_phi;
  return out;
}

std::vector<double> FourierAnalyzer::max_damping(const StabilizationConfig& stab, double phi,
                                                 const std::vector<double>& cfls,
                                                 const AnalysisOptions& o) const {
  std::vector<double> worst(cfls.size(), -std::numeric_limits<double>::infinity());
  const bool shortcut = spectral_shortcut(stab);
  for (const auto& th : theta_samples(phi, o)) {
    const Symbols s = symbols(stab, phi, th[0], th[1]);
    if (shortcut) {
      const Eigen::MatrixXcd A = semi_discrete_operator(s, {std::cos(phi), std::sin(phi)});
      Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A, false);
      if (es.info() != Eigen::Success) {
        std::fill(worst.begin(), worst.end(), std::numeric_limits<double>::infinity());
        return worst;
      }
      for (std::size_t c = 0; c < cfls.size(); ++c) {
        const double step = dt(cfls[c]);
        for (int i = 0; i < es.eigenvalues().size(); ++i)
          worst[c] = std::max(worst[c], damping(eval_polynomial(nu_, -step * es.eigenvalues()[i]), step));
      }
    } else {
      for (std::size_t c = 0; c < cfls.size(); ++c) {
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(amplification(s, phi, cfls[c]), false);
        if (es.info() != Eigen::Success) {
          worst[c] = std::numeric_limits<double>::infinity();
          continue;
        }
        const double step = dt(cfls[c]);
        for (int i = 0; i < es.eigenvalues().size(); ++i)
          worst[c] = std::max(worst[c], damping(es.eigenvalues()[i], step));
      }
    }
  }
  return worst;
}

DispersionCurves FourierAnalyzer::dispersion(const StabilizationConfig& stab, double phi,
                                             double cfl, const AnalysisOptions& o) const {
  return dispersion(stab, phi, std::vector<double>{cfl}, o).front();
}

std::vector<DispersionCurves> FourierAnalyzer::dispersion(const StabilizationConfig& stab,
                                                          double phi,
                                                          const std::vector<double>& cfls,
                                                          const AnalysisOptions& o) const {
  if (o.n_k < 2) throw InvalidArgument("dispersion needs at least two k samples");
  const int d = modes();
  const int nk = o.n_k;
  const int nc = static_cast<int>(cfls.size());
  const double p = element_->degree;
  const Vec2 a{std::cos(phi), std::sin(phi)};
  const bool shortcut = spectral_shortcut(stab);
  std::vector<DispersionCurves> out(nc);
  for (auto& c : out) {
    c.k.resize(nk);
    c.eps.resize(nk);
    c.omega.resize(nk);
    c.omega_exact.resize(nk);
    c.principal.resize(nk);
    c.all_eps.resize(nk, d);
    c.all_omega.resize(nk, d);
  }
  std::vector<cplx> prev(nc);
  bool have_prev = false;
  for (int ik = 0; ik < nk; ++ik) {
    const double k = (2.0 * kPi / 3.0) * ik / (nk - 1);
    const double tx = k * p * a.x, ty = k * p * a.y;
    const Symbols s = symbols(stab, phi, tx, ty);
    const Eigen::VectorXcd wave = plane_wave(tx, ty);
    auto record = [&](int c, const Eigen::VectorXcd& g, int pick) {
      const double step = dt(cfls[c]);
      const ModeSpectrum ms = mode_spectrum(g, step);
      auto& cv = out[c];
      cv.k[ik] = k;
      cv.omega_exact[ik] = k;
      cv.principal[ik] = pick;
      cv.all_eps.row(ik) = ms.eps.transpose();
      cv.all_omega.row(ik) = ms.omega.transpose();
      cv.eps[ik] = ms.eps[pick];
      const double w = ms.omega[pick];
      cv.omega[ik] = ik == 0 ? w : unwrap(w, cv.omega[ik - 1], 2.0 * kPi / step);
    };
    if (shortcut) {
      const Eigen::MatrixXcd A = semi_discrete_operator(s, a);
      Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A, true);
      if (es.info() != Eigen::Success) throw NumericalError("eigen-decomposition failed");
      const int pick = select_principal(es.eigenvectors(), es.eigenvalues(), s.M, wave,
                                        have_prev, prev[0]);
      prev[0] = es.eigenvalues()[pick];
      for (int c = 0; c < nc; ++c) {
        const double step = dt(cfls[c]);
        Eigen::VectorXcd g(d);
        for (int i = 0; i < d; ++i) g[i] = eval_polynomial(nu_, -step * es.eigenvalues()[i]);
        record(c, g, pick);
      }
    } else {
      for (int c = 0; c < nc; ++c) {
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(amplification(s, phi, cfls[c]), true);
        if (es.info() != Eigen::Success) throw NumericalError("eigen-decomposition failed");
        const int pick = select_principal(es.eigenvectors(), es.eigenvalues(), s.M, wave,
                                          have_prev, prev[c]);
        prev[c] = es.eigenvalues()[pick];
        record(c, es.eigenvalues(), pick);
      }
    }
    have_prev = true;
  }
  return out;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (n < 1) throw InvalidArgument("grid needs at least one point");
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = std::pow(10.0, n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
  return g;
}

StabilityMap stability_scan(const ScanConfig& cfg) {
  if (cfg.cfl.empty() || cfg.delta.empty()) throw InvalidArgument("empty (cfl, delta) grid");
  const FourierAnalyzer an(cfg.family, cfg.degree, cfg.pattern,
                           scheme_for_degree(cfg.scheme, cfg.degree));
  const auto phis = an.phi_samples(cfg.options);
  const int nd = static_cast<int>(cfg.delta.size());
  const int nc = static_cast<int>(cfg.cfl.size());
  const int nphi = static_cast<int>(phis.size());

  // Per-angle results, reduced afterwards in index order.
  std::vector<std::vector<double>> eps(nphi), eta(nphi);
  auto work = [&](int ip) {
    eps[ip].assign(nd * nc, 0.0);
    eta[ip].assign(nd * nc, 0.0);
    for (int id = 0; id < nd; ++id) {
      StabilizationConfig stab{cfg.stabilization, cfg.delta[id], cfg.viscosity, 0.0};
      const auto worst = an.max_damping(stab, phis[ip], cfg.cfl, cfg.options);
      const auto curves = an.dispersion(stab, phis[ip], cfg.cfl, cfg.options);
      for (int ic = 0; ic < nc; ++ic) {
        eps[ip][id * nc + ic] = worst[ic];
        const auto& cv = curves[ic];
        eta[ip][id * nc + ic] = dispersion_error(cv.k, cv.eps, cv.omega, cv.omega_exact);
      }
    }
  };
  const int jobs = std::max(1, std::min(cfg.jobs, nphi));
  if (jobs == 1) {
    for (int ip = 0; ip < nphi; ++ip) work(ip);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t)
      pool.emplace_back([&, t] {
        for (int ip = t; ip < nphi; ip += jobs) work(ip);
      });
    for (auto& th : pool) th.join();
  }

  StabilityMap map;
  map.cfl = cfg.cfl;
  map.delta = cfg.delta;
  map.threshold = cfg.options.threshold;
  map.max_eps.assign(nd * nc, -std::numeric_limits<double>::infinity());
  map.eta.assign(nd * nc, 0.0);
  map.stable.assign(nd * nc, 0);
  for (int ip = 0; ip < nphi; ++ip)
    for (int i = 0; i < nd * nc; ++i) {
      map.max_eps[i] = std::max(map.max_eps[i], eps[ip][i]);
      map.eta[i] = std::max(map.eta[i], eta[ip][i]);
    }
  for (int i = 0; i < nd * nc; ++i)
    map.stable[i] = std::isfinite(map.eta[i]) && map.max_eps[i] <= map.threshold;
  return map;
}

StabilityMap combine_maps(const std::vector<StabilityMap>& maps) {
  if (maps.empty()) throw InvalidArgument("no maps to combine");
  StabilityMap out = maps.front();
  for (std::size_t m = 1; m < maps.size(); ++m) {
    const auto& other = maps[m];
    if (other.cfl != out.cfl || other.delta != out.delta)
      throw InvalidArgument("cannot combine maps on different (cfl, delta) grids");
    for (std::size_t i = 0; i < out.max_eps.size(); ++i) {
      out.max_eps[i] = std::max(out.max_eps[i], other.max_eps[i]);
      out.eta[i] = std::max(out.eta[i], other.eta[i]);
      out.stable[i] = out.stable[i] && other.stable[i];
    }
    out.threshold = std::min(out.threshold, other.threshold);
  }
  return out;
}

Optimum optimize_parameters(const StabilityMap& map, double mu) {
  Optimum best;
  const int nc = static_cast<int>(map.cfl.size());
  const int nd = static_cast<int>(map.delta.size());
  double min_eta = std::numeric_limits<double>::infinity();
  for (int id = 0; id < nd; ++id)
    for (int ic = 0; ic < nc; ++ic)
      if (map.stable_at(id, ic)) min_eta = std::min(min_eta, map.eta_at(id, ic));
  if (!std::isfinite(min_eta)) return best;
  best.min_eta = min_eta;
  for (int id = 0; id < nd; ++id)
    for (int ic = 0; ic < nc; ++ic) {
      if (!map.stable_at(id, ic)) continue;
      const double e = map.eta_at(id, ic);
      if (e > mu * min_eta) continue;
      const double c = map.cfl[ic];
      bool better = !best.found || c > best.cfl ||
                    (c == best.cfl && (e < best.eta || (e == best.eta && map.delta[id] < best.delta)));
      if (better) {
        best.found = true;
        best.cfl_index = ic;
        best.delta_index = id;
        best.cfl = c;
        best.delta = map.delta[id];
        best.eta = e;
      }
    }
  return best;
}

SplitCheck spacetime_split_check(const FourierAnalyzer& an, const StabilizationConfig& stab,
                                 double cfl, const std::vector<double>& phis,
                                 const AnalysisOptions& o) {
  const auto nu = stability_polynomial(an.scheme());
  SplitCheck out;
  out.worst = -1.0;
  const double step = an.dt(cfl);
  for (double phi : phis)
    for (const auto& th : an.theta_samples(phi, o)) {
      Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(an.semi_discrete(stab, phi, th[0], th[1]),
                                                      false);
      if (es.info() != Eigen::Success) throw NumericalError("eigen-decomposition failed");
      for (int i = 0; i < es.eigenvalues().size(); ++i) {
        const cplx z = -step * es.eigenvalues()[i];
        const double g = std::abs(eval_polynomial(nu, z));
        const bool bad = g > 1.0 + 1e-12;
        out.z.push_back(z);
        out.outside.push_back(bad);
        out.num_outside += bad;
        out.worst = std::max(out.worst, g - 1.0);
      }
    }
  return out;
}

void write_map_csv(std::ostream& out, const StabilityMap& map) {
  out << "cfl,delta,max_eps,eta_u,stable\n";
  out.precision(10);
  for (std::size_t id = 0; id < map.delta.size(); ++id)
    for (std::size_t ic = 0; ic < map.cfl.size(); ++ic)
      out << map.cfl[ic] << ',' << map.delta[id] << ',' << map.eps_at(id, ic) << ','
          << map.eta_at(id, ic) << ',' << (map.stable_at(id, ic) ? 1 : 0) << '\n';
}

void write_curves_csv(std::ostream& out, const DispersionCurves& c) {
  out << "k,mode_index,omega,eps,principal\n";
  out.precision(10);
  for (std::size_t ik = 0; ik < c.k.size(); ++ik)
    for (int m = 0; m < c.all_eps.cols(); ++m)
      out << c.k[ik] << ',' << m << ',' << c.all_omega(ik, m) << ',' << c.all_eps(ik, m) << ','
          << (m == c.principal[ik] ? 1 : 0) << '\n';
}

}  // namespace stabfem
