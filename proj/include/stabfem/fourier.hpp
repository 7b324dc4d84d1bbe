#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stabfem/assembly.hpp"
#include "stabfem/common.hpp"
#include "stabfem/mesh.hpp"
#include "stabfem/reference_element.hpp"
#include "stabfem/timeint.hpp"

namespace stabfem {

/// Damping and phase of every eigenvalue of an amplification matrix.
struct ModeSpectrum {
  Eigen::VectorXcd eigenvalues;
  Eigen::VectorXd eps;    ///< log|lambda| / dt, -inf for lambda = 0
  Eigen::VectorXd omega;  ///< -arg(lambda) / dt
  int principal = -1;
};

ModeSpectrum mode_spectrum(const Eigen::VectorXcd& eigenvalues, double dt);

/// Principal-mode curves along k for one (cfl, delta, phi), plus all modes.
struct DispersionCurves {
  std::vector<double> k;
  std::vector<double> eps;    ///< principal mode
  std::vector<double> omega;  ///< principal mode, unwrapped along k
  std::vector<double> omega_exact;
  /// All modes: (k index, mode) -> value.
  Eigen::MatrixXd all_eps, all_omega;
  std::vector<int> principal;
};

/// eta^2 = (3/2pi) [int (e^eps - 1)^2 dk + int e^eps (omega - omega_ex)^2 dk]
/// by the trapezoid rule on the sampled k.
double dispersion_error(const std::vector<double>& k, const std::vector<double>& eps,
                        const std::vector<double>& omega, const std::vector<double>& omega_exact);

struct AnalysisOptions {
  /// Samples of |theta| along the advection ray.
  int n_theta = 33;
  /// Advection angles in [0, pi/2) for X and [0, pi) for T.
  int n_phi = 16;
  /// Samples of k in [0, 2pi/3] for the dispersion error.
  int n_k = 33;
  double threshold = 1e-7;
  /// Sample theta on a full 2D grid instead of the advection ray.
  bool theta_grid = false;
  /// Largest |theta|; <= 0 uses the Nyquist bound of the element nodes.
  double theta_max = 0.0;
};

/// Fully discrete analysis on the periodic unit of one pattern, scaled so
/// that dx / p = 1 and |a| = 1.
class FourierAnalyzer {
 public:
  FourierAnalyzer(Family family, int degree, Pattern pattern, Scheme scheme);

  const ReferenceElement& element() const { return *element_; }
  const PeriodicUnit& unit() const { return unit_; }
  const UnitOperators& operators() const { return ops_; }
  const Scheme& scheme() const { return scheme_; }
  int modes() const { return unit_.num_modes(); }
  double dx() const { return unit_.dx; }
  double dt(double cfl) const { return cfl * unit_.dx; }
  /// True if the eigenvalues of G follow from those of the semi-discrete operator.
  bool spectral_shortcut(const StabilizationConfig& stab) const;

  Symbols symbols(const StabilizationConfig& stab, double phi, double tx, double ty) const;
  /// A with dU/dt = -A U.
  Eigen::MatrixXcd semi_discrete(const StabilizationConfig& stab, double phi, double tx,
                                 double ty) const;
  Eigen::MatrixXcd amplification(const StabilizationConfig& stab, double phi, double tx,
                                 double ty, double cfl) const;
  /// Amplification from precomputed symbols.
  Eigen::MatrixXcd amplification(const Symbols& s, double phi, double cfl) const;

  /// Sampled exact plane wave on the owned DOFs.
  Eigen::VectorXcd plane_wave(double tx, double ty) const;

  /// Reduced wavenumbers sampled by the stability check for one angle.
  std::vector<std::array<double, 2>> theta_samples(double phi, const AnalysisOptions& o) const;
  std::vector<double> phi_samples(const AnalysisOptions& o) const;

  /// Max damping over all modes and the sampled theta for one angle and
  /// several CFL values.
  std::vector<double> max_damping(const StabilizationConfig& stab, double phi,
                                  const std::vector<double>& cfls,
                                  const AnalysisOptions& o) const;

  DispersionCurves dispersion(const StabilizationConfig& stab, double phi, double cfl,
                              const AnalysisOptions& o) const;
  /// Dispersion curves for several CFL values sharing one eigen-decomposition per k.
  std::vector<DispersionCurves> dispersion(const StabilizationConfig& stab, double phi,
                                           const std::vector<double>& cfls,
                                           const AnalysisOptions& o) const;

 private:
  const ReferenceElement* element_;
  PeriodicUnit unit_;
  UnitOperators ops_;
  Scheme scheme_;
  std::vector<double> nu_;
  Eigen::VectorXd lumped_;
};

/// Per-(cfl, delta) stability map.
struct StabilityMap {
  std::vector<double> cfl, delta;
  /// Row-major (delta index, cfl index).
  std::vector<double> max_eps;
  std::vector<double> eta;
  std::vector<char> stable;
  double threshold = 1e-7;

  double& eps_at(int id, int ic) { return max_eps[id * cfl.size() + ic]; }
  double eps_at(int id, int ic) const { return max_eps[id * cfl.size() + ic]; }
  double eta_at(int id, int ic) const { return eta[id * cfl.size() + ic]; }
  bool stable_at(int id, int ic) const { return stable[id * cfl.size() + ic] != 0; }
};

struct Optimum {
  bool found = false;
  int cfl_index = -1, delta_index = -1;
  double cfl = 0.0, delta = 0.0, eta = 0.0, min_eta = 0.0;
};

struct ScanConfig {
  Family family = Family::Basic;
  int degree = 1;
  Pattern pattern = Pattern::X;
  Stabilization stabilization = Stabilization::SUPG;
  SchemeKind scheme = SchemeKind::SSPRK;
  double viscosity = 0.0;
  std::vector<double> cfl, delta;
  AnalysisOptions options;
  int jobs = 1;
};

/// n log-spaced values from 10^lo to 10^hi.
std::vector<double> log_grid(double lo, double hi, int n);

StabilityMap stability_scan(const ScanConfig& config);
/// Stable iff stable on every map; eta is the maximum.
StabilityMap combine_maps(const std::vector<StabilityMap>& maps);
Optimum optimize_parameters(const StabilityMap& map, double mu = 10.0);

struct SplitCheck {
  /// z = -dt * lambda(A) over all sampled angles and wavenumbers.
  std::vector<std::complex<double>> z;
  std::vector<char> outside;
  int num_outside = 0;
  /// Max |Gamma(z)| - 1.
  double worst = 0.0;
};

SplitCheck spacetime_split_check(const FourierAnalyzer& analyzer,
                                 const StabilizationConfig& stab, double cfl,
                                 const std::vector<double>& phis, const AnalysisOptions& o);

void write_map_csv(std::ostream& out, const StabilityMap& map);
void write_curves_csv(std::ostream& out, const DispersionCurves& curves);

}  // namespace stabfem
