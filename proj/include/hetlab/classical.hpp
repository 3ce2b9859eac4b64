#pragma once

// Classical generalized oscillator y'' + Omega^2(t) y = 0, the
// Ermakov-Milne-Pinney amplitude sigma, the phase computed by quadrature
// and by the logarithmic generator F(t), and the coherent-state
// correspondence for the phase-dressed boson operators.

#include <complex>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "hetlab/errors.hpp"

namespace hetlab {

class StepRejected : public Error {
 public:
  using Error::Error;
};
class ConstraintViolation : public Error {
 public:
  using Error::Error;
};
class NonPositiveSigma : public Error {
 public:
  using Error::Error;
};
class UnwrapFailure : public Error {
 public:
  using Error::Error;
};
class ProfileParseError : public Error {
 public:
  using Error::Error;
};

class OmegaSquaredProfile {
 public:
  enum class Kind { Constant, Linear, Tabulated };

  static OmegaSquaredProfile constant(double omega0);
  /// Omega^2(t) = c0 + c1 t
  static OmegaSquaredProfile linear(double c0, double c1);
  /// Piecewise-linear through (t_i, v_i); times strictly increasing. Held
  /// constant outside the table.
  static OmegaSquaredProfile tabulated(std::vector<double> t, std::vector<double> v);

  double operator()(double t) const;
  Kind kind() const { return kind_; }
  /// omega0 for a constant profile.
  std::optional<double> constant_omega() const;
  std::string describe() const;

 private:
  Kind kind_ = Kind::Constant;
  double c0_ = 1.0;
  double c1_ = 0.0;
  std::vector<double> t_;
  std::vector<double> v_;
};

/// Two-column CSV (t, omega_squared), optional header line.
OmegaSquaredProfile parse_profile_csv(std::istream& in);
OmegaSquaredProfile load_profile_csv(const std::string& path);

struct OscillatorSpec {
  OmegaSquaredProfile omega_squared = OmegaSquaredProfile::constant(1.0);
  double t0 = 0.0;
  double t1 = 1.0;
  double step = 1e-3;
  // y1(t0), y1'(t0), y2(t0), y2'(t0)
  double y1 = 1.0, dy1 = 0.0;
  double y2 = 0.0, dy2 = 1.0;

  void validate() const;
  /// cos / sin pair for a constant profile: y1 = cos w t, y2 = sin w t.
  static OscillatorSpec harmonic(double omega0, double t0 = 0.0, double t1 = 1.0, double step = 1e-3);
};

/// Combination constants of sigma^2 = Ae y1^2 + Be y2^2 + 2 Ce y1 y2
/// (renamed from A, B, C to stay clear of the heterodyne weights).
struct EmpConstants {
  double Ae = 1.0;
  double Be = 1.0;
  double Ce = 0.0;
  double W0 = 1.0;

  /// Ae Be - Ce^2 - 1/W0^2
  double constraint_defect() const { return Ae * Be - Ce * Ce - 1.0 / (W0 * W0); }
  /// Ae = Be = 1/|W0|, Ce = 0.
  static EmpConstants diagonal(double w0);
};

struct ClassicalTrajectory {
  std::vector<double> t;
  std::vector<double> y1, dy1, y2, dy2;
  OmegaSquaredProfile omega_squared;
  double W0 = 0.0;
  /// max_i |W(t_i) - W0| / |W0|
  double wronskian_drift = 0.0;
  /// largest endpoint change between the step and half-step runs
  double halving_change = 0.0;
};

/// Fourth-order Runge-Kutta for both solutions, with a step-halving
/// acceptance test (StepRejected above 1e-6).
ClassicalTrajectory integrate_oscillator(const OscillatorSpec& spec);

struct EmpAmplitude {
  std::vector<double> sigma;
  /// max |sigma'' + Omega^2 sigma - sigma^-3| over the grid, sigma'' from the
  /// stored (y, y') with y'' = -Omega^2 y.
  double residual = 0.0;
  /// Same with sigma'' by second differences of sigma; O(h^2), diagnostic.
  double fd_residual = 0.0;
};

EmpAmplitude emp_amplitude(const ClassicalTrajectory& traj, const EmpConstants& consts);

/// alpha, beta, A_psi, B_psi for which |psi(t)|^2 reproduces sigma^2 and F(t)
/// increases with theta_cl.
struct PhaseGenerator {
  double alpha = 0.0;
  double beta = 0.0;
  double a_psi = 1.0;
  double b_psi = 1.0;
};

PhaseGenerator phase_generator_for(const EmpConstants& consts);

struct PhaseRoutes {
  std::vector<double> by_quadrature;  // trapezoid integral of 1/sigma^2
  std::vector<double> by_generator;   // F(t) - F(t0), F = arg psi(t) unwrapped
  double max_discrepancy = 0.0;
};

PhaseRoutes classical_phase(const ClassicalTrajectory& traj, const EmpConstants& consts, double alpha, double beta,
                            double a_psi, double b_psi);

/// Fits y1 = sigma (c1 cos theta + c2 sin theta) by least squares and
/// returns the max misfit. Diagnostic only.
double amplitude_phase_misfit(const ClassicalTrajectory& traj, const std::vector<double>& sigma,
                              const std::vector<double>& theta);

struct CoherentExpectations {
  std::complex<double> a_t;       // <a(t)>
  std::complex<double> b_dag_t;   // <b^dag(t)>
  std::complex<double> product;   // <a(t)><b^dag(t)>
  double tail_bound = 0.0;
  bool tail_ok = true;
};

/// Expectations of the phase-dressed a(t) and b^dag(t) in |gamma>|gamma> on
/// a d x d two-mode truncation.
CoherentExpectations coherent_expectations(std::complex<double> gamma, double omega0, double t, int d);

struct ClassicalReport {
  std::string profile;
  double W0 = 0.0;
  double wronskian_drift = 0.0;
  double halving_change = 0.0;
  double emp_residual = 0.0;
  double emp_fd_residual = 0.0;  // diagnostic
  double route_discrepancy = 0.0;
  double theta_end = 0.0;
  double elapsed = 0.0;  // t1 - t0
  std::optional<double> constant_omega_error;  // |theta_cl - omega0 (t - t0)|, max over grid
  double amplitude_phase_misfit = 0.0;
  bool theta_increasing = true;
};

/// Integrates, builds sigma with diagonal constants, and runs both phase
/// routes.
ClassicalReport run_classical(const OscillatorSpec& spec);

}  // namespace hetlab
