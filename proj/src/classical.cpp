#include "hetlab/classical.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "hetlab/fock.hpp"

namespace hetlab {

OmegaSquaredProfile OmegaSquaredProfile::constant(double omega0) {
  OmegaSquaredProfile p;
  p.kind_ = Kind::Constant;
  p.c0_ = omega0 * omega0;
  p.c1_ = 0.0;
  return p;
}

OmegaSquaredProfile OmegaSquaredProfile::linear(double c0, double c1) {
  OmegaSquaredProfile p;
  p.kind_ = Kind::Linear;
  p.c0_ = c0;
  p.c1_ = c1;
  return p;
}

OmegaSquaredProfile OmegaSquaredProfile::tabulated(std::vector<double> t, std::vector<double> v) {
  if (t.size() != v.size() || t.size() < 2) {
    throw ProfileParseError("tabulated profile needs at least two (t, omega_squared) rows");
  }
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) throw ProfileParseError("tabulated profile times must be strictly increasing");
  }
  OmegaSquaredProfile p;
  p.kind_ = Kind::Tabulated;
  p.t_ = std::move(t);
  p.v_ = std::move(v);
  return p;
}

double OmegaSquaredProfile::operator()(double t) const {
  switch (kind_) {
    case Kind::Constant: return c0_;
    case Kind::Linear: return c0_ + c1_ * t;
    case Kind::Tabulated: {
      if (t <= t_.front()) return v_.front();
      if (t >= t_.back()) return v_.back();
      const auto it = std::upper_bound(t_.begin(), t_.end(), t);
      const auto i = static_cast<std::size_t>(it - t_.begin());
      const double w = (t - t_[i - 1]) / (t_[i] - t_[i - 1]);
      return (1.0 - w) * v_[i - 1] + w * v_[i];
    }
  }
  return 0.0;
}

std::optional<double> OmegaSquaredProfile::constant_omega() const {
  if (kind_ != Kind::Constant) return std::nullopt;
  return std::sqrt(c0_);
}

std::string OmegaSquaredProfile::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::Constant: os << "constant(omega0=" << std::sqrt(c0_) << ")"; break;
    case Kind::Linear: os << "linear(c0=" << c0_ << ",c1=" << c1_ << ")"; break;
    case Kind::Tabulated: os << "tabulated(" << t_.size() << " rows)"; break;
  }
  return os.str();
}

OmegaSquaredProfile parse_profile_csv(std::istream& in) {
  std::vector<double> ts, vs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::stringstream row(line);
    std::string a, b, extra;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || std::getline(row, extra, ',')) {
      throw ProfileParseError("line " + std::to_string(lineno) + ": expected two comma-separated columns");
    }
    try {
      std::size_t ea = 0, eb = 0;
      const double t = std::stod(a, &ea);
      const double v = std::stod(b, &eb);
      if (a.find_first_not_of(" \t", ea) != std::string::npos || b.find_first_not_of(" \t", eb) != std::string::npos) {
        throw std::invalid_argument("trailing characters");
      }
      ts.push_back(t);
      vs.push_back(v);
    } catch (const std::logic_error&) {
      if (lineno == 1 && ts.empty()) continue;  // header
      throw ProfileParseError("line " + std::to_string(lineno) + ": not a numeric (t, omega_squared) pair");
    }
  }
  return OmegaSquaredProfile::tabulated(std::move(ts), std::move(vs));
}

OmegaSquaredProfile load_profile_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ProfileParseError("cannot open profile file " + path);
  return parse_profile_csv(in);
}

void OscillatorSpec::validate() const {
  if (!(t1 > t0)) throw DomainError("OscillatorSpec: t1 must exceed t0");
  if (!(step > 0.0)) throw DomainError("OscillatorSpec: step must be positive");
  if (step > (t1 - t0) / 10.0) throw DomainError("OscillatorSpec: step must not exceed (t1 - t0) / 10");
  if (std::abs(y1 * dy2 - dy1 * y2) == 0.0) throw DomainError("OscillatorSpec: initial data give dependent solutions");
}

OscillatorSpec OscillatorSpec::harmonic(double omega0, double t0, double t1, double step) {
  OscillatorSpec s;
  s.omega_squared = OmegaSquaredProfile::constant(omega0);
  s.t0 = t0;
  s.t1 = t1;
  s.step = step;
  s.y1 = std::cos(omega0 * t0);
  s.dy1 = -omega0 * std::sin(omega0 * t0);
  s.y2 = std::sin(omega0 * t0);
  s.dy2 = omega0 * std::cos(omega0 * t0);
  return s;
}

EmpConstants EmpConstants::diagonal(double w0) {
  const double a = 1.0 / std::abs(w0);
  return {a, a, 0.0, w0};
}

namespace {

struct State {
  double y, dy;
};

struct Run {
  std::vector<double> t, y1, dy1, y2, dy2;
};

State rk4_step(const OmegaSquaredProfile& w2, double t, double h, State s) {
  auto f = [&](double tt, State x) { return State{x.dy, -w2(tt) * x.y}; };
  const State k1 = f(t, s);
  const State k2 = f(t + h / 2, {s.y + h / 2 * k1.y, s.dy + h / 2 * k1.dy});
  const State k3 = f(t + h / 2, {s.y + h / 2 * k2.y, s.dy + h / 2 * k2.dy});
  const State k4 = f(t + h, {s.y + h * k3.y, s.dy + h * k3.dy});
  return {s.y + h / 6 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y), s.dy + h / 6 * (k1.dy + 2 * k2.dy + 2 * k3.dy + k4.dy)};
}

Run integrate(const OscillatorSpec& spec, long steps) {
  const double h = (spec.t1 - spec.t0) / static_cast<double>(steps);
  Run r;
  const auto n = static_cast<std::size_t>(steps) + 1;
  r.t.reserve(n);
  r.y1.reserve(n);
  r.dy1.reserve(n);
  r.y2.reserve(n);
  r.dy2.reserve(n);
  State a{spec.y1, spec.dy1};
  State b{spec.y2, spec.dy2};
  for (long i = 0; i <= steps; ++i) {
    const double t = spec.t0 + h * static_cast<double>(i);
    r.t.push_back(t);
    r.y1.push_back(a.y);
    r.dy1.push_back(a.dy);
    r.y2.push_back(b.y);
    r.dy2.push_back(b.dy);
    if (i == steps) break;
    a = rk4_step(spec.omega_squared, t, h, a);
    b = rk4_step(spec.omega_squared, t, h, b);
  }
  return r;
}

}  // namespace

ClassicalTrajectory integrate_oscillator(const OscillatorSpec& spec) {
  spec.validate();
  const long steps = std::max(10L, std::lround((spec.t1 - spec.t0) / spec.step));
  Run coarse = integrate(spec, steps);
  const Run fine = integrate(spec, 2 * steps);

  double change = 0.0;
  change = std::max(change, std::abs(coarse.y1.back() - fine.y1.back()));
  change = std::max(change, std::abs(coarse.dy1.back() - fine.dy1.back()));
  change = std::max(change, std::abs(coarse.y2.back() - fine.y2.back()));
  change = std::max(change, std::abs(coarse.dy2.back() - fine.dy2.back()));
  if (change > 1e-6) {
    throw StepRejected("integrate_oscillator: halving the step moved the endpoint by " + std::to_string(change));
  }

  ClassicalTrajectory out;
  out.t = std::move(coarse.t);
  out.y1 = std::move(coarse.y1);
  out.dy1 = std::move(coarse.dy1);
  out.y2 = std::move(coarse.y2);
  out.dy2 = std::move(coarse.dy2);
  out.omega_squared = spec.omega_squared;
  out.halving_change = change;
  out.W0 = out.y1[0] * out.dy2[0] - out.dy1[0] * out.y2[0];
  for (std::size_t i = 0; i < out.t.size(); ++i) {
    const double w = out.y1[i] * out.dy2[i] - out.dy1[i] * out.y2[i];
    out.wronskian_drift = std::max(out.wronskian_drift, std::abs(w - out.W0) / std::abs(out.W0));
  }
  return out;
}

EmpAmplitude emp_amplitude(const ClassicalTrajectory& traj, const EmpConstants& consts) {
  const double scale = std::max(1.0, 1.0 / (consts.W0 * consts.W0));
  if (std::abs(consts.constraint_defect()) > 1e-10 * scale) {
    throw ConstraintViolation("emp_amplitude: Ae*Be - Ce^2 differs from 1/W0^2 by " +
                              std::to_string(consts.constraint_defect()));
  }
  if (std::abs(consts.W0 - traj.W0) > 1e-8 * std::abs(traj.W0)) {
    throw ConstraintViolation("emp_amplitude: constants were built for W0 = " + std::to_string(consts.W0) +
                              " but the trajectory has W0 = " + std::to_string(traj.W0));
  }

  EmpAmplitude out;
  out.sigma.reserve(traj.t.size());
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    const double y1 = traj.y1[i];
    const double y2 = traj.y2[i];
    const double s2 = consts.Ae * y1 * y1 + consts.Be * y2 * y2 + 2.0 * consts.Ce * y1 * y2;
    if (!(s2 > 0.0)) throw NonPositiveSigma("emp_amplitude: quadratic form is not positive at t = " + std::to_string(traj.t[i]));
    out.sigma.push_back(std::sqrt(s2));

    const double w2 = traj.omega_squared(traj.t[i]);
    const double d1 = traj.dy1[i];
    const double d2 = traj.dy2[i];
    const double ds2 = 2.0 * (consts.Ae * y1 * d1 + consts.Be * y2 * d2 + consts.Ce * (d1 * y2 + y1 * d2));
    const double dds2 = 2.0 * (consts.Ae * (d1 * d1 - w2 * y1 * y1) + consts.Be * (d2 * d2 - w2 * y2 * y2) +
                               consts.Ce * (2.0 * d1 * d2 - 2.0 * w2 * y1 * y2));
    const double s = out.sigma.back();
    const double ds = ds2 / (2.0 * s);
    const double dds = (dds2 - 2.0 * ds * ds) / (2.0 * s);
    out.residual = std::max(out.residual, std::abs(dds + w2 * s - 1.0 / (s * s * s)));
  }
  for (std::size_t i = 1; i + 1 < traj.t.size(); ++i) {
    const double h = traj.t[i + 1] - traj.t[i];
    const double h_prev = traj.t[i] - traj.t[i - 1];
    const double dd = 2.0 * (h_prev * out.sigma[i + 1] - (h + h_prev) * out.sigma[i] + h * out.sigma[i - 1]) /
                      (h * h_prev * (h + h_prev));
    const double s = out.sigma[i];
    const double r = dd + traj.omega_squared(traj.t[i]) * s - 1.0 / (s * s * s);
    out.fd_residual = std::max(out.fd_residual, std::abs(r));
  }
  return out;
}

PhaseGenerator phase_generator_for(const EmpConstants& consts) {
  const double root = std::sqrt(consts.Ae * consts.Be);
  const double cos_diff = -consts.Ce / root;
  const double sin_diff = 1.0 / (consts.W0 * root);
  return {std::atan2(sin_diff, cos_diff), 0.0, consts.Ae, consts.Be};
}

PhaseRoutes classical_phase(const ClassicalTrajectory& traj, const EmpConstants& consts, double alpha, double beta,
                            double a_psi, double b_psi) {
  const EmpAmplitude amp = emp_amplitude(traj, consts);
  const std::size_t n = traj.t.size();

  PhaseRoutes out;
  // Hermite (end-corrected trapezoid) rule; f = 1/sigma^2 has f' = -(sigma^2)' / sigma^4
  auto slope = [&](std::size_t i) {
    const double y1 = traj.y1[i], y2 = traj.y2[i], d1 = traj.dy1[i], d2 = traj.dy2[i];
    const double ds2 = 2.0 * (consts.Ae * y1 * d1 + consts.Be * y2 * d2 + consts.Ce * (d1 * y2 + y1 * d2));
    const double s2 = amp.sigma[i] * amp.sigma[i];
    return -ds2 / (s2 * s2);
  };
  out.by_quadrature.assign(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    const double h = traj.t[i] - traj.t[i - 1];
    const double f0 = 1.0 / (amp.sigma[i - 1] * amp.sigma[i - 1]);
    const double f1 = 1.0 / (amp.sigma[i] * amp.sigma[i]);
    out.by_quadrature[i] = out.by_quadrature[i - 1] + 0.5 * h * (f0 + f1) - h * h / 12.0 * (slope(i) - slope(i - 1));
  }

  const std::complex<double> u = std::sqrt(a_psi) * std::polar(1.0, alpha);
  const std::complex<double> v = -std::sqrt(b_psi) * std::polar(1.0, beta);
  out.by_generator.assign(n, 0.0);
  double f_prev = std::arg(u * traj.y1[0] + v * traj.y2[0]);
  const double f_start = f_prev;
  double unwrapped = f_prev;
  for (std::size_t i = 1; i < n; ++i) {
    const double f = std::arg(u * traj.y1[i] + v * traj.y2[i]);
    double delta = std::remainder(f - f_prev, 2.0 * std::numbers::pi);
    if (std::abs(delta) > std::numbers::pi / 2) {
      throw UnwrapFailure("classical_phase: phase jumped by " + std::to_string(delta) + " at t = " +
                          std::to_string(traj.t[i]) + "; refine the grid");
    }
    unwrapped += delta;
    f_prev = f;
    out.by_generator[i] = unwrapped - f_start;
  }

  for (std::size_t i = 0; i < n; ++i) {
    out.max_discrepancy = std::max(out.max_discrepancy, std::abs(out.by_quadrature[i] - out.by_generator[i]));
  }
  return out;
}

double amplitude_phase_misfit(const ClassicalTrajectory& traj, const std::vector<double>& sigma,
                              const std::vector<double>& theta) {
  const auto n = static_cast<Eigen::Index>(traj.t.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    design(i, 0) = sigma[k] * std::cos(theta[k]);
    design(i, 1) = sigma[k] * std::sin(theta[k]);
    rhs(i) = traj.y1[k];
  }
  const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(rhs);
  return (design * coef - rhs).cwiseAbs().maxCoeff();
}

CoherentExpectations coherent_expectations(std::complex<double> gamma, double omega0, double t, int d) {
  const TwoModeBasis basis(d, d);
  const OperatorMatrix a0 = embed(annihilator(d), Mode::Signal, basis);
  const OperatorMatrix b0_dag = embed(annihilator(d), Mode::Image, basis).adjoint();

  const std::complex<double> phase = gamma == std::complex<double>{} ? 1.0 : std::conj(gamma) / gamma;
  const std::complex<double> rot = std::polar(1.0, omega0 * t);
  const OperatorMatrix a_t = (phase * rot) * a0;
  const OperatorMatrix b_dag_t = (std::conj(phase) * std::conj(rot)) * b0_dag;

  const CoherentState single = coherent_state(gamma, d);
  Vector joint(basis.dim());
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q) joint(basis.index_of(p, q)) = single.amplitudes(p) * single.amplitudes(q);

  CoherentExpectations out;
  out.a_t = expectation(a_t, joint);
  out.b_dag_t = expectation(b_dag_t, joint);
  out.product = out.a_t * out.b_dag_t;
  out.tail_bound = single.tail_bound;
  out.tail_ok = single.tail_ok();
  return out;
}

ClassicalReport run_classical(const OscillatorSpec& spec) {
  const ClassicalTrajectory traj = integrate_oscillator(spec);
  const EmpConstants consts = EmpConstants::diagonal(traj.W0);
  const EmpAmplitude amp = emp_amplitude(traj, consts);
  const PhaseGenerator gen = phase_generator_for(consts);
  const PhaseRoutes routes = classical_phase(traj, consts, gen.alpha, gen.beta, gen.a_psi, gen.b_psi);

  ClassicalReport r;
  r.profile = spec.omega_squared.describe();
  r.W0 = traj.W0;
  r.wronskian_drift = traj.wronskian_drift;
  r.halving_change = traj.halving_change;
  r.emp_residual = amp.residual;
  r.emp_fd_residual = amp.fd_residual;
  r.route_discrepancy = routes.max_discrepancy;
  r.theta_end = routes.by_quadrature.back();
  r.elapsed = spec.t1 - spec.t0;
  for (std::size_t i = 1; i < routes.by_quadrature.size(); ++i) {
    if (!(routes.by_quadrature[i] > routes.by_quadrature[i - 1])) r.theta_increasing = false;
  }
  if (const auto w = spec.omega_squared.constant_omega()) {
    double err = 0.0;
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
      err = std::max(err, std::abs(routes.by_quadrature[i] - *w * (traj.t[i] - spec.t0)));
    }
    r.constant_omega_error = err;
  }
  r.amplitude_phase_misfit = amplitude_phase_misfit(traj, amp.sigma, routes.by_quadrature);
  return r;
}

}  // namespace hetlab
