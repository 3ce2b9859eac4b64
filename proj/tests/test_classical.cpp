#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hetlab/classical.hpp"
#include "oracles.hpp"

using namespace hetlab;

namespace {

double max_abs_diff(const std::vector<double>& x, const std::vector<double>& y) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

OscillatorSpec linear_t(double t0 = 1.0, double t1 = 2.0, double step = 2.5e-4) {
  OscillatorSpec s;
  s.omega_squared = OmegaSquaredProfile::linear(0.0, 1.0);
  s.t0 = t0;
  s.t1 = t1;
  s.step = step;
  return s;
}

// (Ae, Be, Ce) with Ae Be - Ce^2 = 1 / W0^2
EmpConstants random_constants(oracle::Gen& g, double w0) {
  EmpConstants c;
  c.W0 = w0;
  c.Ce = g.uniform(-0.5, 0.5) / std::abs(w0);
  c.Ae = g.uniform(0.5, 2.0) / std::abs(w0);
  c.Be = (1.0 / (w0 * w0) + c.Ce * c.Ce) / c.Ae;
  return c;
}

}  // namespace

TEST_CASE("omega-squared profiles") {
  CHECK(OmegaSquaredProfile::constant(2.0)(17.0) == 4.0);
  CHECK(OmegaSquaredProfile::constant(2.0).constant_omega().value() == 2.0);
  CHECK(OmegaSquaredProfile::linear(1.0, 0.5)(2.0) == 2.0);
  CHECK_FALSE(OmegaSquaredProfile::linear(1.0, 0.5).constant_omega().has_value());

  const OmegaSquaredProfile tab = OmegaSquaredProfile::tabulated({0.0, 1.0, 3.0}, {1.0, 3.0, 7.0});
  CHECK(tab(0.5) == doctest::Approx(2.0));
  CHECK(tab(2.0) == doctest::Approx(5.0));
  CHECK(tab(-1.0) == 1.0);
  CHECK(tab(9.0) == 7.0);
  CHECK_THROWS_AS(OmegaSquaredProfile::tabulated({0.0, 1.0, 1.0}, {1.0, 1.0, 1.0}), ProfileParseError);
  CHECK_THROWS_AS(OmegaSquaredProfile::tabulated({0.0, 2.0, 1.0}, {1.0, 1.0, 1.0}), ProfileParseError);
}

TEST_CASE("profile csv parsing") {
  std::istringstream ok("t,omega_squared\n0,1\n1,2\n2,5\n");
  const OmegaSquaredProfile p = parse_profile_csv(ok);
  CHECK(p(1.5) == doctest::Approx(3.5));
  std::istringstream headerless("0,4\n1,4\n");
  CHECK(parse_profile_csv(headerless)(0.3) == doctest::Approx(4.0));

  std::istringstream backwards("0,1\n2,2\n1,3\n");
  CHECK_THROWS_AS(parse_profile_csv(backwards), ProfileParseError);
  std::istringstream garbage("0,1\n1,x\n");
  CHECK_THROWS_AS(parse_profile_csv(garbage), ProfileParseError);
  std::istringstream empty("");
  CHECK_THROWS_AS(parse_profile_csv(empty), ProfileParseError);
  CHECK_THROWS_AS(load_profile_csv("/nonexistent/profile.csv"), Error);
}

TEST_CASE("oscillator spec validation") {
  OscillatorSpec s = OscillatorSpec::harmonic(1.0, 0.0, 1.0, 0.1);
  CHECK_NOTHROW(s.validate());
  s.step = 0.11;
  CHECK_THROWS_AS(s.validate(), DomainError);
  s = OscillatorSpec::harmonic(1.0, 1.0, 1.0);
  CHECK_THROWS_AS(s.validate(), DomainError);
  s = OscillatorSpec::harmonic(1.0);
  s.y2 = 2.0;
  s.dy2 = 0.0;
  s.y1 = 1.0;
  s.dy1 = 0.0;
  CHECK_THROWS_AS(s.validate(), DomainError);
}

TEST_CASE("integrator against closed-form harmonic solutions") {
  for (double w : {0.5, 1.0, 2.0}) {
    const ClassicalTrajectory tr = integrate_oscillator(OscillatorSpec::harmonic(w, 0.0, 1.0, 1e-3));
    CHECK(tr.W0 == doctest::Approx(w).epsilon(1e-12));
    CHECK(tr.wronskian_drift <= 1e-8);
    const double t1 = tr.t.back();
    CHECK(t1 == doctest::Approx(1.0));
    CHECK(std::abs(tr.y1.back() - std::cos(w * t1)) <= 1e-8);
    CHECK(std::abs(tr.y2.back() - std::sin(w * t1)) <= 1e-8);
    CHECK(std::abs(tr.dy1.back() + w * std::sin(w * t1)) <= 1e-8);
  }
}

TEST_CASE("integrator on a time-dependent profile") {
  const ClassicalTrajectory tr = integrate_oscillator(linear_t());
  CHECK(tr.halving_change <= 1e-6);
  CHECK(tr.wronskian_drift <= 1e-8);
  CHECK(tr.W0 == doctest::Approx(1.0));

  // self-consistency against an independent run at a quarter of the step
  const ClassicalTrajectory fine = integrate_oscillator(linear_t(1.0, 2.0, 2.5e-4 / 4));
  CHECK(std::abs(fine.y1.back() - tr.y1.back()) <= 1e-6);
  CHECK(std::abs(fine.y2.back() - tr.y2.back()) <= 1e-6);

  // a grid far too coarse for the frequency is rejected
  OscillatorSpec fast = OscillatorSpec::harmonic(200.0, 0.0, 1.0, 0.05);
  CHECK_THROWS_AS(integrate_oscillator(fast), StepRejected);
}

TEST_CASE("EMP amplitude") {
  const ClassicalTrajectory unit = integrate_oscillator(OscillatorSpec::harmonic(1.0, 0.0, 2.0, 1e-3));
  const EmpAmplitude a = emp_amplitude(unit, EmpConstants{1.0, 1.0, 0.0, 1.0});
  for (double s : a.sigma) CHECK(std::abs(s - 1.0) <= 1e-9);
  CHECK(a.residual <= 1e-6);

  const ClassicalTrajectory two = integrate_oscillator(OscillatorSpec::harmonic(2.0, 0.0, 2.0, 1e-3));
  const EmpAmplitude b = emp_amplitude(two, EmpConstants{0.5, 0.5, 0.0, 2.0});
  for (double s : b.sigma) CHECK(std::abs(s - 1.0 / std::sqrt(2.0)) <= 1e-9);
  CHECK(b.residual <= 1e-6);

  CHECK_THROWS_AS(emp_amplitude(unit, EmpConstants{1.0, 2.0, 0.0, 1.0}), ConstraintViolation);
  CHECK_THROWS_AS(emp_amplitude(unit, EmpConstants{1.0, 1.0, 0.0, 3.0}), ConstraintViolation);

  // the second-difference diagnostic converges at second order, the gated residual does not depend on h
  const ClassicalTrajectory coarse = integrate_oscillator(linear_t(1.0, 2.0, 2e-3));
  const ClassicalTrajectory finer = integrate_oscillator(linear_t(1.0, 2.0, 1e-3));
  const EmpConstants diag = EmpConstants::diagonal(coarse.W0);
  const EmpAmplitude ec = emp_amplitude(coarse, diag);
  const EmpAmplitude ef = emp_amplitude(finer, diag);
  CHECK(ec.fd_residual / ef.fd_residual == doctest::Approx(4.0).epsilon(0.1));
  CHECK(ec.residual <= 1e-12);
  CHECK(ef.residual <= 1e-12);

  // any constants obeying the constraint give an EMP solution
  oracle::Gen g(41);
  const ClassicalTrajectory lin = integrate_oscillator(linear_t());
  for (int trial = 0; trial < 20; ++trial) {
    const EmpConstants c = random_constants(g, lin.W0);
    CHECK(std::abs(c.constraint_defect()) <= 1e-12);
    const EmpAmplitude e = emp_amplitude(lin, c);
    CHECK(e.residual <= 1e-6);
    for (std::size_t i = 0; i < e.sigma.size(); i += 97) {
      const double y1 = lin.y1[i], y2 = lin.y2[i];
      CHECK(e.sigma[i] == doctest::Approx(std::sqrt(c.Ae * y1 * y1 + c.Be * y2 * y2 + 2 * c.Ce * y1 * y2)));
    }
  }
}

TEST_CASE("classical phase routes") {
  for (double w : {0.5, 1.0, 2.0}) {
    const ClassicalReport r = run_classical(OscillatorSpec::harmonic(w, 0.0, 1.0, 1e-3));
    CHECK(r.theta_end == doctest::Approx(w).epsilon(1e-8));
    CHECK(r.constant_omega_error.value() <= 1e-8);
    CHECK(r.route_discrepancy <= 1e-6);
    CHECK(r.theta_increasing);
    CHECK(r.wronskian_drift <= 1e-8);
    CHECK(r.emp_residual <= 1e-6);
  }

  const ClassicalReport lin = run_classical(linear_t());
  CHECK(lin.route_discrepancy <= 1e-6);
  CHECK(lin.theta_increasing);
  CHECK_FALSE(lin.constant_omega_error.has_value());

  // both routes against arbitrary admissible constants
  oracle::Gen g(43);
  const ClassicalTrajectory tr = integrate_oscillator(linear_t());
  for (int trial = 0; trial < 10; ++trial) {
    const EmpConstants c = random_constants(g, tr.W0);
    const PhaseGenerator gen = phase_generator_for(c);
    const PhaseRoutes routes = classical_phase(tr, c, gen.alpha, gen.beta, gen.a_psi, gen.b_psi);
    CHECK(routes.max_discrepancy <= 1e-6);
    CHECK(max_abs_diff(routes.by_quadrature, routes.by_generator) == doctest::Approx(routes.max_discrepancy));
    for (std::size_t i = 1; i < routes.by_quadrature.size(); ++i)
      CHECK(routes.by_quadrature[i] > routes.by_quadrature[i - 1]);
  }

  // a grid coarse enough to skip more than a quarter turn per step
  ClassicalTrajectory fast;
  fast.omega_squared = OmegaSquaredProfile::constant(1.0);
  fast.W0 = 1.0;
  for (int i = 0; i <= 10; ++i) {
    const double t = 2.0 * i;
    fast.t.push_back(t);
    fast.y1.push_back(std::cos(t));
    fast.dy1.push_back(-std::sin(t));
    fast.y2.push_back(std::sin(t));
    fast.dy2.push_back(std::cos(t));
  }
  EmpConstants c{1.0, 1.0, 0.0, 1.0};
  CHECK_THROWS_AS(classical_phase(fast, c, 0.0, 0.0, 1.0, 1.0), UnwrapFailure);
}

TEST_CASE("coherent-state correspondence") {
  const CoherentExpectations zero = coherent_expectations(0.0, 1.0, 0.7, 24);
  CHECK(std::abs(zero.a_t) <= 1e-15);
  CHECK(std::abs(zero.b_dag_t) <= 1e-15);
  CHECK(std::abs(zero.product) <= 1e-15);

  const CoherentExpectations e = coherent_expectations(0.5, 1.0, oracle::kPi / 2, 24);
  CHECK(std::abs(e.a_t - Complex(0.0, 0.5)) <= 1e-8);
  CHECK(std::abs(e.product - 0.25) <= 1e-8);
  CHECK(e.tail_ok);

  oracle::Gen g(47);
  for (int trial = 0; trial < 10; ++trial) {
    Complex gamma = g.complex(0.8);
    const double w = g.uniform(0.2, 3.0);
    const double t = g.uniform(-5.0, 5.0);
    const CoherentExpectations c = coherent_expectations(gamma, w, t, 24);
    CHECK(std::abs(c.a_t - std::conj(gamma) * std::polar(1.0, w * t)) <= 1e-8);
    CHECK(std::abs(c.b_dag_t - gamma * std::polar(1.0, -w * t)) <= 1e-8);
    CHECK(std::abs(c.product - std::norm(gamma)) <= 1e-8);
    // modulus does not depend on t
    const CoherentExpectations later = coherent_expectations(gamma, w, t + 1.3, 24);
    CHECK(std::abs(std::abs(later.a_t) - std::abs(c.a_t)) <= 1e-12);
  }
  CHECK_FALSE(coherent_expectations(4.0, 1.0, 0.0, 10).tail_ok);
}
