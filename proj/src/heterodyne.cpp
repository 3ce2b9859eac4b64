#include "hetlab/heterodyne.hpp"

#include <cmath>

namespace hetlab {

HeterodyneParams::HeterodyneParams(double a, double b, double alpha, double beta)
    : a_(a), b_(b), alpha_(alpha), beta_(beta) {
  if (!(a > 0.0)) throw DomainError("HeterodyneParams: A must be positive");
  if (!(b >= 0.0)) throw DomainError("HeterodyneParams: B must be nonnegative");
  if (!std::isfinite(alpha) || !std::isfinite(beta)) throw DomainError("HeterodyneParams: angles must be finite");
}

HeterodyneParams HeterodyneParams::from_frequency_ratio(double r, double alpha, double beta) {
  if (!(r > 0.0 && r < 1.0)) throw DomainError("HeterodyneParams: nu_IF/nu_0 must lie in (0, 1)");
  return {1.0 + r, 1.0 - r, alpha, beta};
}

double HeterodyneParams::mu() const { return std::sqrt(b_ / a_); }

double HeterodyneParams::k() const { return (a_ - b_) / a_; }

std::optional<double> HeterodyneParams::frequency_ratio() const {
  if (std::abs(a_ + b_ - 2.0) > 1e-12) return std::nullopt;
  return (a_ - b_) / 2.0;
}

bool HeterodyneParams::is_shapiro_wagner() const { return std::abs(a_ - b_) <= 1e-14 * a_; }

RotatedModes bare_modes(const TwoModeBasis& basis) {
  OperatorMatrix a = embed(annihilator(basis.d_a()), Mode::Signal, basis);
  OperatorMatrix b = embed(annihilator(basis.d_b()), Mode::Image, basis);
  OperatorMatrix a_dag = a.adjoint();
  OperatorMatrix b_dag = b.adjoint();
  return {std::move(a), std::move(b), std::move(a_dag), std::move(b_dag)};
}

RotatedModes rotated_modes(const HeterodyneParams& params, const TwoModeBasis& basis) {
  const RotatedModes bare = bare_modes(basis);
  const Complex half_i = 1.0 / (2.0 * kI);

  // a = a1 + i a2, b = b1 + i b2 with a_j, b_j self-adjoint
  const OperatorMatrix a1 = 0.5 * (bare.a + bare.a_dag);
  const OperatorMatrix a2 = half_i * (bare.a - bare.a_dag);
  const OperatorMatrix b1 = 0.5 * (bare.b + bare.b_dag);
  const OperatorMatrix b2 = half_i * (bare.b - bare.b_dag);

  const double ca = std::cos(params.alpha());
  const double sa = std::sin(params.alpha());
  const double cb = std::cos(params.beta());
  const double sb = std::sin(params.beta());

  const OperatorMatrix ta1 = ca * a1 - sa * a2;
  const OperatorMatrix ta2 = sa * a1 + ca * a2;
  const OperatorMatrix tb1 = cb * b1 + sb * b2;
  const OperatorMatrix tb2 = -sb * b1 + cb * b2;

  OperatorMatrix a = ta1 + kI * ta2;
  OperatorMatrix b = tb1 + kI * tb2;
  OperatorMatrix a_dag = a.adjoint();
  OperatorMatrix b_dag = b.adjoint();
  return {std::move(a), std::move(b), std::move(a_dag), std::move(b_dag)};
}

PsiPair build_psi(const HeterodyneParams& params, const RotatedModes& modes) {
  OperatorMatrix psi = std::sqrt(params.A()) * modes.a + std::sqrt(params.B()) * modes.b_dag;
  OperatorMatrix psi_dag = psi.adjoint();
  return {params, std::move(psi), std::move(psi_dag)};
}

PsiPair build_psi(const HeterodyneParams& params, const TwoModeBasis& basis) {
  return build_psi(params, rotated_modes(params, basis));
}

Quadratures quadratures(const PsiPair& p) {
  OperatorMatrix y1 = 0.5 * (p.psi + p.psi_dag);
  OperatorMatrix y2 = (1.0 / (2.0 * kI)) * (p.psi - p.psi_dag);
  return {std::move(y1), std::move(y2)};
}

GeneratorSet su11_generators(const TwoModeBasis& basis, const std::optional<RotatedModes>& modes) {
  const RotatedModes m = modes ? *modes : bare_modes(basis);
  if (!(m.a.tag() == basis.tag())) throw BasisMismatch("su11_generators: modes built on another basis");

  const OperatorMatrix one = identity(basis);
  const OperatorMatrix na = m.a_dag * m.a;
  const OperatorMatrix nb = m.b_dag * m.b;
  const OperatorMatrix raise = m.a_dag * m.b_dag;
  const OperatorMatrix lower = m.a * m.b;

  OperatorMatrix j0 = 0.5 * (na + nb + one);
  OperatorMatrix j1 = 0.5 * (raise + lower);
  OperatorMatrix j2 = (1.0 / (2.0 * kI)) * (raise - lower);
  OperatorMatrix jplus = j1 + kI * j2;
  OperatorMatrix jminus = j1 - kI * j2;
  OperatorMatrix kplus = j0 + j1;

  OperatorMatrix n1 = 0.5 * (na + nb + one);
  OperatorMatrix n2 = 0.5 * (na - nb - one);

  return GeneratorSet{std::move(j0),  std::move(j1), std::move(j2),  std::move(jplus),
                      std::move(jminus), std::move(kplus), std::move(n1), std::move(n2),
                      raise,          lower,         na - nb};
}

GeneratorSet caves_algebra(const TwoModeBasis& basis, const std::optional<RotatedModes>& modes) {
  return su11_generators(basis, modes);
}

OperatorMatrix casimir(const GeneratorSet& g) { return g.J0 * g.J0 - g.J1 * g.J1 - g.J2 * g.J2; }

PsiProducts psi_products_from_generators(const HeterodyneParams& params, const GeneratorSet& g) {
  const OperatorMatrix one = OperatorMatrix::identity(g.N1.tag());
  const double a = params.A();
  const double b = params.B();
  const double ab = std::sqrt(a * b);
  OperatorMatrix pp = a * (g.N1 + g.N2 + one) + b * (g.N1 - g.N2 - one) + ab * (g.Lplus + g.Lminus);
  OperatorMatrix pdp = a * (g.N1 + g.N2) + b * (g.N1 - g.N2) + ab * (g.Lminus + g.Lplus);
  return {std::move(pp), std::move(pdp)};
}

}  // namespace hetlab
