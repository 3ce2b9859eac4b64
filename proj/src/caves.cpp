#include "hetlab/caves.hpp"

#include <cmath>

namespace hetlab {

namespace {

OperatorMatrix sqrt_of(const OperatorMatrix& m, const ToleranceConfig& tol) {
  if (m.is_hermitian(1e-10)) return hermitian_power(m, 0.5, tol.pinv_rel_tol).value;
  return principal_matrix_function(m, MatrixFunction::Sqrt, tol.branch_eps).value;
}

}  // namespace

TZPair build_tz(const HeterodyneParams& params, const TwoModeBasis& basis) {
  const RotatedModes modes = rotated_modes(params, basis);
  const double mu = params.mu();
  return {modes.a + mu * modes.b_dag, modes.a_dag + mu * modes.b};
}

SForms s_operator(const HeterodyneParams& params, const TwoModeBasis& basis, const ToleranceConfig& tol) {
  const TZPair tz = build_tz(params, basis);
  const double root_a = std::sqrt(params.A());
  const double a_minus_b = params.A() - params.B();
  const double inv_root2 = 1.0 / std::sqrt(2.0);

  const OperatorMatrix psi = root_a * tz.T;
  const OperatorMatrix psi_dag = root_a * tz.Z;

  const OperatorMatrix z_inv = checked_inverse(tz.Z, tol.pinv_rel_tol);
  const OperatorMatrix z_dag_inv = checked_inverse(tz.Z.adjoint(), tol.pinv_rel_tol);
  const OperatorMatrix psi_inv = checked_inverse(psi, tol.pinv_rel_tol);
  const OperatorMatrix psi_dag_inv = checked_inverse(psi_dag, tol.pinv_rel_tol);
  const OperatorMatrix t_dag = tz.T.adjoint();

  OperatorMatrix s = inv_root2 * sqrt_of(tz.T * z_inv + z_inv * tz.T, tol);
  OperatorMatrix s_psi = inv_root2 * sqrt_of(psi * psi_dag_inv + psi_dag_inv * psi, tol);
  OperatorMatrix s_normal = inv_root2 * sqrt_of((2.0 * psi + a_minus_b * psi_dag_inv) * psi_dag_inv, tol);

  OperatorMatrix sdag = inv_root2 * sqrt_of(z_dag_inv * t_dag + t_dag * z_inv.adjoint(), tol);
  OperatorMatrix sdag_psi = inv_root2 * sqrt_of(psi_inv * psi_dag + psi_dag * psi_inv, tol);
  OperatorMatrix sdag_normal = inv_root2 * sqrt_of(psi_inv * (2.0 * psi_dag + a_minus_b * psi_inv), tol);

  return {std::move(s), std::move(s_psi), std::move(s_normal), std::move(sdag), std::move(sdag_psi),
          std::move(sdag_normal)};
}

CavesOperators build_caves_operators(const HeterodyneParams& params, const TwoModeBasis& basis,
                                     const ToleranceConfig& tol) {
  TZPair tz = build_tz(params, basis);
  SForms forms = s_operator(params, basis, tol);
  OperatorMatrix c0 = 0.5 * (forms.S + forms.Sdag);
  OperatorMatrix s0 = (1.0 / (2.0 * kI)) * (forms.S - forms.Sdag);
  return {std::move(tz.T), std::move(tz.Z), std::move(forms.S), std::move(forms.Sdag),
          std::move(c0),   std::move(s0),   params.k(),         params.mu()};
}

ClosedFormProducts closed_form_products(const TZPair& tz, double k, const ToleranceConfig& tol) {
  const OperatorMatrix one = OperatorMatrix::identity(tz.T.tag());
  const OperatorMatrix tzp = tz.T * tz.Z;
  if (k == 0.0) return {one, one};
  const OperatorMatrix tz_inv = checked_inverse(tzp, tol.pinv_rel_tol);
  const OperatorMatrix minus = checked_inverse(tzp - k * one, tol.pinv_rel_tol);
  const OperatorMatrix plus = checked_inverse(tzp + k * one, tol.pinv_rel_tol);
  OperatorMatrix ssdag = 0.5 * sqrt_of(4.0 * one - k * tz_inv + k * minus, tol);
  OperatorMatrix sdags = 0.5 * sqrt_of(4.0 * one - k * tz_inv + k * plus, tol);
  return {std::move(ssdag), std::move(sdags)};
}

UnitarityProducts unitarity_products(const CavesOperators& ops, const ToleranceConfig& tol,
                                     const SubspaceProjector& interior) {
  const OperatorMatrix one = OperatorMatrix::identity(ops.S.tag());
  OperatorMatrix ssdag = ops.S * ops.Sdag;
  OperatorMatrix sdags = ops.Sdag * ops.S;
  ClosedFormProducts closed = closed_form_products({ops.T, ops.Z}, ops.k, tol);
  UnitarityProducts out{ssdag, sdags, closed};
  out.residual_SSdag = projected_residual(ssdag, closed.SSdag, interior);
  out.residual_SdagS = projected_residual(sdags, closed.SdagS, interior);
  out.deficit_SSdag = projected_residual(ssdag, one, interior);
  out.deficit_SdagS = projected_residual(sdags, one, interior);
  return out;
}

C0S0ClosedForms c0_s0_closed_forms(const HeterodyneParams& params, const TwoModeBasis& basis,
                                   const ToleranceConfig& tol) {
  const PsiPair p = build_psi(params, basis);
  const OperatorMatrix one = identity(basis);
  const OperatorMatrix psi_inv = checked_inverse(p.psi, tol.pinv_rel_tol);
  const OperatorMatrix psi_dag_inv = checked_inverse(p.psi_dag, tol.pinv_rel_tol);
  const OperatorMatrix psi_inv2 = psi_inv * psi_inv;
  const OperatorMatrix psi_dag_inv2 = psi_dag_inv * psi_dag_inv;
  const double c = std::pow(params.A() - params.B(), 2) / 4.0;
  const OperatorMatrix x = sqrt_of(one + c * (psi_dag_inv2 * psi_inv2), tol);
  const OperatorMatrix y = sqrt_of(one + c * (psi_inv2 * psi_dag_inv2), tol);
  return {(0.5 * kI) * (x - y), 0.5 * (x + y)};
}

SnCommutatorReport sn_commutator(const CavesOperators& ops, const OperatorMatrix& nhat, const ToleranceConfig& tol,
                                 const SubspaceProjector& interior) {
  SnCommutatorReport out{commutator(ops.S, nhat), std::nullopt, {}, std::nullopt, 0.0};
  out.sw_limit_residual = projected_residual(out.direct, ops.S, interior);
  try {
    const OperatorMatrix s_inv = checked_inverse(ops.S, tol.pinv_rel_tol);
    const OperatorMatrix z_inv = checked_inverse(ops.Z, tol.pinv_rel_tol);
    const OperatorMatrix z_inv2 = z_inv * z_inv;
    const double c = (1.0 - ops.mu * ops.mu) / 4.0;
    OperatorMatrix rhs = c * (s_inv * s_inv * s_inv * z_inv2 * z_inv2) +
                         z_inv * (s_inv * z_inv * ops.T + ops.T * s_inv * z_inv);
    out.direct_vs_printed = projected_residual(out.direct, rhs, interior);
    out.printed = std::move(rhs);
  } catch (const Error& e) {
    out.printed_error = e.what();
  }
  return out;
}

KExpansion k_expansion(double r) {
  if (!(r > 0.0 && r < 1.0)) throw DomainError("k_expansion: r must lie in (0, 1)");
  return {2.0 * r / (1.0 + r), 2.0 * r * (1.0 - r)};
}

}  // namespace hetlab
