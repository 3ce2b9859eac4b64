#include "hetlab/rns_phase.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hetlab {

RnsIndex RnsMap::to_rns(int p, int q) const {
  basis_.index_of(p, q);  // range check
  return {p - q, std::min(p, q)};
}

bool RnsMap::contains(RnsIndex idx) const {
  if (idx.m < 0) return false;
  const int p = idx.m + std::max(idx.n, 0);
  const int q = idx.m + std::max(-idx.n, 0);
  return p < basis_.d_a() && q < basis_.d_b();
}

std::pair<int, int> RnsMap::to_fock(RnsIndex idx) const {
  if (!contains(idx)) throw std::out_of_range("RnsMap::to_fock: relative-number state outside the truncation");
  return {idx.m + std::max(idx.n, 0), idx.m + std::max(-idx.n, 0)};
}

int RnsMap::flat_index(RnsIndex idx) const {
  const auto [p, q] = to_fock(idx);
  return basis_.index_of(p, q);
}

RnsMap rns_map(const TwoModeBasis& basis) { return RnsMap(basis); }

OperatorMatrix number_diff(const TwoModeBasis& basis) {
  Matrix m = Matrix::Zero(basis.dim(), basis.dim());
  for (int i = 0; i < basis.dim(); ++i) {
    const auto [p, q] = basis.state_of(i);
    m(i, i) = static_cast<double>(p - q);
  }
  return {basis.tag(), std::move(m)};
}

OperatorMatrix rns_phase_operator(const TwoModeBasis& basis) {
  const RnsMap map(basis);
  Matrix m = Matrix::Zero(basis.dim(), basis.dim());
  for (int col = 0; col < basis.dim(); ++col) {
    const auto [p, q] = basis.state_of(col);
    RnsIndex target = map.to_rns(p, q);
    target.n -= 1;
    if (map.contains(target)) m(map.flat_index(target), col) = 1.0;
  }
  return {basis.tag(), std::move(m)};
}

OperatorMatrix sw_phase_operator(const PsiPair& psi, const ToleranceConfig& tol) {
  const HermitianPower inv_sqrt = hermitian_power(psi.psi_dag * psi.psi, -0.5, tol.pinv_rel_tol);
  return psi.psi * inv_sqrt.value;
}

ROperator r_operator(const PsiPair& psi, const ToleranceConfig& tol) {
  const Matrix& m = psi.psi.matrix();
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  // same floor as hermitian_power applied to psi^dag psi, whose eigenvalues are s^2
  const double floor = std::sqrt(tol.pinv_rel_tol) * s(0);
  Matrix polar = Matrix::Zero(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) <= floor) continue;
    polar += svd.matrixU().col(i) * svd.matrixV().col(i).adjoint();
  }

  ROperator out{OperatorMatrix(psi.psi.tag(), std::move(polar)), std::nullopt, {}};
  try {
    const OperatorMatrix root = principal_matrix_function(psi.psi, MatrixFunction::Sqrt, tol.branch_eps).value;
    const OperatorMatrix inv_dag = principal_matrix_function(psi.psi_dag, MatrixFunction::Inverse, tol.branch_eps).value;
    const OperatorMatrix root_inv_dag = principal_matrix_function(inv_dag, MatrixFunction::Sqrt, tol.branch_eps).value;
    out.literal = root * root_inv_dag;
  } catch (const MatrixFunctionError& e) {
    out.literal_error = e.what();
  }
  return out;
}

OperatorMatrix theta_operator(const PsiPair& psi, const ToleranceConfig& tol) {
  const OperatorMatrix log_psi = principal_matrix_function(psi.psi, MatrixFunction::Log, tol.branch_eps).value;
  const OperatorMatrix log_psi_dag = principal_matrix_function(psi.psi_dag, MatrixFunction::Log, tol.branch_eps).value;
  return (1.0 / (2.0 * kI)) * (log_psi - log_psi_dag);
}

OperatorMatrix theta_from_r(const OperatorMatrix& r, const ToleranceConfig& tol) {
  return -kI * principal_matrix_function(r, MatrixFunction::Log, tol.branch_eps).value;
}

TrigOperators trig_operators(const OperatorMatrix& r) {
  const OperatorMatrix r_dag = r.adjoint();
  return {0.5 * (r + r_dag), (1.0 / (2.0 * kI)) * (r - r_dag)};
}

OperatorMatrix amplitude_operator(const PsiPair& psi) { return psi.psi * psi.psi_dag; }

PhaseOperators build_phase_operators(const PsiPair& psi, const TwoModeBasis& basis, const ToleranceConfig& tol) {
  OperatorMatrix d_sw = sw_phase_operator(psi, tol);
  OperatorMatrix r = r_operator(psi, tol).canonical;
  TrigOperators trig = trig_operators(r);
  PhaseOperators out{rns_phase_operator(basis),
                     std::move(d_sw),
                     std::move(r),
                     std::nullopt,
                     {},
                     std::move(trig.cos_theta),
                     std::move(trig.sin_theta),
                     amplitude_operator(psi)};
  try {
    out.theta = theta_operator(psi, tol);
  } catch (const MatrixFunctionError& e) {
    out.theta_error = e.what();
  }
  return out;
}

}  // namespace hetlab
