#pragma once

// Relative-number-state bookkeeping and the phase operators of the
// Shapiro-Wagner scheme: the RNS shift D, the polar phase D_SW = R, the
// logarithmic phase theta, cos/sin operators and the amplitude Lambda^2.

#include <optional>
#include <string>
#include <utility>

#include "hetlab/fock.hpp"
#include "hetlab/heterodyne.hpp"

namespace hetlab {

/// |n, m>> : n = p - q (relative number), m = min(p, q).
struct RnsIndex {
  int n = 0;
  int m = 0;
  bool operator==(const RnsIndex&) const = default;
};

class RnsMap {
 public:
  explicit RnsMap(const TwoModeBasis& basis) : basis_(basis) {}

  const TwoModeBasis& basis() const { return basis_; }

  RnsIndex to_rns(int p, int q) const;
  /// Throws std::out_of_range when |n, m>> is not inside the rectangle.
  std::pair<int, int> to_fock(RnsIndex idx) const;
  bool contains(RnsIndex idx) const;
  int flat_index(RnsIndex idx) const;

 private:
  TwoModeBasis basis_;
};

RnsMap rns_map(const TwoModeBasis& basis);

/// diag(p - q).
OperatorMatrix number_diff(const TwoModeBasis& basis);

/// |n, m>> -> |n-1, m>> when the target is inside the rectangle, else 0.
/// A partial isometry with [D, N] = D exactly.
OperatorMatrix rns_phase_operator(const TwoModeBasis& basis);

/// psi (psi^dag psi)^{-1/2} with the floored pseudo-inverse square root.
OperatorMatrix sw_phase_operator(const PsiPair& psi, const ToleranceConfig& tol);

struct ROperator {
  /// Polar factor of psi from its singular value decomposition, restricted to
  /// singular values above the relative floor. Algebraically the same
  /// operator as sw_phase_operator, reached by a different factorisation.
  OperatorMatrix canonical;
  /// psi^{1/2} (psi^dag)^{-1/2} by principal matrix functions, when they
  /// exist on the truncated space.
  std::optional<OperatorMatrix> literal;
  std::string literal_error;
};

ROperator r_operator(const PsiPair& psi, const ToleranceConfig& tol);

/// (1/2i)(log psi - log psi^dag) by principal logarithms. Throws
/// MatrixFunctionError when either logarithm is not available.
OperatorMatrix theta_operator(const PsiPair& psi, const ToleranceConfig& tol);

/// -i log R, the cross-check route for theta.
OperatorMatrix theta_from_r(const OperatorMatrix& r, const ToleranceConfig& tol);

struct TrigOperators {
  OperatorMatrix cos_theta;  // (R + R^dag) / 2
  OperatorMatrix sin_theta;  // (R - R^dag) / 2i
};

TrigOperators trig_operators(const OperatorMatrix& r);

/// Lambda^2 = psi psi^dag.
OperatorMatrix amplitude_operator(const PsiPair& psi);

struct PhaseOperators {
  OperatorMatrix D;
  OperatorMatrix D_SW;
  OperatorMatrix R;
  std::optional<OperatorMatrix> theta;
  std::string theta_error;
  OperatorMatrix cos_theta;
  OperatorMatrix sin_theta;
  OperatorMatrix Lambda2;
};

/// Everything above for one psi. A missing theta is recorded, not thrown.
PhaseOperators build_phase_operators(const PsiPair& psi, const TwoModeBasis& basis, const ToleranceConfig& tol);

}  // namespace hetlab
