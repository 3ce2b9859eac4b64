#pragma once

// The unified heterodyne operator psi = sqrt(A) a~ + sqrt(B) b~^dag, its
// quadratures, and the su(1,1) / Caves generator realizations.

#include <optional>

#include "hetlab/fock.hpp"

namespace hetlab {

/// (A, B, alpha, beta). A == B is the Shapiro-Wagner regime, A != B the
/// Caves regime.
class HeterodyneParams {
 public:
  HeterodyneParams(double a, double b, double alpha = 0.0, double beta = 0.0);

  /// A = 1 + r, B = 1 - r with r = nu_IF / nu_0 in (0, 1).
  static HeterodyneParams from_frequency_ratio(double r, double alpha = 0.0, double beta = 0.0);
  static HeterodyneParams shapiro_wagner(double a = 1.0, double alpha = 0.0, double beta = 0.0) {
    return {a, a, alpha, beta};
  }

  double A() const { return a_; }
  double B() const { return b_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  /// sqrt(B / A)
  double mu() const;
  /// (A - B) / A = 1 - mu^2
  double k() const;
  /// nu_IF / nu_0, defined only when A + B == 2.
  std::optional<double> frequency_ratio() const;

  bool is_shapiro_wagner() const;

 private:
  double a_;
  double b_;
  double alpha_;
  double beta_;
};

struct RotatedModes {
  OperatorMatrix a;
  OperatorMatrix b;
  OperatorMatrix a_dag;
  OperatorMatrix b_dag;
};

/// Plain ladder operators a (x) 1 and 1 (x) b.
RotatedModes bare_modes(const TwoModeBasis& basis);

/// Rotation-valued modes. The self-adjoint quadrature pairs (a1, a2) and
/// (b1, b2) of a = a1 + i a2, b = b1 + i b2 are rotated by alpha and by
/// the transposed rotation through beta, then recombined as a~ = a~1 + i a~2
/// and b~ = b~1 + i b~2. The result is a~ = e^{i alpha} a and
/// b~ = e^{-i beta} b, so that sqrt(B) b~^dag carries e^{+i beta}.
RotatedModes rotated_modes(const HeterodyneParams& params, const TwoModeBasis& basis);

struct PsiPair {
  HeterodyneParams params;
  OperatorMatrix psi;
  OperatorMatrix psi_dag;
};

/// psi = sqrt(A) a~ + sqrt(B) b~^dag and its adjoint.
PsiPair build_psi(const HeterodyneParams& params, const TwoModeBasis& basis);
PsiPair build_psi(const HeterodyneParams& params, const RotatedModes& modes);

struct Quadratures {
  OperatorMatrix y1;  // (psi + psi^dag) / 2
  OperatorMatrix y2;  // (psi - psi^dag) / 2i
};

Quadratures quadratures(const PsiPair& psi);

struct GeneratorSet {
  // su(1,1) realization of the Shapiro-Wagner case
  OperatorMatrix J0, J1, J2, Jplus, Jminus, Kplus;
  // Caves algebra: su(1,1) part (L+, L-, N1) plus the abelian N2
  OperatorMatrix N1, N2, Lplus, Lminus;
  // number difference a~^dag a~ - b~^dag b~
  OperatorMatrix Nhat;
};

/// Generators from unrotated modes unless `modes` is supplied. The ladder
/// pair is J+- = J1 +- i J2.
GeneratorSet su11_generators(const TwoModeBasis& basis, const std::optional<RotatedModes>& modes = std::nullopt);

/// Same generator set; named separately because the Caves fields N1, N2,
/// L+- are what callers of this entry point use.
GeneratorSet caves_algebra(const TwoModeBasis& basis, const std::optional<RotatedModes>& modes = std::nullopt);

/// J0^2 - J1^2 - J2^2
OperatorMatrix casimir(const GeneratorSet& g);

struct PsiProducts {
  OperatorMatrix psi_psi_dag;  // A(N1+N2+1) + B(N1-N2-1) + sqrt(AB)(L+ + L-)
  OperatorMatrix psi_dag_psi;  // A(N1+N2) + B(N1-N2) + sqrt(AB)(L- + L+)
};

/// The two product expansions of psi psi^dag and psi^dag psi in terms of the
/// Caves generators.
PsiProducts psi_products_from_generators(const HeterodyneParams& params, const GeneratorSet& g);

}  // namespace hetlab
