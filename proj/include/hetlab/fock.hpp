#pragma once

// Truncated two-mode Fock space: basis bookkeeping, the dense operator
// carrier, interior projectors and the spectral matrix functions every
// identity check is built on.

#include <complex>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hetlab/errors.hpp"

namespace hetlab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};

/// Shape of the space an operator acts on. Single-mode operators carry
/// d_b == 1.
struct BasisTag {
  int d_a = 1;
  int d_b = 1;

  int dim() const { return d_a * d_b; }
  static BasisTag single(int d) { return {d, 1}; }
  bool operator==(const BasisTag&) const = default;
};

/// Rectangular truncation of H_S (x) H_I: signal states 0..d_a-1, image
/// states 0..d_b-1. Flat index is signal-major: index_of(p, q) = p*d_b + q.
class TwoModeBasis {
 public:
  TwoModeBasis(int d_a, int d_b);

  int d_a() const { return d_a_; }
  int d_b() const { return d_b_; }
  int dim() const { return d_a_ * d_b_; }
  BasisTag tag() const { return {d_a_, d_b_}; }

  int index_of(int p, int q) const;
  std::pair<int, int> state_of(int index) const;

  bool operator==(const TwoModeBasis&) const = default;

 private:
  int d_a_;
  int d_b_;
};

class OperatorMatrix {
 public:
  OperatorMatrix(BasisTag tag, Matrix entries);

  static OperatorMatrix zero(BasisTag tag);
  static OperatorMatrix identity(BasisTag tag);

  const BasisTag& tag() const { return tag_; }
  const Matrix& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  Complex operator()(int row, int col) const { return m_(row, col); }

  OperatorMatrix adjoint() const { return {tag_, m_.adjoint()}; }

  /// max|M - M^dag| / max|M| (0 for the zero matrix).
  double hermiticity_defect() const;
  bool is_hermitian(double rel_tol = 1e-12) const { return hermiticity_defect() <= rel_tol; }

  OperatorMatrix& operator+=(const OperatorMatrix& rhs);
  OperatorMatrix& operator-=(const OperatorMatrix& rhs);
  OperatorMatrix& operator*=(Complex s);

  friend OperatorMatrix operator+(OperatorMatrix lhs, const OperatorMatrix& rhs) { return lhs += rhs; }
  friend OperatorMatrix operator-(OperatorMatrix lhs, const OperatorMatrix& rhs) { return lhs -= rhs; }
  friend OperatorMatrix operator*(const OperatorMatrix& lhs, const OperatorMatrix& rhs);
  friend OperatorMatrix operator*(Complex s, OperatorMatrix op) { return op *= s; }
  friend OperatorMatrix operator*(OperatorMatrix op, Complex s) { return op *= s; }
  friend OperatorMatrix operator*(double s, OperatorMatrix op) { return op *= Complex(s, 0.0); }
  friend OperatorMatrix operator-(OperatorMatrix op) { return op *= Complex(-1.0, 0.0); }

 private:
  BasisTag tag_;
  Matrix m_;
};

void require_same_basis(const OperatorMatrix& x, const OperatorMatrix& y, const char* where);

enum class Mode { Signal, Image };

/// Single-mode lowering operator: entry (n-1, n) = sqrt(n).
OperatorMatrix annihilator(int d);

/// op (x) 1 for Signal, 1 (x) op for Image.
OperatorMatrix embed(const OperatorMatrix& op, Mode mode, const TwoModeBasis& basis);

OperatorMatrix identity(const TwoModeBasis& basis);

OperatorMatrix commutator(const OperatorMatrix& x, const OperatorMatrix& y);
OperatorMatrix anticommutator(const OperatorMatrix& x, const OperatorMatrix& y);

/// Largest singular value.
double spectral_norm(const Matrix& m);
inline double spectral_norm(const OperatorMatrix& op) { return spectral_norm(op.matrix()); }

/// Diagonal 0/1 projector onto a set of kept Fock states.
class SubspaceProjector {
 public:
  SubspaceProjector(BasisTag tag, std::vector<int> kept, int margin);

  const BasisTag& tag() const { return tag_; }
  /// Kept flat indices, ascending.
  const std::vector<int>& kept() const { return kept_; }
  int rank() const { return static_cast<int>(kept_.size()); }
  /// Rectangular margin, or -1 when the kept set was not built from one.
  int margin() const { return margin_; }

  OperatorMatrix matrix() const;
  /// The kept-by-kept block of `op`.
  Matrix compress(const OperatorMatrix& op) const;

 private:
  BasisTag tag_;
  std::vector<int> kept_;
  int margin_;
};

/// Keeps {(p, q) : p <= d_a-1-margin, q <= d_b-1-margin}.
SubspaceProjector safe_projector(const TwoModeBasis& basis, int margin);

/// Keeps {(p, q) : p + q <= max_total}: a fixed interior independent of the
/// cutoff, used by convergence studies.
SubspaceProjector photon_projector(const TwoModeBasis& basis, int max_total);

/// ||P(X-Y)P|| / max(1, ||PXP||), spectral norm.
double projected_residual(const OperatorMatrix& x, const OperatorMatrix& y, const SubspaceProjector& p);

struct ToleranceConfig {
  double poly_tol = 1e-10;
  double fn_tol = 1e-3;
  double pinv_rel_tol = 1e-10;
  double branch_eps = 1e-6;

  void validate() const;
};

struct HermitianPower {
  OperatorMatrix value;
  /// Projector onto the eigenspace that survived the relative floor.
  OperatorMatrix retained;
  int floored = 0;
};

/// H^exponent through the Hermitian eigendecomposition. Eigenvalues with
/// |lambda| <= pinv_rel_tol * max|lambda| are treated as zero; for negative
/// exponents those directions are excluded (pseudo-inverse). Non-integer
/// exponents require H positive semidefinite up to the floor.
HermitianPower hermitian_power(const OperatorMatrix& h, double exponent, double pinv_rel_tol);

enum class MatrixFunction { Log, Sqrt, Inverse, Exp };

struct MatrixFunctionResult {
  OperatorMatrix value;
  /// 2-norm condition number of the eigenvector matrix (1 for normal input).
  double eigvec_condition = 1.0;
  /// Relative residual of the inverse relation: ||exp(L) - M|| for log,
  /// ||S^2 - M|| for sqrt, ||M X - 1|| for inverse, ||log(E) - M|| is not
  /// attempted for exp (0).
  double roundtrip_residual = 0.0;
};

inline constexpr double kMaxEigvecCondition = 1e8;

/// Principal-branch f(M) by diagonalisation. Hermitian input takes the
/// unitary eigendecomposition; everything else goes through the complex
/// Schur-based eigensolver and is rejected when the eigenvectors are too
/// ill-conditioned to map the spectrum back.
MatrixFunctionResult principal_matrix_function(const OperatorMatrix& m, MatrixFunction f, double branch_eps,
                                               double max_condition = kMaxEigvecCondition);

/// Inverse policy shared by the noncommutative constructions: Hermitian
/// arguments get the floored pseudo-inverse, anything else must be
/// numerically nonsingular or Singular is raised.
OperatorMatrix checked_inverse(const OperatorMatrix& m, double pinv_rel_tol);

struct CoherentState {
  Vector amplitudes;
  /// e^{-|gamma|^2} |gamma|^{2d} / d!
  double tail_bound = 0.0;
  bool tail_ok() const { return tail_bound < 1e-12; }
};

/// Truncated coherent state, renormalised after truncation.
CoherentState coherent_state(Complex gamma, int d);

/// <v| op |v>
Complex expectation(const OperatorMatrix& op, const Vector& v);

}  // namespace hetlab
