#include "hetlab/fock.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/SparseCore>
#include <unsupported/Eigen/MatrixFunctions>

namespace hetlab {

TwoModeBasis::TwoModeBasis(int d_a, int d_b) : d_a_(d_a), d_b_(d_b) {
  if (d_a < 1 || d_b < 1) {
    throw DomainError("TwoModeBasis: cutoffs must be positive");
  }
}

int TwoModeBasis::index_of(int p, int q) const {
  if (p < 0 || p >= d_a_ || q < 0 || q >= d_b_) {
    throw std::out_of_range("TwoModeBasis::index_of: Fock pair outside the truncation");
  }
  return p * d_b_ + q;
}

std::pair<int, int> TwoModeBasis::state_of(int index) const {
  if (index < 0 || index >= dim()) {
    throw std::out_of_range("TwoModeBasis::state_of: index outside the truncation");
  }
  return {index / d_b_, index % d_b_};
}

OperatorMatrix::OperatorMatrix(BasisTag tag, Matrix entries) : tag_(tag), m_(std::move(entries)) {
  if (m_.rows() != tag_.dim() || m_.cols() != tag_.dim()) {
    throw BasisMismatch("OperatorMatrix: entries do not match the basis dimension");
  }
}

OperatorMatrix OperatorMatrix::zero(BasisTag tag) { return {tag, Matrix::Zero(tag.dim(), tag.dim())}; }

OperatorMatrix OperatorMatrix::identity(BasisTag tag) { return {tag, Matrix::Identity(tag.dim(), tag.dim())}; }

double OperatorMatrix::hermiticity_defect() const {
  const double scale = m_.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (m_ - m_.adjoint()).cwiseAbs().maxCoeff() / scale;
}

void require_same_basis(const OperatorMatrix& x, const OperatorMatrix& y, const char* where) {
  if (!(x.tag() == y.tag())) {
    throw BasisMismatch(std::string(where) + ": operands live on different bases");
  }
}

OperatorMatrix& OperatorMatrix::operator+=(const OperatorMatrix& rhs) {
  require_same_basis(*this, rhs, "operator+");
  m_ += rhs.m_;
  return *this;
}

OperatorMatrix& OperatorMatrix::operator-=(const OperatorMatrix& rhs) {
  require_same_basis(*this, rhs, "operator-");
  m_ -= rhs.m_;
  return *this;
}

OperatorMatrix& OperatorMatrix::operator*=(Complex s) {
  m_ *= s;
  return *this;
}

namespace {

// Ladder polynomials are banded; below this fill a sparse product is much cheaper.
bool mostly_zero(const Matrix& m) {
  if (m.rows() < 32) return false;
  const Eigen::Index limit = m.size() / 8;
  Eigen::Index nnz = 0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (m(i, j) != Complex(0.0) && ++nnz > limit) return false;
  return true;
}

}  // namespace

OperatorMatrix operator*(const OperatorMatrix& lhs, const OperatorMatrix& rhs) {
  require_same_basis(lhs, rhs, "operator*");
  using Sparse = Eigen::SparseMatrix<Complex>;
  if (mostly_zero(lhs.m_)) return {lhs.tag_, Matrix(Sparse(lhs.m_.sparseView()) * rhs.m_)};
  if (mostly_zero(rhs.m_)) return {lhs.tag_, Matrix(lhs.m_ * Sparse(rhs.m_.sparseView()))};
  return {lhs.tag_, lhs.m_ * rhs.m_};
}

OperatorMatrix annihilator(int d) {
  if (d < 1) throw DomainError("annihilator: d must be positive");
  Matrix m = Matrix::Zero(d, d);
  for (int n = 1; n < d; ++n) m(n - 1, n) = std::sqrt(static_cast<double>(n));
  return {BasisTag::single(d), std::move(m)};
}

OperatorMatrix embed(const OperatorMatrix& op, Mode mode, const TwoModeBasis& basis) {
  const int expected = mode == Mode::Signal ? basis.d_a() : basis.d_b();
  if (op.dim() != expected || op.tag().d_b != 1) {
    throw BasisMismatch("embed: single-mode operator does not match the mode cutoff");
  }
  const int da = basis.d_a();
  const int db = basis.d_b();
  Matrix out = Matrix::Zero(basis.dim(), basis.dim());
  if (mode == Mode::Signal) {
    for (int p = 0; p < da; ++p)
      for (int pp = 0; pp < da; ++pp) {
        const Complex v = op(p, pp);
        if (v == Complex{}) continue;
        for (int q = 0; q < db; ++q) out(p * db + q, pp * db + q) = v;
      }
  } else {
    for (int q = 0; q < db; ++q)
      for (int qq = 0; qq < db; ++qq) {
        const Complex v = op(q, qq);
        if (v == Complex{}) continue;
        for (int p = 0; p < da; ++p) out(p * db + q, p * db + qq) = v;
      }
  }
  return {basis.tag(), std::move(out)};
}

OperatorMatrix identity(const TwoModeBasis& basis) { return OperatorMatrix::identity(basis.tag()); }

OperatorMatrix commutator(const OperatorMatrix& x, const OperatorMatrix& y) {
  require_same_basis(x, y, "commutator");
  return x * y - y * x;
}

OperatorMatrix anticommutator(const OperatorMatrix& x, const OperatorMatrix& y) {
  require_same_basis(x, y, "anticommutator");
  return x * y + y * x;
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  // largest eigenvalue of the smaller Gram matrix; its error is relative to itself
  Matrix gram;
  if (mostly_zero(m)) {
    const Eigen::SparseMatrix<Complex> s = m.sparseView();
    gram = m.rows() <= m.cols() ? Matrix(s * Matrix(m.adjoint())) : Matrix(s.adjoint() * m);
  } else {
    gram = m.rows() <= m.cols() ? Matrix(m * m.adjoint()) : Matrix(m.adjoint() * m);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

SubspaceProjector::SubspaceProjector(BasisTag tag, std::vector<int> kept, int margin)
    : tag_(tag), kept_(std::move(kept)), margin_(margin) {
  std::sort(kept_.begin(), kept_.end());
  kept_.erase(std::unique(kept_.begin(), kept_.end()), kept_.end());
  if (!kept_.empty() && (kept_.front() < 0 || kept_.back() >= tag_.dim())) {
    throw std::out_of_range("SubspaceProjector: kept index outside the basis");
  }
}

OperatorMatrix SubspaceProjector::matrix() const {
  Matrix p = Matrix::Zero(tag_.dim(), tag_.dim());
  for (int i : kept_) p(i, i) = 1.0;
  return {tag_, std::move(p)};
}

Matrix SubspaceProjector::compress(const OperatorMatrix& op) const {
  if (!(op.tag() == tag_)) throw BasisMismatch("SubspaceProjector::compress: basis mismatch");
  const auto n = static_cast<Eigen::Index>(kept_.size());
  Matrix out(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) out(r, c) = op(kept_[r], kept_[c]);
  return out;
}

SubspaceProjector safe_projector(const TwoModeBasis& basis, int margin) {
  if (margin < 0) throw DomainError("safe_projector: negative margin");
  if (margin >= std::min(basis.d_a(), basis.d_b())) {
    throw DomainError("safe_projector: margin leaves an empty interior");
  }
  std::vector<int> kept;
  for (int p = 0; p <= basis.d_a() - 1 - margin; ++p)
    for (int q = 0; q <= basis.d_b() - 1 - margin; ++q) kept.push_back(basis.index_of(p, q));
  return {basis.tag(), std::move(kept), margin};
}

SubspaceProjector photon_projector(const TwoModeBasis& basis, int max_total) {
  if (max_total < 0) throw DomainError("photon_projector: negative photon bound");
  std::vector<int> kept;
  for (int p = 0; p < basis.d_a(); ++p)
    for (int q = 0; q < basis.d_b(); ++q)
      if (p + q <= max_total) kept.push_back(basis.index_of(p, q));
  return {basis.tag(), std::move(kept), -1};
}

double projected_residual(const OperatorMatrix& x, const OperatorMatrix& y, const SubspaceProjector& p) {
  require_same_basis(x, y, "projected_residual");
  const Matrix px = p.compress(x);
  const Matrix diff = px - p.compress(y);
  return spectral_norm(diff) / std::max(1.0, spectral_norm(px));
}

void ToleranceConfig::validate() const {
  // 0 is a legal (unreachable) pass threshold; the two numerical parameters are not
  if (!(poly_tol >= 0.0) || !(fn_tol >= 0.0)) throw DomainError("ToleranceConfig: pass thresholds must be >= 0");
  if (!(pinv_rel_tol > 0.0) || !(branch_eps > 0.0)) {
    throw DomainError("ToleranceConfig: pinv_rel_tol and branch_eps must be strictly positive");
  }
}

namespace {

constexpr double kHermitianInputTol = 1e-10;

bool is_integer(double x) { return std::floor(x) == x; }

std::string format_complex(Complex z) {
  std::ostringstream os;
  os.precision(6);
  os << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
  return os.str();
}

// Distance from z to the closed non-positive real axis.
double distance_to_cut(Complex z) {
  if (z.real() <= 0.0) return std::abs(z.imag());
  return std::abs(z);
}

Complex apply_scalar(MatrixFunction f, Complex z, double branch_eps) {
  switch (f) {
    case MatrixFunction::Exp:
      return std::exp(z);
    case MatrixFunction::Inverse:
      if (std::abs(z) < branch_eps) {
        throw MatrixFunctionError(MatrixFunctionFailure::Singular, std::abs(z),
                                  "eigenvalue " + format_complex(z) + " too close to zero for inversion");
      }
      return 1.0 / z;
    case MatrixFunction::Log:
      if (std::abs(z) < branch_eps) {
        throw MatrixFunctionError(MatrixFunctionFailure::Singular, std::abs(z),
                                  "eigenvalue " + format_complex(z) + " too close to zero for the logarithm");
      }
      [[fallthrough]];
    case MatrixFunction::Sqrt:
      if (distance_to_cut(z) < branch_eps) {
        throw MatrixFunctionError(MatrixFunctionFailure::BranchCut, std::arg(z),
                                  "eigenvalue " + format_complex(z) + " within branch_eps of the cut (phase " +
                                      std::to_string(std::arg(z)) + ")");
      }
      return f == MatrixFunction::Log ? std::log(z) : std::sqrt(z);
  }
  return z;
}

double roundtrip(MatrixFunction f, const Matrix& m, const Matrix& value) {
  const double scale = std::max(1.0, spectral_norm(m));
  switch (f) {
    case MatrixFunction::Log: {
      const Matrix back = value.exp();
      return spectral_norm(back - m) / scale;
    }
    case MatrixFunction::Sqrt:
      return spectral_norm(value * value - m) / scale;
    case MatrixFunction::Inverse:
      return spectral_norm(m * value - Matrix::Identity(m.rows(), m.cols()));
    case MatrixFunction::Exp:
      return 0.0;
  }
  return 0.0;
}

}  // namespace

HermitianPower hermitian_power(const OperatorMatrix& h, double exponent, double pinv_rel_tol) {
  if (!(pinv_rel_tol > 0.0)) throw DomainError("hermitian_power: pinv_rel_tol must be positive");
  if (!h.is_hermitian(kHermitianInputTol)) {
    throw DomainError("hermitian_power: argument is not Hermitian (defect " +
                      std::to_string(h.hermiticity_defect()) + ")");
  }
  const Matrix sym = 0.5 * (h.matrix() + h.matrix().adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) {
    throw MatrixFunctionError(MatrixFunctionFailure::IllConditioned, 0.0, "Hermitian eigensolver did not converge");
  }
  const Eigen::VectorXd& lambda = es.eigenvalues();
  const double lambda_max = lambda.cwiseAbs().maxCoeff();
  const double floor = pinv_rel_tol * lambda_max;

  const auto n = lambda.size();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd keep = Eigen::VectorXd::Zero(n);
  int floored = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lambda_max == 0.0 || std::abs(lambda(i)) <= floor) {
      ++floored;
      continue;
    }
    if (lambda(i) < 0.0 && !is_integer(exponent)) {
      throw DomainError("hermitian_power: negative eigenvalue " + std::to_string(lambda(i)) +
                        " with a non-integer exponent");
    }
    f(i) = std::pow(lambda(i), exponent);
    keep(i) = 1.0;
  }
  if (floored == n) {
    throw MatrixFunctionError(MatrixFunctionFailure::Singular, lambda_max,
                              "hermitian_power: every eigenvalue fell below the relative floor");
  }
  const Matrix& v = es.eigenvectors();
  Matrix value = v * f.cast<Complex>().asDiagonal() * v.adjoint();
  value = 0.5 * (value + value.adjoint()).eval();
  Matrix retained = v * keep.cast<Complex>().asDiagonal() * v.adjoint();
  return {OperatorMatrix(h.tag(), std::move(value)), OperatorMatrix(h.tag(), std::move(retained)), floored};
}

MatrixFunctionResult principal_matrix_function(const OperatorMatrix& m, MatrixFunction f, double branch_eps,
                                               double max_condition) {
  if (!(branch_eps > 0.0)) throw DomainError("principal_matrix_function: branch_eps must be positive");
  const Matrix& mm = m.matrix();

  Matrix value;
  double condition = 1.0;
  if (m.is_hermitian(1e-13)) {
    const Matrix sym = 0.5 * (mm + mm.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    if (es.info() != Eigen::Success) {
      throw MatrixFunctionError(MatrixFunctionFailure::IllConditioned, 0.0, "Hermitian eigensolver did not converge");
    }
    Vector fl(es.eigenvalues().size());
    for (Eigen::Index i = 0; i < fl.size(); ++i) fl(i) = apply_scalar(f, es.eigenvalues()(i), branch_eps);
    value = es.eigenvectors() * fl.asDiagonal() * es.eigenvectors().adjoint();
  } else {
    Eigen::ComplexEigenSolver<Matrix> es(mm);
    if (es.info() != Eigen::Success) {
      throw MatrixFunctionError(MatrixFunctionFailure::IllConditioned, 0.0, "complex eigensolver did not converge");
    }
    const Matrix& v = es.eigenvectors();
    Eigen::BDCSVD<Matrix> svd(v);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    condition = smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
    if (!(condition <= max_condition)) {
      std::ostringstream os;
      os.precision(3);
      os << "eigenvector condition number " << condition << " exceeds " << max_condition
         << " (matrix is numerically defective)";
      throw MatrixFunctionError(MatrixFunctionFailure::IllConditioned, condition, os.str());
    }
    Vector fl(es.eigenvalues().size());
    for (Eigen::Index i = 0; i < fl.size(); ++i) fl(i) = apply_scalar(f, es.eigenvalues()(i), branch_eps);
    value = (v * fl.asDiagonal()) * v.partialPivLu().inverse();
  }

  MatrixFunctionResult out{OperatorMatrix(m.tag(), value), condition, 0.0};
  out.roundtrip_residual = roundtrip(f, mm, value);
  return out;
}

OperatorMatrix checked_inverse(const OperatorMatrix& m, double pinv_rel_tol) {
  if (m.is_hermitian(kHermitianInputTol)) return hermitian_power(m, -1.0, pinv_rel_tol).value;
  Eigen::FullPivLU<Matrix> lu(m.matrix());
  lu.setThreshold(pinv_rel_tol);
  if (!lu.isInvertible()) {
    throw MatrixFunctionError(MatrixFunctionFailure::Singular, static_cast<double>(lu.rank()),
                              "non-Hermitian operator has numerical rank " + std::to_string(lu.rank()) + " of " +
                                  std::to_string(m.dim()) + "; no regularised inverse is taken");
  }
  return {m.tag(), lu.inverse()};
}

CoherentState coherent_state(Complex gamma, int d) {
  if (d < 1) throw DomainError("coherent_state: d must be positive");
  Vector v(d);
  v(0) = 1.0;
  for (int n = 1; n < d; ++n) v(n) = v(n - 1) * gamma / std::sqrt(static_cast<double>(n));
  v /= v.norm();

  const double g = std::abs(gamma);
  double tail = 0.0;
  if (g > 0.0) tail = std::exp(-g * g + 2.0 * d * std::log(g) - std::lgamma(d + 1.0));
  return {std::move(v), tail};
}

Complex expectation(const OperatorMatrix& op, const Vector& v) {
  if (v.size() != op.dim()) throw BasisMismatch("expectation: state length does not match the operator");
  return v.dot(op.matrix() * v);
}

}  // namespace hetlab
