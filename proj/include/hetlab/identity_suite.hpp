#pragma once

// Declarative identity catalog: each entry names the equations it checks,
// builds (lhs, rhs) operator pairs from a shared per-parameter context, and
// is evaluated on the appropriate interior. Also the truncation convergence
// study, the randomized parameter sweep and the equation coverage map.

#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hetlab/caves.hpp"
#include "hetlab/fock.hpp"
#include "hetlab/heterodyne.hpp"
#include "hetlab/rns_phase.hpp"

namespace hetlab {

enum class CaseKind { Polynomial, MatrixFunction, ExactFullSpace, Scalar, ReportOnly };
enum class ToleranceSource { Poly, Fn, Exact, None };
enum class Regime { Any, ShapiroWagner, Caves };
enum class CaseStatus { Pass, Fail, Skip, ReportOnly };

const char* to_string(CaseKind k);
const char* to_string(ToleranceSource t);
const char* to_string(CaseStatus s);

inline constexpr double kExactTol = 1e-12;
/// Total photon number bound of the fixed interior used by every
/// matrix-function case.
inline constexpr int kFixedInteriorPhotons = 4;

/// Lazily built operators for one (params, basis, tol). Builders that throw
/// rethrow the same error on every later request.
class CaseContext {
 public:
  CaseContext(HeterodyneParams params, TwoModeBasis basis, ToleranceConfig tol);

  const HeterodyneParams& params() const { return params_; }
  const TwoModeBasis& basis() const { return basis_; }
  const ToleranceConfig& tol() const { return tol_; }

  const OperatorMatrix& one();
  const RotatedModes& modes();
  const RotatedModes& bare();
  const PsiPair& psi();
  const Quadratures& quads();
  /// Generators from the rotated modes.
  const GeneratorSet& gens();
  const OperatorMatrix& nhat();
  const OperatorMatrix& D();
  const OperatorMatrix& D_SW();
  const OperatorMatrix& R();
  const OperatorMatrix& theta();
  const TrigOperators& trig();
  const OperatorMatrix& lambda2();
  const TZPair& tz();
  const SForms& s_forms();
  const CavesOperators& caves();

 private:
  template <class T>
  struct Slot {
    std::optional<T> value;
    std::exception_ptr error;
  };
  template <class T, class F>
  const T& cached(Slot<T>& slot, F&& build);

  HeterodyneParams params_;
  TwoModeBasis basis_;
  ToleranceConfig tol_;
  Slot<OperatorMatrix> one_, nhat_, d_, d_sw_, r_, theta_, lambda2_;
  Slot<RotatedModes> modes_, bare_;
  Slot<PsiPair> psi_;
  Slot<Quadratures> quads_;
  Slot<GeneratorSet> gens_;
  Slot<TrigOperators> trig_;
  Slot<TZPair> tz_;
  Slot<SForms> s_forms_;
  Slot<CavesOperators> caves_;
};

using Terms = std::vector<std::pair<OperatorMatrix, OperatorMatrix>>;

struct IdentityCase {
  std::string id;
  CaseKind kind = CaseKind::Polynomial;
  /// Rectangular margin for polynomial cases; 0 otherwise.
  int margin = 0;
  ToleranceSource tolerance = ToleranceSource::Poly;
  Regime regime = Regime::Any;
  /// Equation labels this case verifies.
  std::vector<std::string> labels;
  /// "label: formula".
  std::string paper_ref;
  /// Deviation or interpretation note carried into every report.
  std::string note;
  /// (lhs, rhs) pairs; the residual is the largest pairwise interior residual.
  std::function<Terms(CaseContext&)> terms;
  /// Scalar and report-only cases compute their residual directly.
  std::function<double(CaseContext&)> scalar;
};

struct ParamsEcho {
  double A = 0.0, B = 0.0, alpha = 0.0, beta = 0.0;
  int d_a = 0, d_b = 0;
  /// Rectangular margin, or -1 when the fixed photon-number interior or the
  /// full space was used.
  int margin = 0;
  std::string interior;
};

struct IdentityReport {
  std::string id;
  CaseKind kind = CaseKind::Polynomial;
  std::string paper_ref;
  ParamsEcho params;
  std::optional<double> residual;
  double tolerance = 0.0;
  CaseStatus status = CaseStatus::Fail;
  std::string note;

  bool passed() const { return status == CaseStatus::Pass; }
};

/// Every catalog entry, sorted by id.
const std::vector<IdentityCase>& builtin_catalog();
/// nullptr when absent.
const IdentityCase* find_case(const std::string& id);

double tolerance_for(ToleranceSource source, const ToleranceConfig& tol);

/// Evaluates one case. Errors are captured as Fail with the reason in note.
/// `min_margin` raises the margin of polynomial cases.
IdentityReport run_case(const IdentityCase& c, CaseContext& ctx, int min_margin = 0);

/// Deterministic: reports are ordered by id regardless of input order.
std::vector<IdentityReport> run_catalog(const std::vector<IdentityCase>& cases, const HeterodyneParams& params,
                                        const TwoModeBasis& basis, const ToleranceConfig& tol, int min_margin = 0);

struct ConvergenceRow {
  std::string id;
  int d = 0;
  std::optional<double> residual;
  std::string error;
};

struct ConvergenceCase {
  std::string id;
  std::vector<ConvergenceRow> rows;
  /// "exact", "decreasing", "non-monotone" or "error".
  std::string verdict;
};

/// Square d x d bases over `dims` (strictly increasing, at least 3 entries).
/// The matrix-function interior is fixed at p + q <= kFixedInteriorPhotons
/// for every d. Cases are evaluated with `params`, except that SW-only cases
/// use B := A and Caves-only cases are reported as errors when A == B.
std::vector<ConvergenceCase> convergence_study(const std::vector<std::string>& ids, const HeterodyneParams& params,
                                               const std::vector<int>& dims, const ToleranceConfig& tol);

/// Verdict for one residual sequence.
std::string convergence_verdict(const std::vector<std::optional<double>>& residuals);

struct SweepPoint {
  HeterodyneParams params;
  std::vector<IdentityReport> reports;
};

/// `points` random (A, B, alpha, beta) draws from mt19937_64(seed):
/// A, B uniform in [0.2, 2], angles uniform in [-pi, pi]. Each point runs
/// the polynomial, exact and scalar cases; SW-only cases are run with B := A.
std::vector<SweepPoint> randomized_sweep(std::uint64_t seed, int points, const TwoModeBasis& basis,
                                         const ToleranceConfig& tol, int min_margin = 2);

/// HeterodyneParams with k = (A - B)/A through the frequency-ratio
/// parametrization r = k / (2 - k).
HeterodyneParams params_for_k(double k, double alpha = 0.0, double beta = 0.0);

// Coverage ------------------------------------------------------------------

/// Equation labels the artifact must reference.
const std::set<std::string>& in_scope_labels();

struct OperationReference {
  std::string operation;
  std::vector<std::string> labels;
};

/// Equations referenced by module-level operations rather than catalog
/// entries.
const std::vector<OperationReference>& operation_references();

struct CoverageReport {
  std::set<std::string> missing;  // in scope, referenced nowhere
  std::set<std::string> unknown;  // referenced, not in scope
  bool complete() const { return missing.empty() && unknown.empty(); }
};

CoverageReport coverage(const std::vector<IdentityCase>& cases);

}  // namespace hetlab
