#pragma once

// Noncommutative extension of the RNS phase to the Caves configuration:
// T, Z, the S operator in its three printed forms, unitarity deficits, the
// C0/S0 pair, [S, N] and the small-k expansion.

#include <optional>
#include <string>

#include "hetlab/fock.hpp"
#include "hetlab/heterodyne.hpp"

namespace hetlab {

struct TZPair {
  OperatorMatrix T;  // a~ + mu b~^dag
  OperatorMatrix Z;  // a~^dag + mu b~
};

TZPair build_tz(const HeterodyneParams& params, const TwoModeBasis& basis);

struct SForms {
  OperatorMatrix S;         // (1/sqrt2) sqrt(T Z^-1 + Z^-1 T)
  OperatorMatrix S_psi;     // same, written with psi_C
  OperatorMatrix S_normal;  // (1/sqrt2) sqrt([2 psi_C + (A-B) psi_C^dag^-1] psi_C^dag^-1)
  OperatorMatrix Sdag;
  OperatorMatrix Sdag_psi;
  OperatorMatrix Sdag_normal;
};

/// All three constructions of S and S^dag. Throws MatrixFunctionError when
/// Z / psi_C cannot be inverted or a square root argument sits on the cut.
SForms s_operator(const HeterodyneParams& params, const TwoModeBasis& basis, const ToleranceConfig& tol);

struct CavesOperators {
  OperatorMatrix T, Z;
  OperatorMatrix S, Sdag;
  OperatorMatrix C0, S0;
  double k = 0.0;
  double mu = 1.0;
};

CavesOperators build_caves_operators(const HeterodyneParams& params, const TwoModeBasis& basis,
                                     const ToleranceConfig& tol);

struct ClosedFormProducts {
  OperatorMatrix SSdag;  // (1/2) sqrt(4 - k (TZ)^-1 + k (TZ - k)^-1)
  OperatorMatrix SdagS;  // (1/2) sqrt(4 - k (TZ)^-1 + k (TZ + k)^-1)
};

/// The closed forms need only Hermitian inverses, so they exist even where S
/// itself does not.
ClosedFormProducts closed_form_products(const TZPair& tz, double k, const ToleranceConfig& tol);

struct UnitarityProducts {
  OperatorMatrix SSdag, SdagS;
  ClosedFormProducts closed;
  double residual_SSdag = 0.0;  // direct vs closed, interior
  double residual_SdagS = 0.0;
  double deficit_SSdag = 0.0;   // ||P(S S^dag - 1)P||
  double deficit_SdagS = 0.0;
};

UnitarityProducts unitarity_products(const CavesOperators& ops, const ToleranceConfig& tol,
                                     const SubspaceProjector& interior);

struct C0S0ClosedForms {
  OperatorMatrix commutator;  // (i/2)[sqrt(1 + c X) - sqrt(1 + c Y)]
  OperatorMatrix sum_of_squares;  // (1/2)[sqrt(1 + c X) + sqrt(1 + c Y)]
};

/// X = (psi_C^dag)^-2 psi_C^-2, Y = psi_C^-2 (psi_C^dag)^-2, c = (A-B)^2/4.
C0S0ClosedForms c0_s0_closed_forms(const HeterodyneParams& params, const TwoModeBasis& basis,
                                   const ToleranceConfig& tol);

struct SnCommutatorReport {
  OperatorMatrix direct;                   // [S, N]
  std::optional<OperatorMatrix> printed;   // printed right-hand side, left-to-right products
  std::string printed_error;
  std::optional<double> direct_vs_printed;  // interior residual, report only
  double sw_limit_residual = 0.0;           // ||P([S, N] - S)P||
};

SnCommutatorReport sn_commutator(const CavesOperators& ops, const OperatorMatrix& nhat, const ToleranceConfig& tol,
                                 const SubspaceProjector& interior);

struct KExpansion {
  double k_exact = 0.0;        // 2r / (1 + r)
  double k_first_order = 0.0;  // 2r (1 - r)
};

KExpansion k_expansion(double r);

}  // namespace hetlab
