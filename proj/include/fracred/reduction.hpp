#pragma once

#include <string>
#include <vector>

#include "fracred/calculus.hpp"
#include "fracred/nonlocal.hpp"

namespace fracred {

/// Phi = L^{-1} u and Psi = L^a Phi = L^{a-1} u of a nonlocal solution u,
/// with the residuals of the identities they satisfy.
struct LiftedPair {
  Vec u;
  Vec phi;
  Vec psi;
  /// ||K Phi - M u|| / ||M u||.
  double ellip_residual = 0.0;
  /// ||Psi - L^{a-1} u|| / ||Psi||.
  double psik_residual = 0.0;
  /// max over Omega-interior dofs of |(K Psi)_i| / ||u||. K Psi is the weak
  /// form of L Psi, which vanishes on test functions supported in Omega.
  double ellip2_residual = 0.0;
  /// |L Psi - L^a u|_inf / |L^a u|_inf.
  double chain_residual = 0.0;

  double max_residual() const;
};

LiftedPair lift(const DiscreteOperator& op, double a, const NonlocalSolution& sol,
                const RegionLabels& labels);

/// Trace and co-normal derivative sum_jk nu_j a_jk d_k Psi on the boundary of
/// Omega, in `labels.omega_boundary` order.
struct BoundaryCauchyData {
  std::vector<int> nodes;
  Vec trace;
  Vec conormal;
};

/// Variational flux: r_j = (K_Omega Psi)_j with K_Omega assembled over the
/// Omega elements only, conormal = (boundary mass)^{-1} r. In 1D the boundary
/// mass is the identity (point evaluation).
BoundaryCauchyData boundary_cauchy(const DiscreteOperator& op, const Vec& psi,
                                   const RegionLabels& labels);
inline BoundaryCauchyData boundary_cauchy(const DiscreteOperator& op, const LiftedPair& pair,
                                          const RegionLabels& labels) {
  return boundary_cauchy(op, pair.psi, labels);
}

double boundary_distance(const BoundaryCauchyData& p, const BoundaryCauchyData& q);

struct ProbeGap {
  double exterior = 0.0;
  double boundary = 0.0;
};

struct ProbeReport {
  double exterior_gap = 0.0;
  double boundary_gap = 0.0;
  std::vector<ProbeGap> per_probe;

  /// {"exterior_gap": ..., "boundary_gap": ..., "per_probe": [...]}.
  std::string to_json() const;
};

/// Compares exterior Cauchy data and boundary Cauchy data of two operators
/// over the given probes. Both operators must share connectivity and labels,
/// have identical coefficients on every non-Omega element and identical
/// coordinates on every node of a non-Omega element.
ProbeReport theorem1_probe(const DiscreteOperator& op1, const DiscreteOperator& op2, double a,
                           const std::vector<ExteriorData>& probes, const RegionLabels& labels);

/// Throws ValidationError unless op1 and op2 agree outside Omega as above.
void require_same_exterior(const DiscreteOperator& op1, const DiscreteOperator& op2,
                           const RegionLabels& labels);

/// sum_q w_q U(x, t_q) / t_q^{m+a} at `nodes`, U(t) = e^{-tL} u. With
/// `subtract_initial`, U(t) - u is integrated instead (m = 1 then gives
/// Gamma(-a) L^a u). Throws QuadratureError when an end node of the
/// quadrature carries more than `tol` of the total absolute weight
/// sum_q |w_q U_q / t_q^{m+a}|, the signature of a divergent moment.
Vec moment_functional(const DiscreteOperator& op, double a, const Vec& u, int m,
                      const TimeQuadrature& quad, const std::vector<int>& nodes,
                      bool subtract_initial = false, double tol = 1e-8);

}  // namespace fracred
