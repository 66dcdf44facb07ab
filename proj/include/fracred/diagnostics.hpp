#pragma once

#include <string>
#include <vector>

#include "fracred/calculus.hpp"
#include "fracred/nonlocal.hpp"

namespace fracred {

/// Singular values of a linear map, descending.
struct SingularValueReport {
  std::vector<double> values;
  int rows = 0;
  int cols = 0;
  std::string tag;

  double largest() const { return values.empty() ? 0.0 : values.front(); }
  double smallest() const { return values.empty() ? 0.0 : values.back(); }
  /// rows <= cols and smallest > rel_tol * largest.
  bool full_row_rank(double rel_tol = 1e-10) const;
  /// rows >= cols and smallest > rel_tol * largest.
  bool injective(double rel_tol = 1e-10) const;
  /// "index,value" lines.
  std::string to_csv() const;
};

SingularValueReport singular_values(const CMat& m, std::string tag);

/// Singular values of v -> (v|_Sigma, (L^a v)|_Sigma) on the M-unit sphere,
/// i.e. of [S Phi; S Phi Lambda^a] with S the nodal restriction to Sigma.
/// Sigma must be non-empty and contain no node of the closure of Omega.
SingularValueReport ucp_quotient(const DiscreteOperator& op, double a,
                                 const std::vector<int>& sigma_nodes, const RegionLabels& labels);
/// Same without the Omega check, for sets such as all dofs.
SingularValueReport ucp_quotient(const DiscreteOperator& op, double a,
                                 const std::vector<int>& sigma_nodes);

/// Lower bound on the smallest singular value of ucp_quotient when Sigma
/// holds every dof: sqrt((1 + lambda_min^{2a}) / lambda_max(M)).
double ucp_full_bound(const DiscreteOperator& op, double a);

/// Singular values of f -> (L^a u_f)|_E over the W hat basis, |E| x |W|.
SingularValueReport runge_rank(const ExteriorValueSolver& solver);
SingularValueReport runge_rank(const DiscreteOperator& op, double a, const RegionLabels& labels);

struct HeatBoundRow {
  int x = 0;
  int z = 0;
  double distance = 0.0;
  double discrete = 0.0;
  double gaussian = 0.0;
  double ratio = 0.0;
};

struct HeatBoundReport {
  double t = 0.0;
  /// 100 h^2 <= t <= (box width)^2 / 100.
  bool in_window = false;
  std::vector<HeatBoundRow> rows;
  double min_ratio() const;
  double max_ratio() const;
};

/// Ratio of the discrete heat kernel of -Delta to (4 pi t)^{-n/2} e^{-r^2/4t}.
/// `op` must be the unweighted Laplacian.
HeatBoundReport heat_bound_check(const DiscreteOperator& op, double t,
                                 const std::vector<std::pair<int, int>>& node_pairs);

struct RigidityReport {
  std::vector<int> nodes;
  /// |int (U1 - U2)(x, t) t^{-1-a} dt| at each Sigma node.
  std::vector<double> moment;
  /// |Gamma(-a)| |(L1^a u1 - L2^a u2)(x)|.
  std::vector<double> spectral;
  double value = 0.0;
  double spectral_value = 0.0;
  /// max_x |moment - spectral|.
  double deviation = 0.0;
};

/// u_j solves the exterior-value problem of op_j with data f; U_j = e^{-t L_j} u_j.
/// op1 and op2 must agree outside Omega; Sigma must avoid the closure of
/// Omega and of the support of f.
RigidityReport heatflow_rigidity_probe(const DiscreteOperator& op1, const DiscreteOperator& op2,
                                       double a, const ExteriorData& f,
                                       const TimeQuadrature& quad,
                                       const std::vector<int>& sigma_nodes,
                                       const RegionLabels& labels);

}  // namespace fracred
