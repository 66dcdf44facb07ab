#pragma once

#include <vector>

#include "fracred/operator.hpp"

namespace fracred {

/// Exterior value f: a dof vector supported on the W nodes.
struct ExteriorData {
  Vec values;

  /// Validates support against `labels` and wraps `values`.
  static ExteriorData from_vector(const DiscreteOperator& op, const RegionLabels& labels,
                                  Vec values);
  /// Nodal hat function at mesh node `node`, which must be a W node.
  static ExteriorData hat(const DiscreteOperator& op, const RegionLabels& labels, int node);
};

/// One hat function per W node, in W node order.
std::vector<ExteriorData> hat_probes(const DiscreteOperator& op, const RegionLabels& labels);

struct NonlocalSolution {
  Vec u;
  ExteriorData f;
  double a = 0.0;
  /// ||G_II u_I + G_IX f_X|| / ||G_IX f_X||, 0 for f = 0.
  double residual = 0.0;
};

struct CauchyPair {
  std::vector<int> w_nodes;
  Vec trace;
  std::vector<int> wtilde_nodes;
  /// Nodal values of L^a u on W~ (strong form, M^{-1} applied).
  Vec flux;
};

/// Exterior-value solver for (op, a): caches the dense form matrix
/// G = M L^a of the M-inner product and the Cholesky factor of its
/// Omega-interior block. `op` must outlive the solver.
class ExteriorValueSolver {
 public:
  ExteriorValueSolver(const DiscreteOperator& op, double a, const RegionLabels& labels);

  const DiscreteOperator& op() const { return op_; }
  double exponent() const { return a_; }
  const RegionLabels& labels() const { return labels_; }
  const CMat& form() const { return G_; }
  /// Omega-interior dofs (I) and the rest (X), both ascending.
  const std::vector<int>& interior() const { return interior_; }
  const std::vector<int>& exterior() const { return exterior_; }
  const std::vector<int>& w_dofs() const { return w_dofs_; }
  const std::vector<int>& wtilde_dofs() const { return wtilde_dofs_; }

  /// Solves G_II u_I = -G_IX f_X and sets u_X = f_X.
  NonlocalSolution solve(const ExteriorData& f) const;

  /// 1 + ||G_II^{-1} G_IX||_2.
  double stability_constant() const;

 private:
  const DiscreteOperator& op_;
  double a_;
  RegionLabels labels_;
  CMat G_;
  std::vector<int> interior_, exterior_, w_dofs_, wtilde_dofs_;
  CMat G_II_;
  CMat G_IX_;
  Eigen::LLT<CMat> llt_;
};

NonlocalSolution solve_exterior_value(const ExteriorValueSolver& solver, const ExteriorData& f);

CauchyPair cauchy_pair(const DiscreteOperator& op, double a, const NonlocalSolution& sol,
                       const RegionLabels& labels);

enum class FluxForm {
  /// Nodal values of L^a u (M^{-1} G u).
  Strong,
  /// Dual-weighted residual G u, the form in which the map is reciprocal.
  Weak,
};

/// Column j = flux on W~ generated by the j-th W hat function.
CMat exterior_data_matrix(const ExteriorValueSolver& solver, FluxForm form = FluxForm::Strong);

/// max(|trace1 - trace2|_inf, |flux1 - flux2|_inf).
double cauchy_distance(const CauchyPair& p, const CauchyPair& q);

}  // namespace fracred
