#include "fracred/nonlocal.hpp"

#include <algorithm>
#include <cmath>

#include "fracred/calculus.hpp"

namespace fracred {

ExteriorData ExteriorData::from_vector(const DiscreteOperator& op, const RegionLabels& labels,
                                       Vec values) {
  if (values.size() != op.size()) throw ValidationError("exterior data size mismatch");
  std::vector<bool> in_w(op.size(), false);
  for (int d : op.dofs_of(labels.w)) in_w[d] = true;
  for (int d = 0; d < op.size(); ++d) {
    if (!in_w[d] && values(d) != Complex(0.0)) {
      throw ValidationError("exterior data must be supported on W (dof " + std::to_string(d) +
                            ")");
    }
  }
  return ExteriorData{std::move(values)};
}

ExteriorData ExteriorData::hat(const DiscreteOperator& op, const RegionLabels& labels, int node) {
  if (!std::binary_search(labels.w.begin(), labels.w.end(), node)) {
    throw ValidationError("hat probe node " + std::to_string(node) + " is not a W node");
  }
  Vec v = op.zeros();
  v(op.dof_of(node)) = 1.0;
  return ExteriorData{std::move(v)};
}

std::vector<ExteriorData> hat_probes(const DiscreteOperator& op, const RegionLabels& labels) {
  std::vector<ExteriorData> out;
  for (int n : labels.w) out.push_back(ExteriorData::hat(op, labels, n));
  return out;
}

ExteriorValueSolver::ExteriorValueSolver(const DiscreteOperator& op, double a,
                                         const RegionLabels& labels)
    : op_(op), a_(a), labels_(labels) {
  if (!(a > 0.0 && a < 1.0)) throw ValidationError("exponent must lie in (0, 1)");
  if (labels.node_tags.size() != static_cast<size_t>(op.mesh().node_count())) {
    throw ValidationError("labels do not match the operator mesh");
  }
  G_ = op.form_matrix([a](double lam) { return std::pow(lam, a); });
  interior_ = op.dofs_of(labels.omega_interior);
  std::sort(interior_.begin(), interior_.end());
  std::vector<bool> is_int(op.size(), false);
  for (int d : interior_) is_int[d] = true;
  for (int d = 0; d < op.size(); ++d) {
    if (!is_int[d]) exterior_.push_back(d);
  }
  w_dofs_ = op.dofs_of(labels.w);
  wtilde_dofs_ = op.dofs_of(labels.wtilde);
  G_IX_ = submatrix(G_, interior_, exterior_);
  G_II_ = submatrix(G_, interior_, interior_);
  llt_.compute(G_II_);
  if (llt_.info() != Eigen::Success) {
    throw PositivityError("interior block of L^a is not positive definite", op.lambda_min());
  }
}

NonlocalSolution ExteriorValueSolver::solve(const ExteriorData& f) const {
  if (f.values.size() != op_.size()) throw ValidationError("exterior data size mismatch");
  const Vec fx = subvector(f.values, exterior_);
  const Vec rhs = -(G_IX_ * fx);
  const Vec ui = llt_.solve(rhs);
  NonlocalSolution sol;
  sol.f = f;
  sol.a = a_;
  sol.u = f.values;
  for (size_t k = 0; k < interior_.size(); ++k) sol.u(interior_[k]) = ui(k);
  const double rn = rhs.norm();
  sol.residual =
      rn > 0.0 ? (G_II_ * ui - rhs).norm() / rn : ui.norm();
  return sol;
}

double ExteriorValueSolver::stability_constant() const {
  const CMat T = llt_.solve(G_IX_);
  Eigen::JacobiSVD<CMat> svd(T);
  return 1.0 + svd.singularValues()(0);
}

NonlocalSolution solve_exterior_value(const ExteriorValueSolver& solver, const ExteriorData& f) {
  return solver.solve(f);
}

CauchyPair cauchy_pair(const DiscreteOperator& op, double a, const NonlocalSolution& sol,
                       const RegionLabels& labels) {
  if (sol.u.size() != op.size()) throw ValidationError("solution does not match the operator");
  if (labels.node_tags.size() != static_cast<size_t>(op.mesh().node_count())) {
    throw ValidationError("labels do not match the operator mesh");
  }
  const Vec lau = apply_power(op, a, sol.u);
  CauchyPair p;
  p.w_nodes = labels.w;
  p.wtilde_nodes = labels.wtilde;
  p.trace = subvector(sol.u, op.dofs_of(labels.w));
  p.flux = subvector(lau, op.dofs_of(labels.wtilde));
  return p;
}

CMat exterior_data_matrix(const ExteriorValueSolver& solver, FluxForm form) {
  const auto& labels = solver.labels();
  CMat D(labels.wtilde.size(), labels.w.size());
  for (size_t j = 0; j < labels.w.size(); ++j) {
    const ExteriorData f = ExteriorData::hat(solver.op(), labels, labels.w[j]);
    const NonlocalSolution sol = solver.solve(f);
    if (form == FluxForm::Strong) {
      D.col(j) = cauchy_pair(solver.op(), solver.exponent(), sol, labels).flux;
    } else {
      D.col(j) = subvector(solver.form() * sol.u, solver.wtilde_dofs());
    }
  }
  return D;
}

double cauchy_distance(const CauchyPair& p, const CauchyPair& q) {
  if (p.w_nodes != q.w_nodes || p.wtilde_nodes != q.wtilde_nodes) {
    throw ValidationError("Cauchy pairs are defined on different windows");
  }
  double d = 0.0;
  if (p.trace.size()) d = std::max(d, (p.trace - q.trace).cwiseAbs().maxCoeff());
  if (p.flux.size()) d = std::max(d, (p.flux - q.flux).cwiseAbs().maxCoeff());
  return d;
}

}  // namespace fracred
