#include "fracred/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "fracred/io.hpp"
#include "fracred/reduction.hpp"

namespace fracred {

bool SingularValueReport::full_row_rank(double rel_tol) const {
  return rows <= cols && !values.empty() && smallest() > rel_tol * largest();
}

bool SingularValueReport::injective(double rel_tol) const {
  return rows >= cols && !values.empty() && smallest() > rel_tol * largest();
}

std::string SingularValueReport::to_csv() const {
  std::ostringstream out;
  out << "index,value\n";
  for (size_t i = 0; i < values.size(); ++i) out << i << ',' << format_double(values[i]) << '\n';
  return out.str();
}

SingularValueReport singular_values(const CMat& m, std::string tag) {
  SingularValueReport r;
  r.rows = static_cast<int>(m.rows());
  r.cols = static_cast<int>(m.cols());
  r.tag = std::move(tag);
  if (m.size() == 0) return r;
  // Tall orientation; the nonzero spectrum is the same.
  const CMat tall = m.rows() >= m.cols() ? m : CMat(m.adjoint());
  Eigen::JacobiSVD<CMat> svd(tall);
  const RVec& s = svd.singularValues();
  r.values.assign(s.data(), s.data() + s.size());
  std::sort(r.values.begin(), r.values.end(), std::greater<>());
  return r;
}

SingularValueReport ucp_quotient(const DiscreteOperator& op, double a,
                                 const std::vector<int>& sigma_nodes) {
  if (sigma_nodes.empty()) throw ValidationError("Sigma must not be empty");
  const std::vector<int> dofs = op.dofs_of(sigma_nodes);
  const int s = static_cast<int>(dofs.size());
  const int n = op.size();
  const CMat& phi = op.eigenvectors();
  CMat T(2 * s, n);
  for (int k = 0; k < s; ++k) {
    for (int i = 0; i < n; ++i) {
      T(k, i) = phi(dofs[k], i);
      T(s + k, i) = phi(dofs[k], i) * std::pow(op.eigenvalues()(i), a);
    }
  }
  return singular_values(T, "ucp");
}

SingularValueReport ucp_quotient(const DiscreteOperator& op, double a,
                                 const std::vector<int>& sigma_nodes, const RegionLabels& labels) {
  std::set<int> omega(labels.omega_interior.begin(), labels.omega_interior.end());
  omega.insert(labels.omega_boundary.begin(), labels.omega_boundary.end());
  for (int n : sigma_nodes) {
    if (omega.count(n)) {
      throw ValidationError("Sigma node " + std::to_string(n) + " lies in the closure of Omega");
    }
  }
  return ucp_quotient(op, a, sigma_nodes);
}

double ucp_full_bound(const DiscreteOperator& op, double a) {
  Eigen::SelfAdjointEigenSolver<RMat> es(op.mass(), Eigen::EigenvaluesOnly);
  const double mmax = es.eigenvalues().maxCoeff();
  return std::sqrt((1.0 + std::pow(op.lambda_min(), 2.0 * a)) / mmax);
}

SingularValueReport runge_rank(const ExteriorValueSolver& solver) {
  const RegionLabels& labels = solver.labels();
  if (labels.e.empty()) throw ValidationError("E has no nodes");
  if (labels.w.empty()) throw ValidationError("W has no nodes");
  std::vector<int> both;
  std::set_intersection(labels.e.begin(), labels.e.end(), labels.w.begin(), labels.w.end(),
                        std::back_inserter(both));
  if (!both.empty()) throw ValidationError("E and W overlap");
  const DiscreteOperator& op = solver.op();
  const std::vector<int> e_dofs = op.dofs_of(labels.e);
  CMat R(e_dofs.size(), labels.w.size());
  for (size_t j = 0; j < labels.w.size(); ++j) {
    const NonlocalSolution sol = solver.solve(ExteriorData::hat(op, labels, labels.w[j]));
    R.col(j) = subvector(apply_power(op, solver.exponent(), sol.u), e_dofs);
  }
  return singular_values(R, "runge");
}

SingularValueReport runge_rank(const DiscreteOperator& op, double a, const RegionLabels& labels) {
  return runge_rank(ExteriorValueSolver(op, a, labels));
}

double HeatBoundReport::min_ratio() const {
  double m = INFINITY;
  for (const auto& r : rows) m = std::min(m, r.ratio);
  return m;
}

double HeatBoundReport::max_ratio() const {
  double m = -INFINITY;
  for (const auto& r : rows) m = std::max(m, r.ratio);
  return m;
}

HeatBoundReport heat_bound_check(const DiscreteOperator& op, double t,
                                 const std::vector<std::pair<int, int>>& node_pairs) {
  if (!(t > 0.0)) throw ValidationError("heat bound check needs t > 0");
  const Mesh& mesh = op.mesh();
  const CoefficientField& c = op.coefficients();
  const Mat2 I = Mat2::Identity(mesh.dim, mesh.dim);
  double h = 0.0;
  for (int e = 0; e < mesh.element_count(); ++e) {
    if (c.A[e] != I || c.b[e].cwiseAbs().maxCoeff() != 0.0 || c.c[e] != 0.0 ||
        op.mass_density()[e] != 1.0) {
      throw ValidationError("heat bound check needs the unweighted Laplacian");
    }
    h = std::max(h, element_geometry(mesh, e).diameter);
  }
  double width = mesh.box.xmax - mesh.box.xmin;
  if (mesh.dim == 2) width = std::min(width, mesh.box.ymax - mesh.box.ymin);

  HeatBoundReport rep;
  rep.t = t;
  rep.in_window = 100.0 * h * h <= t && t <= width * width / 100.0;
  for (const auto& [x, z] : node_pairs) {
    HeatBoundRow row;
    row.x = x;
    row.z = z;
    const Point& p = mesh.nodes[x];
    const Point& q = mesh.nodes[z];
    const double dy = mesh.dim == 2 ? p[1] - q[1] : 0.0;
    row.distance = std::hypot(p[0] - q[0], dy);
    row.discrete = heat_kernel(op, t, x, z).real();
    row.gaussian = std::pow(4.0 * std::numbers::pi * t, -0.5 * mesh.dim) *
                   std::exp(-row.distance * row.distance / (4.0 * t));
    row.ratio = row.discrete / row.gaussian;
    rep.rows.push_back(row);
  }
  return rep;
}

RigidityReport heatflow_rigidity_probe(const DiscreteOperator& op1, const DiscreteOperator& op2,
                                       double a, const ExteriorData& f,
                                       const TimeQuadrature& quad,
                                       const std::vector<int>& sigma_nodes,
                                       const RegionLabels& labels) {
  if (sigma_nodes.empty()) throw ValidationError("Sigma must not be empty");
  require_same_exterior(op1, op2, labels);
  const Mesh& mesh = op1.mesh();
  if (f.values.size() != op1.size()) throw ValidationError("exterior data size mismatch");

  std::set<int> support;
  for (int d = 0; d < op1.size(); ++d) {
    if (f.values(d) != Complex(0.0)) support.insert(op1.dof_nodes()[d]);
  }
  std::set<int> closure;
  for (int e = 0; e < mesh.element_count(); ++e) {
    bool touches = false;
    for (int i = 0; i < mesh.vertices_per_element(); ++i) {
      touches = touches || support.count(mesh.elements[e][i]);
    }
    if (!touches) continue;
    for (int i = 0; i < mesh.vertices_per_element(); ++i) closure.insert(mesh.elements[e][i]);
  }
  std::set<int> omega(labels.omega_interior.begin(), labels.omega_interior.end());
  omega.insert(labels.omega_boundary.begin(), labels.omega_boundary.end());
  for (int n : sigma_nodes) {
    if (omega.count(n)) {
      throw ValidationError("Sigma node " + std::to_string(n) + " lies in the closure of Omega");
    }
    if (closure.count(n)) {
      throw ValidationError("Sigma node " + std::to_string(n) +
                            " meets the closure of the support of f");
    }
  }
  require_calibrated(quad, op1, a);
  require_calibrated(quad, op2, a);

  const NonlocalSolution u1 = ExteriorValueSolver(op1, a, labels).solve(f);
  const NonlocalSolution u2 = ExteriorValueSolver(op2, a, labels).solve(f);
  const Vec m1 = moment_functional(op1, a, u1.u, 1, quad, sigma_nodes, true);
  const Vec m2 = moment_functional(op2, a, u2.u, 1, quad, sigma_nodes, true);
  const std::vector<int> dofs = op1.dofs_of(sigma_nodes);
  const Vec l1 = apply_power(op1, a, u1.u);
  const Vec l2 = apply_power(op2, a, u2.u);
  const double g = std::abs(gamma_neg(a));

  RigidityReport rep;
  rep.nodes = sigma_nodes;
  for (size_t k = 0; k < dofs.size(); ++k) {
    const double mv = std::abs(m1(k) - m2(k));
    const double sv = g * std::abs(l1(dofs[k]) - l2(dofs[k]));
    rep.moment.push_back(mv);
    rep.spectral.push_back(sv);
    rep.value = std::max(rep.value, mv);
    rep.spectral_value = std::max(rep.spectral_value, sv);
    rep.deviation = std::max(rep.deviation, std::abs(mv - sv));
  }
  return rep;
}

}  // namespace fracred
