#include "fracred/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "json.hpp"

namespace fracred {

double LiftedPair::max_residual() const {
  return std::max({ellip_residual, psik_residual, ellip2_residual, chain_residual});
}

LiftedPair lift(const DiscreteOperator& op, double a, const NonlocalSolution& sol,
                const RegionLabels& labels) {
  LiftedPair p;
  p.u = sol.u;
  p.phi = apply_inverse(op, sol.u);
  p.psi = apply_power(op, a, p.phi);

  const Vec mu = op.mass() * sol.u;
  const double mun = mu.norm();
  p.ellip_residual = mun > 0.0 ? (op.stiffness() * p.phi - mu).norm() / mun : p.phi.norm();

  const Vec direct = apply_power(op, a - 1.0, sol.u);
  const double pn = p.psi.norm();
  p.psik_residual = pn > 0.0 ? (p.psi - direct).norm() / pn : direct.norm();

  const Vec kpsi = op.stiffness() * p.psi;
  double worst = 0.0;
  for (int d : op.dofs_of(labels.omega_interior)) worst = std::max(worst, std::abs(kpsi(d)));
  const double un = sol.u.norm();
  p.ellip2_residual = un > 0.0 ? worst / un : worst;

  const Vec lpsi = apply_power(op, 1.0, p.psi);
  const Vec lau = apply_power(op, a, sol.u);
  const double ln = lau.cwiseAbs().maxCoeff();
  const double diff = (lpsi - lau).cwiseAbs().maxCoeff();
  p.chain_residual = ln > 0.0 ? diff / ln : diff;
  return p;
}

BoundaryCauchyData boundary_cauchy(const DiscreteOperator& op, const Vec& psi,
                                   const RegionLabels& labels) {
  if (psi.size() != op.size()) throw ValidationError("vector size does not match the operator");
  const Mesh& mesh = op.mesh();
  if (labels.element_tags.size() != static_cast<size_t>(mesh.element_count())) {
    throw ValidationError("labels do not match the operator mesh");
  }
  BoundaryCauchyData out;
  out.nodes = labels.omega_boundary;
  std::map<int, int> local;
  for (size_t k = 0; k < out.nodes.size(); ++k) local[out.nodes[k]] = static_cast<int>(k);
  const int nb = static_cast<int>(out.nodes.size());

  Vec r = Vec::Zero(nb);
  for (int e = 0; e < mesh.element_count(); ++e) {
    if (labels.element_tags[e] != Region::Omega) continue;
    const ElementMatrices em = element_matrices(mesh, op.coefficients(), e);
    const int nv = mesh.vertices_per_element();
    Vec pe(nv);
    for (int j = 0; j < nv; ++j) {
      const int d = op.dof_of(mesh.elements[e][j]);
      pe(j) = d < 0 ? Complex(0.0) : psi(d);
    }
    const Vec ke = em.stiffness * pe;
    for (int i = 0; i < nv; ++i) {
      auto it = local.find(mesh.elements[e][i]);
      if (it != local.end()) r(it->second) += ke(i);
    }
  }

  RMat bmass = RMat::Zero(nb, nb);
  if (mesh.dim == 1) {
    bmass.setIdentity();
  } else {
    for (const auto& face : labels.boundary_faces) {
      const int p = local.at(face[0]);
      const int q = local.at(face[1]);
      const Point& x = mesh.nodes[face[0]];
      const Point& y = mesh.nodes[face[1]];
      const double len = std::hypot(x[0] - y[0], x[1] - y[1]);
      bmass(p, p) += len / 3.0;
      bmass(q, q) += len / 3.0;
      bmass(p, q) += len / 6.0;
      bmass(q, p) += len / 6.0;
    }
  }
  Eigen::LLT<RMat> llt(bmass);
  if (llt.info() != Eigen::Success) throw Error("boundary mass matrix is singular");
  out.conormal.resize(nb);
  out.conormal.real() = llt.solve(RVec(r.real()));
  out.conormal.imag() = llt.solve(RVec(r.imag()));
  out.trace = subvector(psi, op.dofs_of(out.nodes));
  return out;
}

double boundary_distance(const BoundaryCauchyData& p, const BoundaryCauchyData& q) {
  if (p.nodes != q.nodes) throw ValidationError("boundary data on different node sets");
  if (p.nodes.empty()) return 0.0;
  return std::max((p.trace - q.trace).cwiseAbs().maxCoeff(),
                  (p.conormal - q.conormal).cwiseAbs().maxCoeff());
}

std::string ProbeReport::to_json() const {
  nlohmann::json j;
  j["exterior_gap"] = exterior_gap;
  j["boundary_gap"] = boundary_gap;
  j["per_probe"] = nlohmann::json::array();
  for (const ProbeGap& g : per_probe) {
    j["per_probe"].push_back({{"exterior", g.exterior}, {"boundary", g.boundary}});
  }
  return j.dump(2);
}

void require_same_exterior(const DiscreteOperator& op1, const DiscreteOperator& op2,
                           const RegionLabels& labels) {
  const Mesh& m1 = op1.mesh();
  const Mesh& m2 = op2.mesh();
  if (m1.dim != m2.dim || m1.node_count() != m2.node_count() ||
      m1.element_count() != m2.element_count() || m1.elements != m2.elements ||
      m1.dirichlet != m2.dirichlet) {
    throw ValidationError("operators do not share mesh connectivity");
  }
  if (labels.element_tags.size() != static_cast<size_t>(m1.element_count())) {
    throw ValidationError("labels do not match the operator mesh");
  }
  const CoefficientField& c1 = op1.coefficients();
  const CoefficientField& c2 = op2.coefficients();
  for (int e = 0; e < m1.element_count(); ++e) {
    if (labels.element_tags[e] == Region::Omega) continue;
    if (c1.A[e] != c2.A[e] || c1.b[e] != c2.b[e] || c1.c[e] != c2.c[e] ||
        op1.mass_density()[e] != op2.mass_density()[e]) {
      throw ValidationError("exterior coefficient mismatch on element " + std::to_string(e));
    }
    for (int i = 0; i < m1.vertices_per_element(); ++i) {
      const int n = m1.elements[e][i];
      if (m1.nodes[n] != m2.nodes[n]) {
        throw ValidationError("exterior node " + std::to_string(n) + " moved");
      }
    }
  }
}

ProbeReport theorem1_probe(const DiscreteOperator& op1, const DiscreteOperator& op2, double a,
                           const std::vector<ExteriorData>& probes, const RegionLabels& labels) {
  require_same_exterior(op1, op2, labels);
  const ExteriorValueSolver s1(op1, a, labels);
  const ExteriorValueSolver s2(op2, a, labels);
  ProbeReport rep;
  for (const ExteriorData& f : probes) {
    const NonlocalSolution u1 = s1.solve(f);
    const NonlocalSolution u2 = s2.solve(f);
    ProbeGap g;
    g.exterior = cauchy_distance(cauchy_pair(op1, a, u1, labels), cauchy_pair(op2, a, u2, labels));
    g.boundary = boundary_distance(boundary_cauchy(op1, lift(op1, a, u1, labels), labels),
                                   boundary_cauchy(op2, lift(op2, a, u2, labels), labels));
    rep.exterior_gap = std::max(rep.exterior_gap, g.exterior);
    rep.boundary_gap = std::max(rep.boundary_gap, g.boundary);
    rep.per_probe.push_back(g);
  }
  return rep;
}

Vec moment_functional(const DiscreteOperator& op, double a, const Vec& u, int m,
                      const TimeQuadrature& quad, const std::vector<int>& nodes,
                      bool subtract_initial, double tol) {
  if (m < 1) throw ValidationError("moment order must be a positive integer");
  if (!(a > 0.0 && a < 1.0)) throw ValidationError("exponent must lie in (0, 1)");
  const std::vector<int> dofs = op.dofs_of(nodes);
  const Vec c = op.spectral_coefficients(u);
  const CMat& phi = op.eigenvectors();
  const RVec& lam = op.eigenvalues();
  const int n = static_cast<int>(dofs.size());

  Vec sum = Vec::Zero(n);
  RVec mass = RVec::Zero(n);
  Vec first = Vec::Zero(n);
  Vec last = Vec::Zero(n);
  Vec scaled(c.size());
  for (int q = 0; q < quad.size(); ++q) {
    const double t = quad.nodes[q];
    for (Eigen::Index i = 0; i < c.size(); ++i) scaled(i) = c(i) * std::expm1(-t * lam(i));
    const double w = quad.weights[q] * std::pow(t, -double(m) - a);
    for (int k = 0; k < n; ++k) {
      Complex val = (phi.row(dofs[k]) * scaled).value();
      if (!subtract_initial) val += u(dofs[k]);
      const Complex term = w * val;
      sum(k) += term;
      mass(k) += std::abs(term);
      if (q == 0) first(k) = term;
      if (q + 1 == quad.size()) last(k) = term;
    }
  }
  for (int k = 0; k < n; ++k) {
    const double edge = std::max(std::abs(first(k)), std::abs(last(k)));
    if (edge > tol * mass(k)) {
      throw QuadratureError("moment integral of order m + a = " + std::to_string(m + a) +
                            " does not converge at node " + std::to_string(nodes[k]));
    }
  }
  return sum;
}

}  // namespace fracred
