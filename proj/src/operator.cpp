#include "fracred/operator.hpp"

#include <cmath>
#include <set>

#include "fracred/io.hpp"

namespace fracred {

CoefficientField CoefficientField::laplacian(const Mesh& mesh) {
  CoefficientField f;
  f.dim = mesh.dim;
  const int n = mesh.element_count();
  f.A.assign(n, Mat2::Identity(mesh.dim, mesh.dim));
  f.b.assign(n, Vec2::Zero(mesh.dim));
  f.c.assign(n, 0.0);
  f.ellipticity = 1.0;
  return f;
}

bool CoefficientField::has_magnetic() const {
  for (const auto& v : b) {
    if (v.cwiseAbs().maxCoeff() != 0.0) return true;
  }
  return false;
}

double ellipticity_check(const CoefficientField& coeffs) {
  double observed = 0.0;
  for (int e = 0; e < coeffs.element_count(); ++e) {
    const Mat2& A = coeffs.A[e];
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-14 * scale) {
      throw ValidationError("conductivity is not symmetric on element " + std::to_string(e));
    }
    Eigen::SelfAdjointEigenSolver<Mat2> es(A, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) {
      throw ValidationError("conductivity is not positive definite on element " +
                            std::to_string(e));
    }
    observed = std::max({observed, hi, 1.0 / lo});
  }
  if (observed > coeffs.ellipticity * (1.0 + 1e-12)) {
    throw ValidationError("ellipticity constant exceeded: observed " + format_double(observed) +
                          ", declared " + format_double(coeffs.ellipticity));
  }
  return observed;
}

void validate_support(const CoefficientField& coeffs, const RegionLabels& labels) {
  if (static_cast<size_t>(coeffs.element_count()) != labels.element_tags.size()) {
    throw ValidationError("coefficient field and labels differ in element count");
  }
  for (int e = 0; e < coeffs.element_count(); ++e) {
    if (labels.element_tags[e] == Region::Omega) continue;
    const bool identity =
        (coeffs.A[e] - Mat2::Identity(coeffs.dim, coeffs.dim)).cwiseAbs().maxCoeff() == 0.0;
    if (!identity) {
      throw ValidationError("A must be the identity outside OMEGA (element " +
                            std::to_string(e) + ")");
    }
    if (coeffs.b[e].cwiseAbs().maxCoeff() != 0.0 || coeffs.c[e] != 0.0) {
      throw ValidationError("b and c must vanish outside OMEGA (element " + std::to_string(e) +
                            ")");
    }
  }
}

ElementMatrices element_matrices(const Mesh& mesh, const CoefficientField& coeffs, int e,
                                 double density) {
  const ElementGeometry g = element_geometry(mesh, e);
  const int nv = mesh.vertices_per_element();
  const int d = mesh.dim;
  const Mat2& A = coeffs.A[e];
  const Vec2& b = coeffs.b[e];
  const double c = coeffs.c[e];
  const Complex I(0.0, 1.0);

  ElementMatrices out;
  out.stiffness.resize(nv, nv);
  out.mass.resize(nv, nv);
  // int phi_i phi_j = |e| (1 + delta_ij) / ((d+1)(d+2)); int phi_i = |e| / (d+1).
  const double mass_scale = g.measure / ((d + 1) * (d + 2));
  const double lump = g.measure / (d + 1);
  for (int i = 0; i < nv; ++i) {
    const double bgi = b.dot(g.grads.col(i));
    for (int j = 0; j < nv; ++j) {
      const double m = mass_scale * (i == j ? 2.0 : 1.0);
      const double bgj = b.dot(g.grads.col(j));
      const double diffusion = g.measure * g.grads.col(i).dot(A * g.grads.col(j));
      // Row i = test function, column j = trial function:
      // i int b . (phi_j grad phi_i - grad phi_j phi_i).
      const Complex magnetic = I * lump * (bgi - bgj);
      out.stiffness(i, j) = diffusion + magnetic + c * m;
      out.mass(i, j) = density * m;
    }
  }
  return out;
}

DiscreteOperator::DiscreteOperator(Mesh mesh, CoefficientField coeffs,
                                   std::vector<double> mass_density)
    : mesh_(std::move(mesh)), coeffs_(std::move(coeffs)), density_(std::move(mass_density)) {
  validate_mesh(mesh_);
  if (coeffs_.element_count() != mesh_.element_count() || coeffs_.dim != mesh_.dim) {
    throw ValidationError("coefficient field does not match the mesh");
  }
  if (static_cast<int>(density_.size()) != mesh_.element_count()) {
    throw ValidationError("mass density must have one entry per element");
  }
  for (double w : density_) {
    if (!(w > 0.0)) throw ValidationError("mass density must be positive");
  }
  ellipticity_check(coeffs_);

  node_dof_.assign(mesh_.node_count(), -1);
  for (int n = 0; n < mesh_.node_count(); ++n) {
    if (mesh_.dirichlet[n]) continue;
    node_dof_[n] = static_cast<int>(dof_nodes_.size());
    dof_nodes_.push_back(n);
  }
  const int N = size();
  if (N == 0) throw ValidationError("mesh has no free nodes");
  K_ = CMat::Zero(N, N);
  M_ = RMat::Zero(N, N);
  for (int e = 0; e < mesh_.element_count(); ++e) {
    const ElementMatrices em = element_matrices(mesh_, coeffs_, e, density_[e]);
    for (int i = 0; i < mesh_.vertices_per_element(); ++i) {
      const int di = node_dof_[mesh_.elements[e][i]];
      if (di < 0) continue;
      for (int j = 0; j < mesh_.vertices_per_element(); ++j) {
        const int dj = node_dof_[mesh_.elements[e][j]];
        if (dj < 0) continue;
        K_(di, dj) += em.stiffness(i, j);
        M_(di, dj) += em.mass(i, j);
      }
    }
  }

  real_ = !coeffs_.has_magnetic();
  if (real_) {
    const RMat Kr = K_.real();
    Eigen::GeneralizedSelfAdjointEigenSolver<RMat> es(Kr, M_);
    if (es.info() != Eigen::Success) throw Error("generalized eigensolver failed");
    lambda_ = es.eigenvalues();
    phi_ = es.eigenvectors().cast<Complex>();
  } else {
    Eigen::GeneralizedSelfAdjointEigenSolver<CMat> es(K_, M_.cast<Complex>());
    if (es.info() != Eigen::Success) throw Error("generalized eigensolver failed");
    lambda_ = es.eigenvalues();
    phi_ = es.eigenvectors();
  }
  if (!(lambda_(0) > 0.0)) {
    throw PositivityError("operator is not positive definite: lambda_min = " +
                              format_double(lambda_(0)),
                          lambda_(0));
  }
  mass_llt_.compute(M_);
  stiff_llt_.compute(K_);
  if (stiff_llt_.info() != Eigen::Success) {
    throw PositivityError("stiffness Cholesky factorization failed", lambda_(0));
  }
}

std::vector<int> DiscreteOperator::dofs_of(const std::vector<int>& nodes) const {
  std::vector<int> out;
  out.reserve(nodes.size());
  for (int n : nodes) {
    if (n < 0 || n >= mesh_.node_count() || node_dof_[n] < 0) {
      throw ValidationError("node " + std::to_string(n) + " is not a degree of freedom");
    }
    out.push_back(node_dof_[n]);
  }
  return out;
}

Vec DiscreteOperator::spectral_coefficients(const Vec& v) const {
  if (v.size() != size()) throw ValidationError("vector size does not match the operator");
  return phi_.adjoint() * (M_ * v);
}

Vec DiscreteOperator::apply_function(const std::function<double(double)>& f, const Vec& v) const {
  Vec c = spectral_coefficients(v);
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) *= f(lambda_(i));
  return phi_ * c;
}

CMat DiscreteOperator::form_matrix(const std::function<double(double)>& f) const {
  RVec fl(lambda_.size());
  for (Eigen::Index i = 0; i < fl.size(); ++i) fl(i) = f(lambda_(i));
  const CMat mphi = M_ * phi_;
  CMat g = mphi * fl.asDiagonal() * mphi.adjoint();
  // Exact Hermitian symmetry so principal blocks factor cleanly.
  return 0.5 * (g + g.adjoint());
}

Vec DiscreteOperator::solve_mass(const Vec& r) const {
  if (r.size() != size()) throw ValidationError("vector size does not match the operator");
  Vec out(r.size());
  out.real() = mass_llt_.solve(RVec(r.real()));
  out.imag() = mass_llt_.solve(RVec(r.imag()));
  return out;
}

Vec DiscreteOperator::solve_stiffness(const Vec& r) const {
  if (r.size() != size()) throw ValidationError("vector size does not match the operator");
  return stiff_llt_.solve(r);
}

Vec DiscreteOperator::interpolate(const std::function<Complex(const Point&)>& f) const {
  Vec v(size());
  for (int d = 0; d < size(); ++d) v(d) = f(mesh_.nodes[dof_nodes_[d]]);
  return v;
}

DiscreteOperator assemble(const Mesh& mesh, const CoefficientField& coeffs) {
  return DiscreteOperator(mesh, coeffs, std::vector<double>(mesh.element_count(), 1.0));
}

DiscreteOperator assemble_weighted(const Mesh& mesh, const CoefficientField& coeffs,
                                   const std::vector<double>& mass_density) {
  return DiscreteOperator(mesh, coeffs, mass_density);
}

CMat submatrix(const CMat& full, const std::vector<int>& rows, const std::vector<int>& cols) {
  CMat out(rows.size(), cols.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < cols.size(); ++j) out(i, j) = full(rows[i], cols[j]);
  }
  return out;
}

Vec subvector(const Vec& v, const std::vector<int>& idx) {
  Vec out(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) out(i) = v(idx[i]);
  return out;
}

CMat BlockPartition::block(const CMat& full, NodeGroup rows, NodeGroup cols) const {
  return submatrix(full, indices(rows), indices(cols));
}

BlockPartition operator_restriction_blocks(const DiscreteOperator& op, const RegionLabels& labels,
                                           const CMat& full) {
  if (full.rows() != op.size() || full.cols() != op.size()) {
    throw ValidationError("matrix size does not match the operator");
  }
  if (labels.node_tags.size() != static_cast<size_t>(op.mesh().node_count())) {
    throw ValidationError("labels do not match the operator mesh");
  }
  std::vector<int> group(op.size(), static_cast<int>(NodeGroup::Rest));
  auto mark = [&](const std::vector<int>& nodes, NodeGroup g) {
    for (int d : op.dofs_of(nodes)) group[d] = static_cast<int>(g);
  };
  mark(labels.omega_interior, NodeGroup::OmegaInterior);
  mark(labels.w, NodeGroup::W);
  mark(labels.wtilde, NodeGroup::WTilde);
  mark(labels.e, NodeGroup::E);
  BlockPartition p;
  for (int d = 0; d < op.size(); ++d) p.groups[group[d]].push_back(d);
  return p;
}

}  // namespace fracred
