#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fracred/mesh.hpp"
#include "fracred/types.hpp"

namespace fracred {

using Mat2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2, 2>;
using Vec2 = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2, 1>;

/// Per-element constant coefficients of
///   L = -div(A grad) - i sum_j (d_j b_j + b_j d_j) + c.
struct CoefficientField {
  int dim = 1;
  std::vector<Mat2> A;
  std::vector<Vec2> b;
  std::vector<double> c;
  /// Declared ellipticity constant.
  double ellipticity = 1.0;

  /// A = I, b = 0, c = 0 on every element of the mesh.
  static CoefficientField laplacian(const Mesh& mesh);

  int element_count() const { return static_cast<int>(A.size()); }
  bool has_magnetic() const;
};

/// max over elements of max(|A|_2, |A^-1|_2). Throws ValidationError for an
/// asymmetric A or when the declared constant is exceeded.
double ellipticity_check(const CoefficientField& coeffs);

/// Checks the support hypotheses: b = 0, c = 0 and A = I on every element
/// not tagged OMEGA.
void validate_support(const CoefficientField& coeffs, const RegionLabels& labels);

struct ElementMatrices {
  CMat stiffness;
  RMat mass;
};

/// Exact P1 element matrices for constant coefficients. `density` weights
/// the mass matrix only.
ElementMatrices element_matrices(const Mesh& mesh, const CoefficientField& coeffs, int e,
                                 double density = 1.0);

/// Discrete operator on the free (non-Dirichlet) nodes of a mesh with its
/// generalized Hermitian eigendecomposition K phi = lambda M phi, phi^H M phi = 1.
///
/// Vectors passed to and returned from the operator are indexed by degree
/// of freedom; `dof_nodes()` maps a dof to its mesh node.
class DiscreteOperator {
 public:
  DiscreteOperator(Mesh mesh, CoefficientField coeffs, std::vector<double> mass_density);

  const Mesh& mesh() const { return mesh_; }
  const CoefficientField& coefficients() const { return coeffs_; }
  const std::vector<double>& mass_density() const { return density_; }

  int size() const { return static_cast<int>(dof_nodes_.size()); }
  const std::vector<int>& dof_nodes() const { return dof_nodes_; }
  /// -1 for Dirichlet nodes.
  int dof_of(int node) const { return node_dof_[node]; }
  std::vector<int> dofs_of(const std::vector<int>& nodes) const;

  const CMat& stiffness() const { return K_; }
  const RMat& mass() const { return M_; }
  const RVec& eigenvalues() const { return lambda_; }
  const CMat& eigenvectors() const { return phi_; }
  bool is_real() const { return real_; }
  double lambda_min() const { return lambda_(0); }
  double lambda_max() const { return lambda_(lambda_.size() - 1); }

  /// Phi^H M v.
  Vec spectral_coefficients(const Vec& v) const;
  /// Phi c.
  Vec synthesize(const Vec& c) const { return phi_ * c; }
  /// f(L) v = Phi f(Lambda) Phi^H M v.
  Vec apply_function(const std::function<double(double)>& f, const Vec& v) const;
  /// M f(L) = M Phi f(Lambda) Phi^H M, the matrix of the form (f(L)u, w)_M.
  CMat form_matrix(const std::function<double(double)>& f) const;

  Vec solve_mass(const Vec& r) const;
  Vec solve_stiffness(const Vec& r) const;

  /// M-inner product w^H M u.
  Complex inner(const Vec& u, const Vec& w) const { return w.dot(M_ * u); }
  double norm(const Vec& v) const { return std::sqrt(std::max(0.0, inner(v, v).real())); }

  Vec interpolate(const std::function<Complex(const Point&)>& f) const;
  Vec zeros() const { return Vec::Zero(size()); }

 private:
  Mesh mesh_;
  CoefficientField coeffs_;
  std::vector<double> density_;
  std::vector<int> dof_nodes_;
  std::vector<int> node_dof_;
  CMat K_;
  RMat M_;
  RVec lambda_;
  CMat phi_;
  bool real_ = true;
  Eigen::LLT<RMat> mass_llt_;
  Eigen::LLT<CMat> stiff_llt_;
};

/// Assembles K and M (mass density 1) and their eigendecomposition. Throws
/// PositivityError if the smallest eigenvalue is not positive.
DiscreteOperator assemble(const Mesh& mesh, const CoefficientField& coeffs);
/// Same with a per-element mass density.
DiscreteOperator assemble_weighted(const Mesh& mesh, const CoefficientField& coeffs,
                                   const std::vector<double>& mass_density);

enum class NodeGroup { OmegaInterior = 0, W, WTilde, E, Rest };
inline constexpr int kNodeGroupCount = 5;

/// Index sets (dof numbering) tiling all dofs, grouped by region.
struct BlockPartition {
  std::array<std::vector<int>, kNodeGroupCount> groups;

  const std::vector<int>& indices(NodeGroup g) const { return groups[static_cast<int>(g)]; }
  CMat block(const CMat& full, NodeGroup rows, NodeGroup cols) const;
};

/// Groups the dofs of `op` by region. `full` is only used to check sizes.
BlockPartition operator_restriction_blocks(const DiscreteOperator& op, const RegionLabels& labels,
                                           const CMat& full);

/// Sub-matrix full(rows, cols).
CMat submatrix(const CMat& full, const std::vector<int>& rows, const std::vector<int>& cols);
Vec subvector(const Vec& v, const std::vector<int>& idx);

}  // namespace fracred
