#pragma once

#include <filesystem>
#include <vector>

#include "fracred/nonlocal.hpp"
#include "fracred/operator.hpp"

namespace fracred {

/// Piecewise-linear map of a mesh given by the image of every node.
///
/// DF is stored in gradient layout, DF(j, k) = d_j F_k, i.e. the transpose
/// of the Jacobian matrix, so that DF^T A DF / det DF is the usual
/// J A J^T / det J push-forward.
struct Diffeo {
  int dim = 1;
  std::vector<Point> targets;
  std::vector<Mat2> DF;
  std::vector<double> det;
  /// F is the identity on every node at distance >= rho from `center`.
  double rho = 0.0;
  Point center{0.0, 0.0};

  Point operator()(int node) const { return targets[node]; }
};

/// Builds a Diffeo from nodal targets. Computes DF and det per element and
/// throws ValidationError if an element is inverted or degenerate, or a
/// node at distance >= rho from `center` is moved.
Diffeo make_diffeo(const Mesh& mesh, std::vector<Point> targets, double rho,
                   Point center = {0.0, 0.0});

Diffeo identity_diffeo(const Mesh& mesh);

/// r -> factor r for r <= rho/2, linear up to r -> rho at r = rho, identity
/// beyond. factor in (0, 2) keeps the radial profile increasing.
Diffeo radial_shrink(const Mesh& mesh, double rho, double factor, Point center = {0.0, 0.0});

/// Headerless CSV "node,dx[,dy]" of nodal displacements; unlisted nodes stay.
/// rho is set to just beyond the farthest displaced node.
Diffeo nodal_file_diffeo(const Mesh& mesh, const std::filesystem::path& path);

/// F o G, where G is a map of `mesh` and F a map of map_mesh(mesh, G).
Diffeo compose(const Mesh& mesh, const Diffeo& F, const Diffeo& G);

/// DF^T A DF / det DF. Throws ValidationError if det DF <= 0.
Mat2 pushforward_conductivity(const Mat2& A, const Mat2& DF);

/// 1 / det DF. Throws ValidationError if det DF <= 0.
double pushforward_weight(const Mat2& DF);

/// Same connectivity, nodes moved to F(node).
Mesh map_mesh(const Mesh& mesh, const Diffeo& F);

/// Coefficients, mass weight and mesh of the pushed-forward operator.
struct PushedForward {
  Mesh mesh;
  CoefficientField coeffs;
  std::vector<double> weight;
};

/// A' = DF^T A DF / det, b' = DF^T b / det, c' = c / det, weight' = weight / det,
/// per element. The declared ellipticity of the result is the observed one.
PushedForward pushforward(const Mesh& mesh, const CoefficientField& coeffs,
                          const std::vector<double>& weight, const Diffeo& F);

/// assemble_weighted on the pushed-forward data of `op`.
DiscreteOperator pushforward_operator(const DiscreteOperator& op, const Diffeo& F);

struct GaugeReport {
  /// max |K' - K| and max |M' - M| entrywise.
  double stiffness_deviation = 0.0;
  double mass_deviation = 0.0;
  /// max |lambda'_i - lambda_i| / lambda_i.
  double spectrum_deviation = 0.0;
  /// max over Omega elements of |A' - A|_max and |weight' - weight|.
  double interior_coefficient_difference = 0.0;
  /// max over probes of cauchy_distance.
  double cauchy_deviation = 0.0;
};

/// Solves the exterior-value problem for both operators on every probe and
/// compares the exterior Cauchy data. Both operators must share connectivity
/// and coincide on every non-Omega element, including its node coordinates.
GaugeReport gauge_invariance_check(const DiscreteOperator& op_A, const DiscreteOperator& op_FA,
                                   double a, const RegionLabels& labels,
                                   const std::vector<ExteriorData>& probes);

/// g = (det A)^{1/(n-2)} A^{-1}; n >= 3 and A n x n SPD.
RMat metric_from_conductivity(const RMat& A, int n);

/// A = (det g)^{1/2} g^{-1}; n >= 3 and g n x n SPD.
RMat conductivity_from_metric(const RMat& g, int n);

/// (det g)^{1/2} g^{-1} for any dimension: the principal coefficient of the
/// Laplace-Beltrami operator in divergence form.
RMat beltrami_conductivity(const RMat& g);

/// -Delta_g: stiffness from sqrt(det g) g^{-1}, mass density sqrt(det g),
/// one metric per element.
DiscreteOperator laplace_beltrami_assemble(const Mesh& mesh, const std::vector<Mat2>& g);

}  // namespace fracred
