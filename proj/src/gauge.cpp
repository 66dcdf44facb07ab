#include "fracred/gauge.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fracred/io.hpp"
#include "fracred/reduction.hpp"

namespace fracred {

namespace {

double distance(const Point& p, const Point& q, int dim) {
  const double dx = p[0] - q[0];
  const double dy = dim == 2 ? p[1] - q[1] : 0.0;
  return std::hypot(dx, dy);
}

double max_abs(const Mat2& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

Diffeo make_diffeo(const Mesh& mesh, std::vector<Point> targets, double rho, Point center) {
  if (static_cast<int>(targets.size()) != mesh.node_count()) {
    throw ValidationError("diffeo needs one target per mesh node");
  }
  Diffeo F;
  F.dim = mesh.dim;
  F.rho = rho;
  F.center = center;
  for (int n = 0; n < mesh.node_count(); ++n) {
    if (mesh.dim == 1) targets[n][1] = mesh.nodes[n][1];
    if (distance(mesh.nodes[n], center, mesh.dim) >= rho && targets[n] != mesh.nodes[n]) {
      throw ValidationError("diffeo moves node " + std::to_string(n) + " outside radius " +
                            format_double(rho));
    }
  }
  F.targets = std::move(targets);

  const int nv = mesh.vertices_per_element();
  F.DF.resize(mesh.element_count());
  F.det.resize(mesh.element_count());
  for (int e = 0; e < mesh.element_count(); ++e) {
    const ElementGeometry g = element_geometry(mesh, e);
    // DF = I + grad(displacement): exact identity where no vertex moves.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 2> D(nv, mesh.dim);
    for (int i = 0; i < nv; ++i) {
      const int n = mesh.elements[e][i];
      for (int k = 0; k < mesh.dim; ++k) D(i, k) = F.targets[n][k] - mesh.nodes[n][k];
    }
    F.DF[e] = Mat2::Identity(mesh.dim, mesh.dim) + g.grads * D;
    F.det[e] = F.DF[e].determinant();
    if (!(F.det[e] > 0.0)) {
      throw ValidationError("diffeo inverts element " + std::to_string(e) + " (det DF = " +
                            format_double(F.det[e]) + ")");
    }
  }
  return F;
}

Diffeo identity_diffeo(const Mesh& mesh) { return make_diffeo(mesh, mesh.nodes, 0.0); }

Diffeo radial_shrink(const Mesh& mesh, double rho, double factor, Point center) {
  if (!(rho > 0.0)) throw ValidationError("radial shrink needs rho > 0");
  if (!(factor > 0.0 && factor < 2.0)) {
    throw ValidationError("radial shrink factor must lie in (0, 2)");
  }
  const double half = 0.5 * rho;
  std::vector<Point> targets = mesh.nodes;
  for (int n = 0; n < mesh.node_count(); ++n) {
    const double r = distance(mesh.nodes[n], center, mesh.dim);
    if (r >= rho || r == 0.0) continue;
    const double rn = r <= half ? factor * r
                                : factor * half + (rho - factor * half) * (r - half) / half;
    const double s = rn / r;
    for (int k = 0; k < mesh.dim; ++k) {
      targets[n][k] = center[k] + s * (mesh.nodes[n][k] - center[k]);
    }
  }
  return make_diffeo(mesh, std::move(targets), rho, center);
}

Diffeo nodal_file_diffeo(const Mesh& mesh, const std::filesystem::path& path) {
  const auto rows = read_numeric_csv(path);
  std::vector<Point> targets = mesh.nodes;
  double rho = 0.0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != 1 + mesh.dim) {
      throw ValidationError(path.string() + ": expected node and " + std::to_string(mesh.dim) +
                            " displacement columns");
    }
    const double id = row[0];
    if (id != std::floor(id) || id < 0 || id >= mesh.node_count()) {
      throw ValidationError(path.string() + ": invalid node id " + format_double(id));
    }
    const int n = static_cast<int>(id);
    bool moved = false;
    for (int k = 0; k < mesh.dim; ++k) {
      targets[n][k] = mesh.nodes[n][k] + row[1 + k];
      moved = moved || row[1 + k] != 0.0;
    }
    if (moved) {
      if (mesh.dirichlet[n]) {
        throw ValidationError(path.string() + ": boundary node " + std::to_string(n) + " moved");
      }
      rho = std::max(rho, distance(mesh.nodes[n], {0.0, 0.0}, mesh.dim));
    }
  }
  return make_diffeo(mesh, std::move(targets), std::nextafter(rho, INFINITY));
}

Diffeo compose(const Mesh& mesh, const Diffeo& F, const Diffeo& G) {
  if (static_cast<int>(G.targets.size()) != mesh.node_count() ||
      F.targets.size() != G.targets.size()) {
    throw ValidationError("diffeos do not match the mesh");
  }
  // F o G is affine on every element of `mesh`, so its Jacobian comes
  // straight from the composed nodal images.
  return make_diffeo(mesh, F.targets, std::max(F.rho, G.rho), G.center);
}

Mat2 pushforward_conductivity(const Mat2& A, const Mat2& DF) {
  const double det = DF.determinant();
  if (!(det > 0.0)) {
    throw ValidationError("push-forward needs det DF > 0, got " + format_double(det));
  }
  Mat2 out = DF.transpose() * A * DF / det;
  return 0.5 * (out + out.transpose());
}

double pushforward_weight(const Mat2& DF) {
  const double det = DF.determinant();
  if (!(det > 0.0)) {
    throw ValidationError("push-forward needs det DF > 0, got " + format_double(det));
  }
  return 1.0 / det;
}

Mesh map_mesh(const Mesh& mesh, const Diffeo& F) {
  if (static_cast<int>(F.targets.size()) != mesh.node_count()) {
    throw ValidationError("diffeo does not match the mesh");
  }
  Mesh out = mesh;
  out.nodes = F.targets;
  for (int e = 0; e < out.element_count(); ++e) {
    if (!(signed_measure(out, e) > 0.0)) {
      throw ValidationError("mapped element " + std::to_string(e) + " is inverted");
    }
  }
  validate_mesh(out);
  return out;
}

PushedForward pushforward(const Mesh& mesh, const CoefficientField& coeffs,
                          const std::vector<double>& weight, const Diffeo& F) {
  if (coeffs.element_count() != mesh.element_count() ||
      static_cast<int>(weight.size()) != mesh.element_count() ||
      static_cast<int>(F.DF.size()) != mesh.element_count()) {
    throw ValidationError("push-forward inputs do not match the mesh");
  }
  PushedForward p;
  p.mesh = map_mesh(mesh, F);
  p.coeffs = coeffs;
  p.weight.resize(weight.size());
  double observed = 1.0;
  for (int e = 0; e < mesh.element_count(); ++e) {
    const Mat2& DF = F.DF[e];
    const double w = pushforward_weight(DF);
    p.coeffs.A[e] = pushforward_conductivity(coeffs.A[e], DF);
    p.coeffs.b[e] = DF.transpose() * coeffs.b[e] * w;
    p.coeffs.c[e] = coeffs.c[e] * w;
    p.weight[e] = weight[e] * w;
    Eigen::SelfAdjointEigenSolver<Mat2> es(p.coeffs.A[e], Eigen::EigenvaluesOnly);
    observed = std::max({observed, es.eigenvalues().maxCoeff(), 1.0 / es.eigenvalues().minCoeff()});
  }
  p.coeffs.ellipticity = std::max(coeffs.ellipticity, observed);
  return p;
}

DiscreteOperator pushforward_operator(const DiscreteOperator& op, const Diffeo& F) {
  PushedForward p = pushforward(op.mesh(), op.coefficients(), op.mass_density(), F);
  return assemble_weighted(p.mesh, p.coeffs, p.weight);
}

GaugeReport gauge_invariance_check(const DiscreteOperator& op_A, const DiscreteOperator& op_FA,
                                   double a, const RegionLabels& labels,
                                   const std::vector<ExteriorData>& probes) {
  require_same_exterior(op_A, op_FA, labels);
  for (const auto* set : {&labels.w, &labels.wtilde, &labels.e}) {
    for (int n : *set) {
      if (op_A.mesh().nodes[n] != op_FA.mesh().nodes[n]) {
        throw ValidationError("diffeo moves exterior window node " + std::to_string(n));
      }
    }
  }
  GaugeReport r;
  r.stiffness_deviation = (op_A.stiffness() - op_FA.stiffness()).cwiseAbs().maxCoeff();
  r.mass_deviation = (op_A.mass() - op_FA.mass()).cwiseAbs().maxCoeff();
  for (int i = 0; i < op_A.size(); ++i) {
    const double l = op_A.eigenvalues()(i);
    r.spectrum_deviation =
        std::max(r.spectrum_deviation, std::abs(op_FA.eigenvalues()(i) - l) / std::abs(l));
  }
  const CoefficientField& c1 = op_A.coefficients();
  const CoefficientField& c2 = op_FA.coefficients();
  for (int e = 0; e < op_A.mesh().element_count(); ++e) {
    if (labels.element_tags[e] != Region::Omega) continue;
    r.interior_coefficient_difference =
        std::max({r.interior_coefficient_difference, max_abs(c1.A[e] - c2.A[e]),
                  std::abs(op_A.mass_density()[e] - op_FA.mass_density()[e])});
  }

  const ExteriorValueSolver s1(op_A, a, labels);
  const ExteriorValueSolver s2(op_FA, a, labels);
  for (const ExteriorData& f : probes) {
    const CauchyPair p1 = cauchy_pair(op_A, a, s1.solve(f), labels);
    const CauchyPair p2 = cauchy_pair(op_FA, a, s2.solve(f), labels);
    r.cauchy_deviation = std::max(r.cauchy_deviation, cauchy_distance(p1, p2));
  }
  return r;
}

namespace {

void require_spd(const RMat& m, int n, const char* what) {
  if (n < 3) {
    throw ValidationError(std::string(what) +
                          ": the metric/conductivity correspondence needs n >= 3 (the exponent "
                          "1/(n-2) is undefined for n = 2 and conformal factors are lost)");
  }
  if (m.rows() != n || m.cols() != n) throw ValidationError(std::string(what) + ": size is not n x n");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-14 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    throw ValidationError(std::string(what) + ": matrix is not symmetric");
  }
  Eigen::LLT<RMat> llt(m);
  if (llt.info() != Eigen::Success) {
    throw ValidationError(std::string(what) + ": matrix is not positive definite");
  }
}

}  // namespace

RMat metric_from_conductivity(const RMat& A, int n) {
  require_spd(A, n, "metric_from_conductivity");
  return std::pow(A.determinant(), 1.0 / (n - 2)) * A.inverse();
}

RMat conductivity_from_metric(const RMat& g, int n) {
  require_spd(g, n, "conductivity_from_metric");
  return beltrami_conductivity(g);
}

RMat beltrami_conductivity(const RMat& g) {
  Eigen::LLT<RMat> llt(g);
  if (g.rows() != g.cols() || llt.info() != Eigen::Success) {
    throw ValidationError("metric is not symmetric positive definite");
  }
  RMat out = std::sqrt(g.determinant()) * g.inverse();
  return 0.5 * (out + out.transpose());
}

DiscreteOperator laplace_beltrami_assemble(const Mesh& mesh, const std::vector<Mat2>& g) {
  if (static_cast<int>(g.size()) != mesh.element_count()) {
    throw ValidationError("need one metric per element");
  }
  CoefficientField coeffs = CoefficientField::laplacian(mesh);
  std::vector<double> density(g.size());
  double observed = 1.0;
  for (int e = 0; e < mesh.element_count(); ++e) {
    if (g[e].rows() != mesh.dim || g[e].cols() != mesh.dim ||
        (g[e] - g[e].transpose()).cwiseAbs().maxCoeff() > 1e-14 * std::max(1.0, max_abs(g[e]))) {
      throw ValidationError("metric on element " + std::to_string(e) + " is not symmetric");
    }
    const RMat A = beltrami_conductivity(RMat(g[e]));
    coeffs.A[e] = A;
    density[e] = std::sqrt(g[e].determinant());
    Eigen::SelfAdjointEigenSolver<RMat> es(A, Eigen::EigenvaluesOnly);
    observed = std::max({observed, es.eigenvalues().maxCoeff(), 1.0 / es.eigenvalues().minCoeff()});
  }
  coeffs.ellipticity = observed;
  return assemble_weighted(mesh, coeffs, density);
}

}  // namespace fracred
