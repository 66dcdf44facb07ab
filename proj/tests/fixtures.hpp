#pragma once

#include <random>

#include "fracred/calculus.hpp"
#include "fracred/mesh.hpp"
#include "fracred/nonlocal.hpp"
#include "fracred/operator.hpp"

namespace fixtures {

using namespace fracred;

inline Box box1(double lo, double hi) { return Box{lo, hi, 0.0, 0.0}; }

/// Box (-2,2), 80 cells, Omega (-1,1), W (1.25,1.75), W~ (-1.75,-1.25),
/// E (1.75,2).
struct Baseline1D {
  Mesh mesh = build_interval_mesh(-2.0, 2.0, 80);
  RegionLabels labels =
      label_regions(mesh, box1(-1, 1), box1(1.25, 1.75), box1(-1.75, -1.25), box1(1.75, 2.0));
  DiscreteOperator lap = assemble(mesh, CoefficientField::laplacian(mesh));
  DiscreteOperator pert = assemble(mesh, with_potential(5.0));

  CoefficientField with_potential(double c) const {
    CoefficientField f = CoefficientField::laplacian(mesh);
    for (int e = 0; e < mesh.element_count(); ++e) {
      if (labels.element_tags[e] == Region::Omega) f.c[e] = c;
    }
    return f;
  }
};

/// Box (-2,2)^2, 20 x 20 cells (361 dofs), Omega (-1,1)^2.
struct Baseline2D {
  Mesh mesh = build_rect_mesh(Box{-2, 2, -2, 2}, 20, 20);
  RegionLabels labels = label_regions(mesh, Box{-1, 1, -1, 1}, Box{1.2, 1.8, -0.6, 0.6},
                                      Box{-1.8, -1.2, -0.6, 0.6}, Box{-0.2, 0.2, 1.2, 2.0});
  DiscreteOperator lap = assemble(mesh, CoefficientField::laplacian(mesh));
  DiscreteOperator pert = assemble(mesh, with_potential(5.0));

  CoefficientField with_potential(double c) const {
    CoefficientField f = CoefficientField::laplacian(mesh);
    for (int e = 0; e < mesh.element_count(); ++e) {
      if (labels.element_tags[e] == Region::Omega) f.c[e] = c;
    }
    return f;
  }
};

/// Coarse 2D scenario for the more expensive per-probe checks.
struct Small2D {
  Mesh mesh = build_rect_mesh(Box{-2, 2, -2, 2}, 12, 12);
  RegionLabels labels = label_regions(mesh, Box{-1, 1, -1, 1}, Box{1.4, 1.8, -0.8, 0.8},
                                      Box{-1.8, -1.4, -0.8, 0.8});
  DiscreteOperator lap = assemble(mesh, CoefficientField::laplacian(mesh));
};

inline Vec random_vector(int n, std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = Complex(u(g), u(g));
  return v;
}

inline Vec random_on(const DiscreteOperator& op, const std::vector<int>& nodes, std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec v = op.zeros();
  for (int d : op.dofs_of(nodes)) v(d) = Complex(u(g), u(g));
  return v;
}

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace fixtures
