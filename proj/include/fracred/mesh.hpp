#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "fracred/types.hpp"

namespace fracred {

using Point = std::array<double, 2>;
/// Node indices of a simplex; only the first dim+1 entries are used.
using Element = std::array<int, 3>;

/// Axis-aligned box. In 1D only the x range is used.
struct Box {
  double xmin = 0.0, xmax = 0.0;
  double ymin = 0.0, ymax = 0.0;

  bool contains(const Point& p, int dim) const;
};

/// Conforming simplicial mesh of an axis-aligned computational box.
///
/// Nodes on the outer box boundary carry a homogeneous Dirichlet condition and
/// are excluded from the unknowns of every operator assembled on this mesh.
struct Mesh {
  int dim = 1;
  std::vector<Point> nodes;
  std::vector<Element> elements;
  std::vector<bool> dirichlet;  // per node
  Box box;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int element_count() const { return static_cast<int>(elements.size()); }
  int vertices_per_element() const { return dim + 1; }
};

/// Per-element affine data of a P1 simplex.
struct ElementGeometry {
  double measure = 0.0;
  /// Gradient of each barycentric basis function (column i = grad phi_i).
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2, 3> grads;
  Point barycenter{0.0, 0.0};
  /// Largest edge length.
  double diameter = 0.0;
};

/// Signed measure of an element (oriented length / area).
double signed_measure(const Mesh& mesh, int e);
ElementGeometry element_geometry(const Mesh& mesh, int e);
double total_measure(const Mesh& mesh);

Mesh build_interval_mesh(double xmin, double xmax, int n_cells);
/// Structured triangulation, every cell split along its (x0,y0)-(x1,y1) diagonal.
Mesh build_rect_mesh(const Box& box, int nx, int ny);

/// Throws ValidationError if any element is degenerate or inverted.
void validate_mesh(const Mesh& mesh);

enum class Region { Omega, W, WTilde, E, OtherExterior };

const char* region_name(Region r);

/// Region tags for elements and nodes plus the derived node sets.
///
/// Node lists hold mesh node ids, sorted ascending, with Dirichlet nodes
/// removed. A region's node set is the closure (all vertices of its
/// elements); Omega's closure is split into interior and boundary nodes.
struct RegionLabels {
  std::vector<Region> element_tags;
  std::vector<Region> node_tags;
  std::vector<int> omega_interior;
  std::vector<int> omega_boundary;
  std::vector<int> w;
  std::vector<int> wtilde;
  std::vector<int> e;
  /// Faces of Omega elements shared with a non-Omega element (2D: edges as
  /// node pairs; 1D: the single node, stored twice).
  std::vector<std::array<int, 2>> boundary_faces;

  bool operator==(const RegionLabels&) const = default;
};

/// Tags elements by barycenter membership. E is the set of untagged elements
/// sharing no node with Omega, W or W~; `e_box`, when given, further
/// restricts E to elements whose barycenter lies in it.
RegionLabels label_regions(const Mesh& mesh, const Box& omega_box, const Box& w_box,
                           const Box& wtilde_box,
                           const std::optional<Box>& e_box = std::nullopt);

/// {dim, nodes, elements, labels} with 17 significant digits per float.
std::string mesh_to_json(const Mesh& mesh, const RegionLabels* labels = nullptr);

}  // namespace fracred
