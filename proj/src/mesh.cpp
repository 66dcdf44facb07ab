#include "fracred/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "fracred/io.hpp"

namespace fracred {

bool Box::contains(const Point& p, int dim) const {
  const bool in_x = p[0] > xmin && p[0] < xmax;
  if (dim == 1) return in_x;
  return in_x && p[1] > ymin && p[1] < ymax;
}

double signed_measure(const Mesh& mesh, int e) {
  const Element& el = mesh.elements[e];
  const Point& a = mesh.nodes[el[0]];
  const Point& b = mesh.nodes[el[1]];
  if (mesh.dim == 1) return b[0] - a[0];
  const Point& c = mesh.nodes[el[2]];
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

ElementGeometry element_geometry(const Mesh& mesh, int e) {
  ElementGeometry g;
  const Element& el = mesh.elements[e];
  const int nv = mesh.vertices_per_element();
  g.grads.resize(mesh.dim, nv);
  g.measure = std::abs(signed_measure(mesh, e));
  for (int i = 0; i < nv; ++i) {
    g.barycenter[0] += mesh.nodes[el[i]][0] / nv;
    g.barycenter[1] += mesh.nodes[el[i]][1] / nv;
  }
  for (int i = 0; i < nv; ++i) {
    for (int j = i + 1; j < nv; ++j) {
      const Point& p = mesh.nodes[el[i]];
      const Point& q = mesh.nodes[el[j]];
      g.diameter = std::max(g.diameter, std::hypot(p[0] - q[0], p[1] - q[1]));
    }
  }
  if (mesh.dim == 1) {
    const double h = mesh.nodes[el[1]][0] - mesh.nodes[el[0]][0];
    g.grads(0, 0) = -1.0 / h;
    g.grads(0, 1) = 1.0 / h;
    return g;
  }
  const Point& p0 = mesh.nodes[el[0]];
  const Point& p1 = mesh.nodes[el[1]];
  const Point& p2 = mesh.nodes[el[2]];
  Eigen::Matrix2d jac;
  jac << p1[0] - p0[0], p2[0] - p0[0], p1[1] - p0[1], p2[1] - p0[1];
  const Eigen::Matrix2d inv = jac.inverse();
  // grad phi_1, grad phi_2 are the rows of J^{-1}.
  g.grads.col(1) = inv.row(0).transpose();
  g.grads.col(2) = inv.row(1).transpose();
  g.grads.col(0) = -(g.grads.col(1) + g.grads.col(2));
  return g;
}

double total_measure(const Mesh& mesh) {
  double s = 0.0;
  for (int e = 0; e < mesh.element_count(); ++e) s += std::abs(signed_measure(mesh, e));
  return s;
}

void validate_mesh(const Mesh& mesh) {
  if (mesh.dim != 1 && mesh.dim != 2) throw ValidationError("mesh dimension must be 1 or 2");
  for (int e = 0; e < mesh.element_count(); ++e) {
    const double m = signed_measure(mesh, e);
    if (!(m > 0.0)) {
      throw ValidationError("element " + std::to_string(e) +
                            " is degenerate or inverted (signed measure " + format_double(m) +
                            ")");
    }
  }
}

Mesh build_interval_mesh(double xmin, double xmax, int n_cells) {
  if (n_cells < 2) throw ValidationError("interval mesh needs at least 2 cells");
  if (!(xmin < xmax)) throw ValidationError("degenerate interval: need xmin < xmax");
  Mesh m;
  m.dim = 1;
  m.box = Box{xmin, xmax, 0.0, 0.0};
  const double h = (xmax - xmin) / n_cells;
  for (int i = 0; i <= n_cells; ++i) {
    m.nodes.push_back({i == n_cells ? xmax : xmin + i * h, 0.0});
    m.dirichlet.push_back(i == 0 || i == n_cells);
  }
  for (int i = 0; i < n_cells; ++i) m.elements.push_back({i, i + 1, -1});
  return m;
}

Mesh build_rect_mesh(const Box& box, int nx, int ny) {
  if (nx < 1 || ny < 1) throw ValidationError("rectangle mesh needs positive cell counts");
  if (!(box.xmin < box.xmax) || !(box.ymin < box.ymax)) throw ValidationError("degenerate box");
  Mesh m;
  m.dim = 2;
  m.box = box;
  const double hx = (box.xmax - box.xmin) / nx;
  const double hy = (box.ymax - box.ymin) / ny;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      const double x = i == nx ? box.xmax : box.xmin + i * hx;
      const double y = j == ny ? box.ymax : box.ymin + j * hy;
      m.nodes.push_back({x, y});
      m.dirichlet.push_back(i == 0 || i == nx || j == 0 || j == ny);
    }
  }
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      m.elements.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.elements.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return m;
}

const char* region_name(Region r) {
  switch (r) {
    case Region::Omega: return "OMEGA";
    case Region::W: return "W";
    case Region::WTilde: return "WTILDE";
    case Region::E: return "E";
    case Region::OtherExterior: return "OTHER_EXTERIOR";
  }
  return "?";
}

namespace {

bool strictly_inside(const Box& inner, const Box& outer, int dim) {
  const bool x = inner.xmin > outer.xmin && inner.xmax < outer.xmax;
  if (dim == 1) return x;
  return x && inner.ymin > outer.ymin && inner.ymax < outer.ymax;
}

std::set<int> closure(const Mesh& mesh, const std::vector<Region>& tags, Region r) {
  std::set<int> out;
  for (int e = 0; e < mesh.element_count(); ++e) {
    if (tags[e] != r) continue;
    for (int i = 0; i < mesh.vertices_per_element(); ++i) out.insert(mesh.elements[e][i]);
  }
  return out;
}

bool intersects(const std::set<int>& a, const std::set<int>& b) {
  for (int x : a) {
    if (b.count(x)) return true;
  }
  return false;
}

std::vector<int> free_nodes(const Mesh& mesh, const std::set<int>& s) {
  std::vector<int> out;
  for (int n : s) {
    if (!mesh.dirichlet[n]) out.push_back(n);
  }
  return out;
}

}  // namespace

RegionLabels label_regions(const Mesh& mesh, const Box& omega_box, const Box& w_box,
                           const Box& wtilde_box, const std::optional<Box>& e_box) {
  if (!strictly_inside(omega_box, mesh.box, mesh.dim)) {
    throw ValidationError("omega box must lie strictly inside the mesh box");
  }
  RegionLabels lab;
  lab.element_tags.assign(mesh.element_count(), Region::OtherExterior);
  std::vector<ElementGeometry> geo;
  geo.reserve(mesh.element_count());
  for (int e = 0; e < mesh.element_count(); ++e) {
    geo.push_back(element_geometry(mesh, e));
    const Point& c = geo.back().barycenter;
    const bool in_o = omega_box.contains(c, mesh.dim);
    const bool in_w = w_box.contains(c, mesh.dim);
    const bool in_wt = wtilde_box.contains(c, mesh.dim);
    if (int(in_o) + int(in_w) + int(in_wt) > 1) {
      throw ValidationError("region boxes overlap at element " + std::to_string(e));
    }
    if (in_o) lab.element_tags[e] = Region::Omega;
    if (in_w) lab.element_tags[e] = Region::W;
    if (in_wt) lab.element_tags[e] = Region::WTilde;
  }

  const std::set<int> omega = closure(mesh, lab.element_tags, Region::Omega);
  const std::set<int> w = closure(mesh, lab.element_tags, Region::W);
  const std::set<int> wt = closure(mesh, lab.element_tags, Region::WTilde);
  if (omega.empty()) throw ValidationError("region OMEGA is empty");
  if (w.empty()) throw ValidationError("region W is empty");
  if (wt.empty()) throw ValidationError("region WTILDE is empty");
  if (intersects(omega, w)) throw ValidationError("closures of OMEGA and W intersect");
  if (intersects(omega, wt)) throw ValidationError("closures of OMEGA and WTILDE intersect");
  if (intersects(w, wt)) throw ValidationError("closures of W and WTILDE intersect");

  for (int e = 0; e < mesh.element_count(); ++e) {
    if (lab.element_tags[e] != Region::OtherExterior) continue;
    bool touches = false;
    for (int i = 0; i < mesh.vertices_per_element(); ++i) {
      const int n = mesh.elements[e][i];
      touches = touches || omega.count(n) || w.count(n) || wt.count(n);
    }
    if (touches) continue;
    if (e_box && !e_box->contains(geo[e].barycenter, mesh.dim)) continue;
    lab.element_tags[e] = Region::E;
  }
  const std::set<int> eset = closure(mesh, lab.element_tags, Region::E);

  // Faces: 1D faces are nodes, 2D faces are edges.
  std::map<std::array<int, 2>, std::vector<int>> face_elements;
  for (int e = 0; e < mesh.element_count(); ++e) {
    const Element& el = mesh.elements[e];
    if (mesh.dim == 1) {
      face_elements[{el[0], el[0]}].push_back(e);
      face_elements[{el[1], el[1]}].push_back(e);
    } else {
      for (int i = 0; i < 3; ++i) {
        int p = el[i], q = el[(i + 1) % 3];
        if (p > q) std::swap(p, q);
        face_elements[{p, q}].push_back(e);
      }
    }
  }
  std::set<int> boundary;
  for (const auto& [face, els] : face_elements) {
    bool has_omega = false, has_other = false;
    for (int e : els) {
      (lab.element_tags[e] == Region::Omega ? has_omega : has_other) = true;
    }
    if (has_omega && has_other) {
      lab.boundary_faces.push_back(face);
      boundary.insert(face[0]);
      boundary.insert(face[1]);
    }
  }
  // Nodes shared by Omega and non-Omega elements that are not on a boundary
  // face (2D corner touching) still belong to the boundary.
  for (int e = 0; e < mesh.element_count(); ++e) {
    if (lab.element_tags[e] == Region::Omega) continue;
    for (int i = 0; i < mesh.vertices_per_element(); ++i) {
      const int n = mesh.elements[e][i];
      if (omega.count(n)) boundary.insert(n);
    }
  }

  std::set<int> interior;
  for (int n : omega) {
    if (!boundary.count(n)) interior.insert(n);
  }
  lab.omega_interior = free_nodes(mesh, interior);
  lab.omega_boundary = free_nodes(mesh, boundary);
  lab.w = free_nodes(mesh, w);
  lab.wtilde = free_nodes(mesh, wt);
  lab.e = free_nodes(mesh, eset);
  if (lab.omega_interior.empty()) throw ValidationError("OMEGA has no interior nodes");
  if (lab.w.empty()) throw ValidationError("W has no free nodes");
  if (lab.wtilde.empty()) throw ValidationError("WTILDE has no free nodes");
  if (lab.e.empty()) throw ValidationError("region E is empty");

  lab.node_tags.assign(mesh.node_count(), Region::OtherExterior);
  for (int n : omega) lab.node_tags[n] = Region::Omega;
  for (int n : w) lab.node_tags[n] = Region::W;
  for (int n : wt) lab.node_tags[n] = Region::WTilde;
  for (int n : eset) lab.node_tags[n] = Region::E;
  return lab;
}

namespace {

void write_node_list(std::ostringstream& os, const char* key, const std::vector<int>& v) {
  os << "\"" << key << "\":[";
  for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << "]";
}

}  // namespace

std::string mesh_to_json(const Mesh& mesh, const RegionLabels* labels) {
  std::ostringstream os;
  os << "{\"dim\":" << mesh.dim << ",\"nodes\":[";
  for (int n = 0; n < mesh.node_count(); ++n) {
    os << (n ? "," : "") << "[" << format_double(mesh.nodes[n][0]);
    if (mesh.dim == 2) os << "," << format_double(mesh.nodes[n][1]);
    os << "]";
  }
  os << "],\"elements\":[";
  for (int e = 0; e < mesh.element_count(); ++e) {
    os << (e ? "," : "") << "[";
    for (int i = 0; i < mesh.vertices_per_element(); ++i) {
      os << (i ? "," : "") << mesh.elements[e][i];
    }
    os << "]";
  }
  os << "]";
  if (labels) {
    os << ",\"labels\":{\"elements\":[";
    for (size_t e = 0; e < labels->element_tags.size(); ++e) {
      os << (e ? "," : "") << "\"" << region_name(labels->element_tags[e]) << "\"";
    }
    os << "],";
    write_node_list(os, "omega_interior", labels->omega_interior);
    os << ",";
    write_node_list(os, "omega_boundary", labels->omega_boundary);
    os << ",";
    write_node_list(os, "w", labels->w);
    os << ",";
    write_node_list(os, "wtilde", labels->wtilde);
    os << ",";
    write_node_list(os, "e", labels->e);
    os << "}";
  }
  os << "}";
  return os.str();
}

}  // namespace fracred
