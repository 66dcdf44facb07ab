#include "fracred/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <set>
#include <sstream>

#include "fracred/calculus.hpp"
#include "fracred/diagnostics.hpp"
#include "fracred/gauge.hpp"
#include "fracred/io.hpp"
#include "fracred/nonlocal.hpp"
#include "fracred/reduction.hpp"
#include "json.hpp"

namespace fracred {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- schema

void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; })) {
      throw SchemaError("unknown key '" + key + "' in " + where);
    }
  }
}

const json& required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw SchemaError(where + " is missing '" + key + "'");
  return j.at(key);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw SchemaError(where + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(where + " must be finite");
  return v;
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw SchemaError(where + " must be an integer");
  return j.get<int>();
}

std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + " must be an array");
  std::vector<double> out;
  for (size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Box parse_box(const json& j, int dim, const std::string& where) {
  const std::vector<double> v = numbers(j, where);
  if (static_cast<int>(v.size()) != 2 * dim) {
    throw SchemaError(where + " needs " + std::to_string(2 * dim) + " numbers");
  }
  Box b;
  b.xmin = v[0];
  b.xmax = v[1];
  if (dim == 2) {
    b.ymin = v[2];
    b.ymax = v[3];
  }
  if (!(b.xmin < b.xmax) || (dim == 2 && !(b.ymin < b.ymax))) {
    throw SchemaError(where + " has an empty range");
  }
  return b;
}

fs::path parse_path(const json& j, const fs::path& base, const std::string& where) {
  const json& f = required(j, "path", where);
  if (!f.is_string()) throw SchemaError(where + ".path must be a string");
  fs::path p = f.get<std::string>();
  return p.is_absolute() ? p : base / p;
}

std::string type_of(const json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + " must be an object");
  const json& t = required(j, "type", where);
  if (!t.is_string()) throw SchemaError(where + ".type must be a string");
  return t.get<std::string>();
}

// {"type": "identity"} | {"type": "scalar", "value": s} | {"type": "diag", "values": [...]}
// | {"type": "matrix", "values": [[...], ...]} | {"type": "per_element_file", "path": p};
// the string "identity" is accepted as shorthand.
void parse_A(const json& A, int dim, const fs::path& base, const std::string& w, OperatorSpec& s) {
  if (A.is_string()) {
    if (A.get<std::string>() != "identity") throw SchemaError(w + " must be \"identity\"");
    return;
  }
  const std::string type = type_of(A, w);
  if (type == "identity") {
    only_keys(A, {"type"}, w);
  } else if (type == "scalar") {
    only_keys(A, {"type", "value"}, w);
    s.A = Mat2::Identity(dim, dim) * number(required(A, "value", w), w + ".value");
  } else if (type == "diag") {
    only_keys(A, {"type", "values"}, w);
    const std::vector<double> d = numbers(required(A, "values", w), w + ".values");
    if (static_cast<int>(d.size()) != dim) {
      throw SchemaError(w + ".values needs " + std::to_string(dim) + " entries");
    }
    Mat2 m = Mat2::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) m(k, k) = d[k];
    s.A = m;
  } else if (type == "matrix") {
    only_keys(A, {"type", "values"}, w);
    const json& rows = required(A, "values", w);
    if (!rows.is_array() || static_cast<int>(rows.size()) != dim) {
      throw SchemaError(w + ".values must be " + std::to_string(dim) + " x " + std::to_string(dim));
    }
    Mat2 m(dim, dim);
    for (int r = 0; r < dim; ++r) {
      const std::vector<double> row = numbers(rows[r], w + ".values");
      if (static_cast<int>(row.size()) != dim) throw SchemaError(w + ".values must be square");
      for (int c = 0; c < dim; ++c) m(r, c) = row[c];
    }
    s.A = m;
  } else if (type == "per_element_file") {
    only_keys(A, {"type", "path"}, w);
    s.A_file = parse_path(A, base, w);
  } else {
    throw SchemaError(w + ".type must be identity, scalar, diag, matrix or per_element_file");
  }
}

// {"type": "zero"} | {"type": "constant", "value": [...]} | {"type": "per_element_file", "path": p}.
void parse_b(const json& b, int dim, const fs::path& base, const std::string& w, OperatorSpec& s) {
  const std::string type = type_of(b, w);
  if (type == "zero") {
    only_keys(b, {"type"}, w);
  } else if (type == "constant") {
    only_keys(b, {"type", "value"}, w);
    const std::vector<double> v = numbers(required(b, "value", w), w + ".value");
    if (static_cast<int>(v.size()) != dim) {
      throw SchemaError(w + ".value needs " + std::to_string(dim) + " entries");
    }
    Vec2 bv(dim);
    for (int k = 0; k < dim; ++k) bv(k) = v[k];
    s.b = bv;
  } else if (type == "per_element_file") {
    only_keys(b, {"type", "path"}, w);
    s.b_file = parse_path(b, base, w);
  } else {
    throw SchemaError(w + ".type must be zero, constant or per_element_file");
  }
}

// {"type": "zero"} | {"type": "constant", "value": x} | {"type": "per_element_file", "path": p};
// a bare number is accepted as shorthand for a constant.
void parse_c(const json& c, const fs::path& base, const std::string& w, OperatorSpec& s) {
  if (c.is_number()) {
    s.c = number(c, w);
    return;
  }
  const std::string type = type_of(c, w);
  if (type == "zero") {
    only_keys(c, {"type"}, w);
  } else if (type == "constant") {
    only_keys(c, {"type", "value"}, w);
    s.c = number(required(c, "value", w), w + ".value");
  } else if (type == "per_element_file") {
    only_keys(c, {"type", "path"}, w);
    s.c_file = parse_path(c, base, w);
  } else {
    throw SchemaError(w + ".type must be zero, constant or per_element_file");
  }
}

OperatorSpec parse_operator(const json& j, int dim, const fs::path& base, const std::string& where) {
  only_keys(j, {"A", "b", "c", "ellipticity"}, where);
  OperatorSpec s;
  if (j.contains("A")) parse_A(j.at("A"), dim, base, where + ".A", s);
  if (j.contains("b")) parse_b(j.at("b"), dim, base, where + ".b", s);
  if (j.contains("c")) parse_c(j.at("c"), base, where + ".c", s);
  if (j.contains("ellipticity")) {
    s.ellipticity = number(j.at("ellipticity"), where + ".ellipticity");
    if (!(*s.ellipticity >= 1.0)) throw SchemaError(where + ".ellipticity must be >= 1");
  }
  return s;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("config is not valid JSON: ") + e.what());
  }
  only_keys(j, {"mesh", "regions", "operators", "a", "quad", "diffeo", "suites", "seed", "out",
                "diagnostics"},
            "config");
  ExperimentConfig cfg;

  const json& mesh = required(j, "mesh", "config");
  only_keys(mesh, {"dim", "box", "cells"}, "mesh");
  cfg.dim = integer(required(mesh, "dim", "mesh"), "mesh.dim");
  if (cfg.dim != 1 && cfg.dim != 2) throw SchemaError("mesh.dim must be 1 or 2");
  cfg.box = parse_box(required(mesh, "box", "mesh"), cfg.dim, "mesh.box");
  const json& cells = required(mesh, "cells", "mesh");
  if (cfg.dim == 1) {
    cfg.nx = integer(cells, "mesh.cells");
    if (cfg.nx < 2) throw SchemaError("mesh.cells must be >= 2");
  } else {
    if (!cells.is_array() || cells.size() != 2) throw SchemaError("mesh.cells must be [nx, ny]");
    cfg.nx = integer(cells[0], "mesh.cells[0]");
    cfg.ny = integer(cells[1], "mesh.cells[1]");
    if (cfg.nx < 1 || cfg.ny < 1) throw SchemaError("mesh.cells must be positive");
  }

  const json& regions = required(j, "regions", "config");
  only_keys(regions, {"omega", "w", "wtilde", "e"}, "regions");
  cfg.omega = parse_box(required(regions, "omega", "regions"), cfg.dim, "regions.omega");
  cfg.w = parse_box(required(regions, "w", "regions"), cfg.dim, "regions.w");
  cfg.wtilde = parse_box(required(regions, "wtilde", "regions"), cfg.dim, "regions.wtilde");
  if (regions.contains("e")) cfg.e = parse_box(regions.at("e"), cfg.dim, "regions.e");

  const json& ops = required(j, "operators", "config");
  if (!ops.is_array() || ops.empty() || ops.size() > 2) {
    throw SchemaError("operators must be an array of one or two entries");
  }
  for (size_t k = 0; k < ops.size(); ++k) {
    cfg.operators.push_back(
        parse_operator(ops[k], cfg.dim, base_dir, "operators[" + std::to_string(k) + "]"));
  }

  cfg.a = numbers(required(j, "a", "config"), "a");
  if (cfg.a.empty()) throw SchemaError("a must not be empty");
  for (double a : cfg.a) {
    if (!(a > 0.0 && a < 1.0)) throw SchemaError("every exponent in a must lie in (0, 1)");
  }

  if (j.contains("quad")) {
    const json& q = j.at("quad");
    only_keys(q, {"s_max", "n"}, "quad");
    if (q.contains("s_max")) cfg.s_max = number(q.at("s_max"), "quad.s_max");
    if (q.contains("n")) cfg.quad_n = integer(q.at("n"), "quad.n");
    if (!(cfg.s_max > 0.0) || cfg.quad_n < 2) throw SchemaError("quad needs s_max > 0 and n >= 2");
  }

  if (j.contains("diffeo")) {
    const json& d = j.at("diffeo");
    if (!d.is_object()) throw SchemaError("diffeo must be an object");
    const json& type = required(d, "type", "diffeo");
    if (!type.is_string()) throw SchemaError("diffeo.type must be a string");
    DiffeoSpec s;
    if (type == "radial_shrink") {
      only_keys(d, {"type", "rho", "factor"}, "diffeo");
      s.kind = DiffeoSpec::Kind::RadialShrink;
      s.rho = number(required(d, "rho", "diffeo"), "diffeo.rho");
      s.factor = number(required(d, "factor", "diffeo"), "diffeo.factor");
      if (!(s.rho > 0.0)) throw SchemaError("diffeo.rho must be positive");
      if (!(s.factor > 0.0 && s.factor < 2.0)) throw SchemaError("diffeo.factor must lie in (0, 2)");
    } else if (type == "nodal_file") {
      only_keys(d, {"type", "path"}, "diffeo");
      const json& p = required(d, "path", "diffeo");
      if (!p.is_string()) throw SchemaError("diffeo.path must be a string");
      s.kind = DiffeoSpec::Kind::NodalFile;
      s.path = p.get<std::string>();
      if (s.path.is_relative()) s.path = base_dir / s.path;
    } else {
      throw SchemaError("diffeo.type must be radial_shrink or nodal_file");
    }
    cfg.diffeo = s;
  }

  if (j.contains("suites")) {
    const json& s = j.at("suites");
    if (!s.is_array()) throw SchemaError("suites must be an array");
    for (const auto& name : s) {
      if (!name.is_string()) throw SchemaError("suite names must be strings");
      cfg.suites.push_back(name.get<std::string>());
    }
  }
  if (j.contains("seed")) {
    const json& s = j.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      throw SchemaError("seed must be a non-negative integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  if (j.contains("out")) {
    if (!j.at("out").is_string()) throw SchemaError("out must be a string");
    cfg.out = j.at("out").get<std::string>();
  }
  if (j.contains("diagnostics")) {
    const json& d = j.at("diagnostics");
    only_keys(d, {"heat_t"}, "diagnostics");
    if (d.contains("heat_t")) cfg.heat_t = number(d.at("heat_t"), "diagnostics.heat_t");
    if (!(cfg.heat_t > 0.0)) throw SchemaError("diagnostics.heat_t must be positive");
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  return parse_config(read_text_file(path), path.parent_path());
}

const std::vector<SuiteInfo>& list_suites() {
  static const std::vector<SuiteInfo> suites = {
      {"calibrate", "scalar quadrature of lambda^a and agreement of the heat and spectral routes"},
      {"assemble", "stiffness/mass assembly, spectrum and mesh summary"},
      {"direct", "exterior-value problem: zero data, linearity, interior positivity, energy"},
      {"reduce", "lift to the local problem and compare exterior and boundary Cauchy data"},
      {"gauge", "push-forward under the configured diffeo and gauge invariance of the data"},
      {"diagnostics", "unique continuation and Runge singular values, heat kernel, rigidity"},
  };
  return suites;
}

std::string list_suites_text() {
  std::ostringstream out;
  for (const SuiteInfo& s : list_suites()) out << s.name << "  " << s.description << '\n';
  return out.str();
}

namespace {

// -------------------------------------------------------------- scenario

class ContractFailure : public Error {
 public:
  using Error::Error;
};

CoefficientField build_coefficients(const OperatorSpec& spec, const Mesh& mesh,
                                    const RegionLabels& labels) {
  CoefficientField f = CoefficientField::laplacian(mesh);
  const int d = mesh.dim;
  const int ne = mesh.element_count();
  // Rows "element,entries..."; unlisted elements keep the Laplacian values.
  auto per_element = [&](const fs::path& path, int cols) {
    std::vector<std::vector<double>> table(ne);
    for (const auto& r : read_numeric_csv(path)) {
      if (static_cast<int>(r.size()) != cols + 1) {
        throw ValidationError(path.string() + ": expected element index and " +
                              std::to_string(cols) + " entries per row");
      }
      if (r[0] != std::floor(r[0]) || r[0] < 0 || r[0] >= ne) {
        throw ValidationError(path.string() + ": invalid element index " + format_double(r[0]));
      }
      table[static_cast<int>(r[0])].assign(r.begin() + 1, r.end());
    }
    return table;
  };
  if (spec.A_file) {
    const auto rows = per_element(*spec.A_file, d * d);
    for (int e = 0; e < ne; ++e) {
      if (rows[e].empty()) continue;
      for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) f.A[e](r, c) = rows[e][r * d + c];
      }
    }
  }
  if (spec.b_file) {
    const auto rows = per_element(*spec.b_file, d);
    for (int e = 0; e < ne; ++e) {
      for (int k = 0; k < d && !rows[e].empty(); ++k) f.b[e](k) = rows[e][k];
    }
  }
  if (spec.c_file) {
    const auto rows = per_element(*spec.c_file, 1);
    for (int e = 0; e < ne; ++e) {
      if (!rows[e].empty()) f.c[e] = rows[e][0];
    }
  }
  for (int e = 0; e < ne; ++e) {
    if (labels.element_tags[e] != Region::Omega) continue;
    if (spec.A) f.A[e] = *spec.A;
    if (spec.b) f.b[e] = *spec.b;
    if (!spec.c_file) f.c[e] = spec.c;
  }
  validate_support(f, labels);
  f.ellipticity = 1e300;
  const double observed = ellipticity_check(f);
  f.ellipticity = spec.ellipticity.value_or(std::max(1.0, observed));
  ellipticity_check(f);
  return f;
}

struct Contract {
  std::string suite;
  std::string name;
  double value;
  std::string relation;
  double threshold;
  bool pass;
};

struct Scenario {
  ExperimentConfig cfg;
  Mesh mesh;
  RegionLabels labels;
  std::deque<DiscreteOperator> ops;
  TimeQuadrature quad;
};

class Runner {
 public:
  Runner(Scenario& s, fs::path out, std::ostream& log) : s_(s), out_(std::move(out)), log_(log) {}

  void run_suite(const std::string& name) {
    suite_ = name;
    log_ << "[" << name << "]\n";
    if (name == "calibrate") calibrate();
    else if (name == "assemble") assemble();
    else if (name == "direct") direct();
    else if (name == "reduce") reduce();
    else if (name == "gauge") gauge();
    else if (name == "diagnostics") diagnostics();
  }

  const std::vector<Contract>& contracts() const { return contracts_; }
  const std::string& current_suite() const { return suite_; }

 private:
  Scenario& s_;
  fs::path out_;
  std::ostream& log_;
  std::string suite_;
  std::vector<Contract> contracts_;

  void check(const std::string& name, double value, const std::string& rel, double threshold) {
    bool pass = false;
    if (rel == "<") pass = value < threshold;
    else if (rel == "<=") pass = value <= threshold;
    else if (rel == ">") pass = value > threshold;
    else if (rel == ">=") pass = value >= threshold;
    contracts_.push_back({suite_, name, value, rel, threshold, pass});
    log_ << "  " << (pass ? "ok   " : "FAIL ") << name << " = " << format_double(value) << ' '
         << rel << ' ' << format_double(threshold) << '\n';
  }

  void write(const std::string& file, const std::string& text) { write_text_file(out_ / file, text); }
  void write(const std::string& file, const json& j) { write(file, j.dump(2) + "\n"); }

  std::mt19937_64 rng(std::uint64_t salt) const { return std::mt19937_64(s_.cfg.seed * 1000003ULL + salt); }

  Vec random_on(const DiscreteOperator& op, const std::vector<int>& nodes, std::mt19937_64& g) const {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec v = op.zeros();
    for (int d : op.dofs_of(nodes)) v(d) = Complex(u(g), 0.0);
    return v;
  }

  Vec random_full(const DiscreteOperator& op, std::mt19937_64& g) const {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec v(op.size());
    for (int i = 0; i < op.size(); ++i) v(i) = Complex(u(g), 0.0);
    return v;
  }

  static std::string op_name(size_t k) { return "op" + std::to_string(k); }

  void calibrate() {
    const DiscreteOperator& op = s_.ops.front();
    const std::vector<double> lambdas = {op.lambda_min(), 1.0, 10.0, op.lambda_max()};
    std::ostringstream csv;
    csv << "a,lambda,exact,quadrature,rel_error\n";
    double worst = 0.0;
    for (double a : s_.cfg.a) {
      for (const CalibrationRow& r : fracred::calibrate(s_.quad, lambdas, a)) {
        csv << format_double(r.a) << ',' << format_double(r.lambda) << ','
            << format_double(r.exact) << ',' << format_double(r.quadrature) << ','
            << format_double(r.rel_error) << '\n';
        worst = std::max(worst, r.rel_error);
      }
    }
    write("calibration.csv", csv.str());
    check("scalar_rel_error", worst, "<", kCalibrationTolerance);

    json routes = json::array();
    double route_worst = 0.0;
    for (size_t k = 0; k < s_.ops.size(); ++k) {
      const DiscreteOperator& o = s_.ops[k];
      for (double a : s_.cfg.a) {
        auto g = rng(100 + k);
        double m = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
          const Vec v = random_full(o, g);
          const Vec exact = apply_power(o, a, v);
          const Vec quad = power_via_heat_quadrature(o, a, v, s_.quad);
          m = std::max(m, (quad - exact).norm() / exact.norm());
        }
        routes.push_back({{"operator", op_name(k)}, {"a", a}, {"max_rel_error", m}});
        route_worst = std::max(route_worst, m);
      }
    }
    check("route_rel_error", route_worst, "<", 1e-6);
    write("calibrate.json", json{{"quadrature", {{"s_max", s_.quad.s_max}, {"n", s_.quad.size()}}},
                                 {"lambdas", lambdas},
                                 {"max_scalar_rel_error", worst},
                                 {"routes", routes}});
  }

  void assemble() {
    write("mesh.json", mesh_to_json(s_.mesh, &s_.labels) + "\n");
    json ops = json::array();
    for (size_t k = 0; k < s_.ops.size(); ++k) {
      const DiscreteOperator& o = s_.ops[k];
      const CMat& K = o.stiffness();
      const double herm = (K - K.adjoint()).cwiseAbs().maxCoeff();
      const double msym = (o.mass() - o.mass().transpose()).cwiseAbs().maxCoeff();
      const CMat& phi = o.eigenvectors();
      const double ortho =
          (phi.adjoint() * o.mass() * phi - CMat::Identity(o.size(), o.size())).cwiseAbs().maxCoeff();
      const double scale = K.cwiseAbs().maxCoeff();
      check(op_name(k) + ".hermitian_defect", herm, "<=", 1e-14 * scale);
      check(op_name(k) + ".mass_symmetry_defect", msym, "<=", 0.0);
      check(op_name(k) + ".m_orthonormality_defect", ortho, "<", 1e-10);
      check(op_name(k) + ".lambda_min", o.lambda_min(), ">", 0.0);
      ops.push_back({{"name", op_name(k)},
                     {"dofs", o.size()},
                     {"real", o.is_real()},
                     {"ellipticity", o.coefficients().ellipticity},
                     {"lambda_min", o.lambda_min()},
                     {"lambda_max", o.lambda_max()},
                     {"hermitian_defect", herm},
                     {"mass_symmetry_defect", msym},
                     {"m_orthonormality_defect", ortho}});
      std::ostringstream sp;
      sp << "index,lambda\n";
      for (int i = 0; i < o.size(); ++i) sp << i << ',' << format_double(o.eigenvalues()(i)) << '\n';
      write("spectrum_" + op_name(k) + ".csv", sp.str());
    }
    const RegionLabels& L = s_.labels;
    write("assemble.json",
          json{{"dim", s_.mesh.dim},
               {"nodes", s_.mesh.node_count()},
               {"elements", s_.mesh.element_count()},
               {"total_measure", total_measure(s_.mesh)},
               {"region_nodes",
                {{"omega_interior", L.omega_interior.size()},
                 {"omega_boundary", L.omega_boundary.size()},
                 {"w", L.w.size()},
                 {"wtilde", L.wtilde.size()},
                 {"e", L.e.size()}}},
               {"operators", ops}});
  }

  void direct() {
    json rows = json::array();
    for (size_t k = 0; k < s_.ops.size(); ++k) {
      const DiscreteOperator& o = s_.ops[k];
      for (double a : s_.cfg.a) {
        const std::string tag = op_name(k) + ".a" + format_double(a);
        const ExteriorValueSolver solver(o, a, s_.labels);
        auto g = rng(200 + k);

        const NonlocalSolution zero = solver.solve(ExteriorData{o.zeros()});
        const double zero_max = zero.u.cwiseAbs().maxCoeff();

        const Vec f1 = random_on(o, s_.labels.w, g);
        const Vec f2 = random_on(o, s_.labels.w, g);
        const Complex alpha(0.7, 0.0), beta(-1.3, 0.0);
        const Vec u1 = solver.solve(ExteriorData{f1}).u;
        const Vec u2 = solver.solve(ExteriorData{f2}).u;
        const Vec u12 = solver.solve(ExteriorData{alpha * f1 + beta * f2}).u;
        const Vec comb = alpha * u1 + beta * u2;
        const double lin = (u12 - comb).norm() / comb.norm();

        const CMat gii = submatrix(solver.form(), solver.interior(), solver.interior());
        Eigen::SelfAdjointEigenSolver<CMat> es(gii, Eigen::EigenvaluesOnly);
        const double gii_min = es.eigenvalues().minCoeff();

        const CMat& G = solver.form();
        const double e0 = u1.dot(G * u1).real();
        double min_increase = INFINITY;
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        for (int trial = 0; trial < 20; ++trial) {
          Vec v = u1;
          for (int d : solver.interior()) v(d) += 0.1 * unif(g);
          min_increase = std::min(min_increase, v.dot(G * v).real() - e0);
        }
        const double residual = solver.solve(ExteriorData{f1}).residual;
        const double stab = solver.stability_constant();

        check(tag + ".zero_data_max", zero_max, "<=", 0.0);
        check(tag + ".linearity_defect", lin, "<", 1e-12);
        check(tag + ".interior_block_min_eig", gii_min, ">", 0.0);
        check(tag + ".min_energy_increase", min_increase, ">", 0.0);
        rows.push_back({{"operator", op_name(k)},
                        {"a", a},
                        {"zero_data_max", zero_max},
                        {"linearity_defect", lin},
                        {"interior_block_min_eig", gii_min},
                        {"min_energy_increase", min_increase},
                        {"solve_residual", residual},
                        {"stability_constant", stab}});
      }
    }
    write("direct.json", json{{"cases", rows}});
  }

  void reduce() {
    json lifts = json::array();
    json gaps = json::array();
    for (double a : s_.cfg.a) {
      for (size_t k = 0; k < s_.ops.size(); ++k) {
        const DiscreteOperator& o = s_.ops[k];
        const ExteriorValueSolver solver(o, a, s_.labels);
        double ellip = 0.0, psik = 0.0, ellip2 = 0.0, chain = 0.0;
        for (const ExteriorData& f : hat_probes(o, s_.labels)) {
          const LiftedPair p = lift(o, a, solver.solve(f), s_.labels);
          ellip = std::max(ellip, p.ellip_residual);
          psik = std::max(psik, p.psik_residual);
          ellip2 = std::max(ellip2, p.ellip2_residual);
          chain = std::max(chain, p.chain_residual);
        }
        const std::string tag = op_name(k) + ".a" + format_double(a);
        check(tag + ".lift_residual", std::max({ellip, psik, ellip2}), "<", 1e-9);
        lifts.push_back({{"operator", op_name(k)},
                         {"a", a},
                         {"ellip", ellip},
                         {"psik", psik},
                         {"ellip2", ellip2},
                         {"chain", chain}});
      }
      const std::vector<ExteriorData> probes = hat_probes(s_.ops.front(), s_.labels);
      const ProbeReport same = theorem1_probe(s_.ops.front(), s_.ops.front(), a, probes, s_.labels);
      check("a" + format_double(a) + ".identical.exterior_gap", same.exterior_gap, "<", 1e-10);
      check("a" + format_double(a) + ".identical.boundary_gap", same.boundary_gap, "<", 1e-10);
      json entry = {{"a", a},
                    {"identical", {{"exterior_gap", same.exterior_gap},
                                   {"boundary_gap", same.boundary_gap}}}};
      if (s_.ops.size() > 1) {
        const ProbeReport diff = theorem1_probe(s_.ops[0], s_.ops[1], a, probes, s_.labels);
        entry["distinct"] = {{"exterior_gap", diff.exterior_gap},
                             {"boundary_gap", diff.boundary_gap}};
      }
      gaps.push_back(entry);
    }
    write("reduce.json", json{{"lifts", lifts}});
    write("cauchy_gap.json", json{{"probes", s_.labels.w.size()}, {"gaps", gaps}});
  }

  void gauge() {
    const DiffeoSpec& d = *s_.cfg.diffeo;
    const DiscreteOperator& op = s_.ops.front();
    const Diffeo F = d.kind == DiffeoSpec::Kind::RadialShrink
                         ? radial_shrink(s_.mesh, d.rho, d.factor)
                         : nodal_file_diffeo(s_.mesh, d.path);
    const DiscreteOperator mapped = pushforward_operator(op, F);
    const std::vector<ExteriorData> probes = hat_probes(op, s_.labels);
    double moved = 0.0;
    for (int n = 0; n < s_.mesh.node_count(); ++n) {
      moved = std::max({moved, std::abs(F.targets[n][0] - s_.mesh.nodes[n][0]),
                        std::abs(F.targets[n][1] - s_.mesh.nodes[n][1])});
    }
    json cases = json::array();
    for (double a : s_.cfg.a) {
      const GaugeReport r = gauge_invariance_check(op, mapped, a, s_.labels, probes);
      const std::string tag = "a" + format_double(a);
      check(tag + ".stiffness_deviation", r.stiffness_deviation, "<=", 1e-12);
      check(tag + ".mass_deviation", r.mass_deviation, "<=", 1e-12);
      check(tag + ".spectrum_deviation", r.spectrum_deviation, "<", 1e-10);
      check(tag + ".cauchy_deviation", r.cauchy_deviation, "<", 1e-10);
      cases.push_back({{"a", a},
                       {"stiffness_deviation", r.stiffness_deviation},
                       {"mass_deviation", r.mass_deviation},
                       {"spectrum_deviation", r.spectrum_deviation},
                       {"interior_coefficient_difference", r.interior_coefficient_difference},
                       {"cauchy_deviation", r.cauchy_deviation}});
    }
    json spec = d.kind == DiffeoSpec::Kind::RadialShrink
                    ? json{{"type", "radial_shrink"}, {"rho", d.rho}, {"factor", d.factor}}
                    : json{{"type", "nodal_file"}, {"path", d.path.filename().string()}};
    write("gauge_check.json",
          json{{"diffeo", spec}, {"max_displacement", moved}, {"probes", probes.size()},
               {"cases", cases}});
  }

  void diagnostics() {
    const DiscreteOperator& op = s_.ops.front();
    const RegionLabels& L = s_.labels;
    std::set<int> omega(L.omega_interior.begin(), L.omega_interior.end());
    omega.insert(L.omega_boundary.begin(), L.omega_boundary.end());
    // Nested sparse exterior sets: every 4th node of W~, then every 4th of W
    // added, then every 2nd of W~ added.
    auto every = [](const std::vector<int>& v, size_t k) {
      std::vector<int> out;
      for (size_t i = 0; i < v.size(); i += k) out.push_back(v[i]);
      return out;
    };
    auto unite = [](std::vector<int> x, const std::vector<int>& y) {
      x.insert(x.end(), y.begin(), y.end());
      std::sort(x.begin(), x.end());
      x.erase(std::unique(x.begin(), x.end()), x.end());
      return x;
    };
    const std::vector<int> s1 = every(L.wtilde, 4);
    const std::vector<int> s2 = unite(s1, every(L.w, 4));
    const std::vector<int> s3 = unite(s2, every(L.wtilde, 2));
    const std::vector<std::vector<int>> sigmas = {s1, s2, s3};

    json out = json::object();
    json ucp = json::array();
    json runge = json::array();
    json rigidity = json::array();
    for (double a : s_.cfg.a) {
      const std::string tag = "a" + format_double(a);
      std::vector<SingularValueReport> reps;
      for (size_t i = 0; i < sigmas.size(); ++i) {
        SingularValueReport r = ucp_quotient(op, a, sigmas[i], L);
        write("svals_ucp_" + tag + "_sigma" + std::to_string(i + 1) + ".csv", r.to_csv());
        check(tag + ".ucp_sigma" + std::to_string(i + 1) + ".sval_ratio",
              r.smallest() / r.largest(), ">", 1e-10);
        ucp.push_back({{"a", a},
                       {"sigma", i + 1},
                       {"nodes", sigmas[i].size()},
                       {"largest", r.largest()},
                       {"smallest", r.smallest()}});
        reps.push_back(std::move(r));
      }
      double worst = 0.0;
      for (size_t i = 1; i < reps.size(); ++i) {
        for (size_t k = 0; k < reps[i - 1].values.size(); ++k) {
          worst = std::max(worst, reps[i - 1].values[k] - reps[i].values[k]);
        }
      }
      check(tag + ".ucp_interlacing_violation", worst, "<=", 1e-12 * reps.back().largest());

      std::vector<int> all = op.dof_nodes();
      const SingularValueReport full = ucp_quotient(op, a, all);
      const double bound = ucp_full_bound(op, a);
      check(tag + ".ucp_all_dofs.smallest_over_bound", full.smallest() / bound, ">=", 1.0 - 1e-12);
      ucp.push_back({{"a", a},
                     {"sigma", "all"},
                     {"nodes", all.size()},
                     {"largest", full.largest()},
                     {"smallest", full.smallest()},
                     {"lower_bound", bound}});

      if (!L.e.empty()) {
        const SingularValueReport r = runge_rank(op, a, L);
        write("svals_runge_" + tag + ".csv", r.to_csv());
        const double ratio = r.largest() > 0.0 ? r.smallest() / r.largest() : 0.0;
        if (r.rows <= r.cols) check(tag + ".runge_sval_ratio", ratio, ">", 1e-10);
        runge.push_back({{"a", a},
                         {"e_nodes", r.rows},
                         {"w_nodes", r.cols},
                         {"largest", r.largest()},
                         {"smallest", r.smallest()},
                         {"ratio", ratio}});
      }

      if (s_.ops.size() > 1) {
        const int w0 = L.w[L.w.size() / 2];
        const ExteriorData f = ExteriorData::hat(op, L, w0);
        const RigidityReport same =
            heatflow_rigidity_probe(op, op, a, f, s_.quad, L.wtilde, L);
        const RigidityReport diff =
            heatflow_rigidity_probe(s_.ops[0], s_.ops[1], a, f, s_.quad, L.wtilde, L);
        check(tag + ".rigidity_identical", same.value, "<", 1e-10);
        check(tag + ".rigidity_deviation", diff.deviation, "<", 1e-8);
        rigidity.push_back({{"a", a},
                            {"probe_node", w0},
                            {"identical", same.value},
                            {"moment", diff.value},
                            {"spectral", diff.spectral_value},
                            {"deviation", diff.deviation}});
      }
    }
    out["ucp"] = ucp;
    out["runge"] = runge;
    out["rigidity"] = rigidity;

    bool laplacian = true;
    for (int e = 0; e < s_.mesh.element_count(); ++e) {
      const CoefficientField& c = op.coefficients();
      laplacian = laplacian && c.A[e] == Mat2::Identity(s_.mesh.dim, s_.mesh.dim) &&
                  c.b[e].cwiseAbs().maxCoeff() == 0.0 && c.c[e] == 0.0;
    }
    if (laplacian) {
      const double t = s_.cfg.heat_t;
      const Point centre{0.5 * (s_.cfg.omega.xmin + s_.cfg.omega.xmax),
                         0.5 * (s_.cfg.omega.ymin + s_.cfg.omega.ymax)};
      int x = op.dof_nodes().front();
      double best = INFINITY;
      for (int n : op.dof_nodes()) {
        const double d = std::hypot(s_.mesh.nodes[n][0] - centre[0], s_.mesh.nodes[n][1] - centre[1]);
        if (d < best) {
          best = d;
          x = n;
        }
      }
      std::vector<std::pair<int, int>> pairs;
      for (double k : {0.0, 0.5, 1.0, 1.5, 2.0}) {
        const double target = k * std::sqrt(t);
        int z = x;
        double bz = INFINITY;
        for (int n : op.dof_nodes()) {
          if (s_.mesh.dim == 2 && s_.mesh.nodes[n][1] != s_.mesh.nodes[x][1]) continue;
          const double d = std::abs(s_.mesh.nodes[n][0] - s_.mesh.nodes[x][0] - target);
          if (d < bz) {
            bz = d;
            z = n;
          }
        }
        if (std::find(pairs.begin(), pairs.end(), std::make_pair(x, z)) == pairs.end()) {
          pairs.emplace_back(x, z);
        }
      }
      const HeatBoundReport h = heat_bound_check(op, t, pairs);
      json rows = json::array();
      for (const HeatBoundRow& r : h.rows) {
        rows.push_back({{"x", r.x}, {"z", r.z}, {"distance", r.distance}, {"discrete", r.discrete},
                        {"gaussian", r.gaussian}, {"ratio", r.ratio}});
      }
      if (h.in_window) {
        check("heat_ratio_min", h.min_ratio(), ">=", 0.9);
        check("heat_ratio_max", h.max_ratio(), "<=", 1.1);
      }
      out["heat"] = {{"t", t}, {"in_window", h.in_window}, {"pairs", rows}};
    }
    write("diagnostics.json", out);
  }
};

json failure_manifest(int code, const std::string& kind, const std::string& suite,
                      const std::string& message) {
  return json{{"status", "failed"},
              {"exit_code", code},
              {"kind", kind},
              {"suite", suite},
              {"message", message}};
}

void try_write(const fs::path& path, const json& j) {
  try {
    fs::create_directories(path.parent_path());
    write_text_file(path, j.dump(2) + "\n");
  } catch (const std::exception&) {
  }
}

}  // namespace

int run_experiment(const fs::path& config_path, const RunOptions& options, std::ostream& log) {
  std::optional<fs::path> out_dir = options.out;
  std::string suite = "config";
  int code = kExitOk;
  json failure;
  try {
    ExperimentConfig cfg = load_config(config_path);
    if (options.seed) cfg.seed = *options.seed;
    if (options.suites) cfg.suites = *options.suites;
    if (!out_dir) {
      out_dir = cfg.out.is_absolute() ? cfg.out : config_path.parent_path() / cfg.out;
    }

    std::vector<std::string> selected;
    {
      std::set<std::string> wanted(cfg.suites.begin(), cfg.suites.end());
      for (const std::string& name : cfg.suites) {
        const auto& all = list_suites();
        if (std::none_of(all.begin(), all.end(), [&](const SuiteInfo& s) { return name == s.name; })) {
          throw SchemaError("unknown suite '" + name + "'");
        }
      }
      for (const SuiteInfo& s : list_suites()) {
        const bool gauge = std::string(s.name) == "gauge";
        if (wanted.empty() ? (!gauge || cfg.diffeo) : wanted.count(s.name)) selected.push_back(s.name);
      }
      if (std::count(selected.begin(), selected.end(), "gauge") && !cfg.diffeo) {
        throw SchemaError("the gauge suite needs a diffeo");
      }
    }

    fs::create_directories(*out_dir);
    fs::remove(*out_dir / "failure.json");

    suite = "setup";
    Scenario s;
    s.cfg = cfg;
    s.mesh = cfg.dim == 1 ? build_interval_mesh(cfg.box.xmin, cfg.box.xmax, cfg.nx)
                          : build_rect_mesh(cfg.box, cfg.nx, cfg.ny);
    s.labels = label_regions(s.mesh, cfg.omega, cfg.w, cfg.wtilde, cfg.e);
    s.quad = make_time_quadrature(cfg.s_max, cfg.quad_n);
    std::vector<CoefficientField> fields;
    for (const OperatorSpec& spec : cfg.operators) {
      fields.push_back(build_coefficients(spec, s.mesh, s.labels));
    }
    for (const CoefficientField& f : fields) s.ops.push_back(assemble(s.mesh, f));
    for (const auto& o : s.ops) {
      for (double a : cfg.a) require_calibrated(s.quad, o, a);
    }

    Runner runner(s, *out_dir, log);
    for (const std::string& name : selected) {
      suite = name;
      runner.run_suite(name);
    }
    json contracts = json::array();
    json failed = json::array();
    for (const Contract& c : runner.contracts()) {
      json entry = {{"suite", c.suite}, {"name", c.name},        {"value", c.value},
                    {"relation", c.relation}, {"threshold", c.threshold}, {"pass", c.pass}};
      if (!c.pass) failed.push_back(entry);
      contracts.push_back(std::move(entry));
    }
    write_text_file(*out_dir / "summary.json",
                    json{{"status", failed.empty() ? "passed" : "failed"},
                         {"seed", cfg.seed},
                         {"suites", selected},
                         {"contracts", contracts}}
                            .dump(2) +
                        "\n");
    if (!failed.empty()) {
      code = kExitContract;
      failure = failure_manifest(code, "contract", failed.front()["suite"], "asserted contracts failed");
      failure["failed_contracts"] = failed;
    }
  } catch (const SchemaError& e) {
    code = kExitSchema;
    failure = failure_manifest(code, "schema", suite, e.what());
  } catch (const IoError& e) {
    code = kExitIo;
    failure = failure_manifest(code, "io", suite, e.what());
  } catch (const fs::filesystem_error& e) {
    code = kExitIo;
    failure = failure_manifest(code, "io", suite, e.what());
  } catch (const PositivityError& e) {
    code = kExitContract;
    failure = failure_manifest(code, "positivity", suite, e.what());
    failure["lambda_min"] = e.lambda_min();
  } catch (const QuadratureError& e) {
    code = kExitContract;
    failure = failure_manifest(code, "quadrature", suite, e.what());
  } catch (const ValidationError& e) {
    code = kExitSchema;
    failure = failure_manifest(code, "validation", suite, e.what());
  } catch (const std::exception& e) {
    code = kExitContract;
    failure = failure_manifest(code, "error", suite, e.what());
  }
  if (code != kExitOk) {
    log << "error (" << failure["kind"].get<std::string>() << "): "
        << failure["message"].get<std::string>() << '\n';
    if (out_dir) try_write(*out_dir / "failure.json", failure);
  }
  return code;
}

}  // namespace fracred
