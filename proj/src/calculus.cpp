#include "fracred/calculus.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "fracred/io.hpp"

namespace fracred {

double gamma_neg(double a) { return -std::tgamma(1.0 - a) / a; }

TimeQuadrature make_time_quadrature(double s_max, int n) {
  if (!(s_max > 0.0) || n < 2) throw ValidationError("time quadrature needs s_max > 0 and n >= 2");
  TimeQuadrature q;
  q.s_max = s_max;
  q.step = 2.0 * s_max / (n - 1);
  q.nodes.reserve(n);
  q.weights.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double s = -s_max + k * q.step;
    const double t = std::exp(std::numbers::pi * std::sinh(s));
    q.nodes.push_back(t);
    q.weights.push_back(q.step * std::numbers::pi * std::cosh(s) * t);
  }
  return q;
}

double scalar_power_by_quadrature(const TimeQuadrature& quad, double lambda, double a) {
  double sum = 0.0;
  for (int q = 0; q < quad.size(); ++q) {
    const double t = quad.nodes[q];
    sum += quad.weights[q] * std::expm1(-t * lambda) * std::pow(t, -1.0 - a);
  }
  return sum / gamma_neg(a);
}

std::vector<CalibrationRow> calibrate(const TimeQuadrature& quad, const std::vector<double>& lambdas,
                                      double a) {
  std::vector<CalibrationRow> rows;
  for (double lam : lambdas) {
    CalibrationRow r;
    r.a = a;
    r.lambda = lam;
    r.exact = std::pow(lam, a);
    r.quadrature = scalar_power_by_quadrature(quad, lam, a);
    r.rel_error = std::abs(r.quadrature - r.exact) / std::abs(r.exact);
    rows.push_back(r);
  }
  return rows;
}

void require_calibrated(const TimeQuadrature& quad, const DiscreteOperator& op, double a,
                        double tol) {
  const double lo = op.lambda_min();
  const double hi = op.lambda_max();
  constexpr int kSweep = 33;
  std::vector<double> lambdas;
  for (int k = 0; k < kSweep; ++k) {
    lambdas.push_back(k + 1 == kSweep ? hi : lo * std::pow(hi / lo, double(k) / (kSweep - 1)));
  }
  for (const CalibrationRow& r : calibrate(quad, lambdas, a)) {
    if (!(r.rel_error <= tol)) {
      throw QuadratureError("time quadrature is not calibrated for lambda = " +
                            format_double(r.lambda) + ", a = " + format_double(a) +
                            " (relative error " + format_double(r.rel_error) + ")");
    }
  }
}

Vec apply_power(const DiscreteOperator& op, double a, const Vec& v) {
  if (!(a >= -1.0 && a <= 1.0)) throw ValidationError("exponent must lie in [-1, 1]");
  if (v.size() != op.size()) throw ValidationError("vector size does not match the operator");
  if (a == 0.0) return v;
  if (a == 1.0) return op.solve_mass(op.stiffness() * v);
  return op.apply_function([a](double lam) { return std::pow(lam, a); }, v);
}

Vec heat_apply(const DiscreteOperator& op, double t, const Vec& v) {
  if (!(t >= 0.0)) throw ValidationError("heat semigroup time must be non-negative");
  if (v.size() != op.size()) throw ValidationError("vector size does not match the operator");
  if (t == 0.0) return v;
  return op.apply_function([t](double lam) { return std::exp(-t * lam); }, v);
}

Vec heat_increment(const DiscreteOperator& op, double t, const Vec& v) {
  if (!(t >= 0.0)) throw ValidationError("heat semigroup time must be non-negative");
  if (t == 0.0) return op.zeros();
  return op.apply_function([t](double lam) { return std::expm1(-t * lam); }, v);
}

Vec power_via_heat_quadrature(const DiscreteOperator& op, double a, const Vec& v,
                              const TimeQuadrature& quad) {
  if (!(a > 0.0 && a < 1.0)) throw ValidationError("heat quadrature needs a in (0, 1)");
  require_calibrated(quad, op, a);
  Vec sum = op.zeros();
  for (int q = 0; q < quad.size(); ++q) {
    const double t = quad.nodes[q];
    sum += (quad.weights[q] * std::pow(t, -1.0 - a)) * heat_increment(op, t, v);
  }
  return sum / gamma_neg(a);
}

Complex heat_kernel(const DiscreteOperator& op, double t, int x_node, int z_node) {
  if (!(t >= 0.0)) throw ValidationError("heat semigroup time must be non-negative");
  const int x = op.dofs_of({x_node})[0];
  const int z = op.dofs_of({z_node})[0];
  const CMat& phi = op.eigenvectors();
  Complex s = 0.0;
  for (int i = 0; i < op.size(); ++i) {
    s += phi(x, i) * std::conj(phi(z, i)) * std::exp(-t * op.eigenvalues()(i));
  }
  return s;
}

namespace {

RVec kernel_weights(const DiscreteOperator& op, int x_node, int z_node) {
  if (x_node == z_node) {
    throw ValidationError("kernel is singular on the diagonal; nodes must differ");
  }
  if (!op.is_real()) throw ValidationError("kernel evaluation needs a real operator");
  const int x = op.dofs_of({x_node})[0];
  const int z = op.dofs_of({z_node})[0];
  const CMat& phi = op.eigenvectors();
  RVec r(op.size());
  for (int i = 0; i < op.size(); ++i) r(i) = (phi(x, i) * std::conj(phi(z, i))).real();
  return r;
}

}  // namespace

double kernel_Ka(const DiscreteOperator& op, double a, int x_node, int z_node,
                 const TimeQuadrature& quad) {
  if (!(a > 0.0 && a < 1.0)) throw ValidationError("kernel needs a in (0, 1)");
  const RVec r = kernel_weights(op, x_node, z_node);
  const RVec& lam = op.eigenvalues();
  double sum = 0.0;
  for (int q = 0; q < quad.size(); ++q) {
    const double t = quad.nodes[q];
    double pt = 0.0;
    for (int i = 0; i < op.size(); ++i) pt += r(i) * std::expm1(-t * lam(i));
    sum += quad.weights[q] * pt * std::pow(t, -1.0 - a);
  }
  return sum / std::abs(gamma_neg(a));
}

double kernel_Ka_spectral(const DiscreteOperator& op, double a, int x_node, int z_node) {
  const RVec r = kernel_weights(op, x_node, z_node);
  double s = 0.0;
  for (int i = 0; i < op.size(); ++i) s += r(i) * std::pow(op.eigenvalues()(i), a);
  return -s;
}

Complex bilinear_form(const DiscreteOperator& op, double a, const Vec& u, const Vec& w) {
  return op.inner(apply_power(op, a, u), w);
}

Vec apply_inverse(const DiscreteOperator& op, const Vec& v) {
  if (v.size() != op.size()) throw ValidationError("vector size does not match the operator");
  const Vec rhs = op.mass() * v;
  Vec x = op.solve_stiffness(rhs);
  const double rn = rhs.norm();
  if (rn > 0.0 && (op.stiffness() * x - rhs).norm() > 1e-10 * rn) {
    throw Error("stiffness solve did not converge");
  }
  return x;
}

double sobolev_norm(const DiscreteOperator& op, double s, const Vec& v) {
  const Vec c = op.spectral_coefficients(v);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    sum += std::pow(1.0 + op.eigenvalues()(i), s) * std::norm(c(i));
  }
  return std::sqrt(sum);
}

double fourier_crosscheck_neglap(const PeriodicGrid& grid, double a, const RVec& v,
                                 FourierSymbol symbol) {
  const int n = grid.n;
  if (n < 3) throw ValidationError("periodic grid needs at least 3 points");
  if (v.size() != n) throw ValidationError("sample vector does not match the grid");
  const double h = grid.spacing();

  RMat d2 = RMat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    d2(i, i) = 2.0 / (h * h);
    d2(i, (i + 1) % n) -= 1.0 / (h * h);
    d2(i, (i + n - 1) % n) -= 1.0 / (h * h);
  }
  Eigen::SelfAdjointEigenSolver<RMat> es(d2);
  RVec mu = es.eigenvalues();
  for (Eigen::Index i = 0; i < mu.size(); ++i) mu(i) = std::pow(std::max(mu(i), 0.0), a);
  const RVec spectral = es.eigenvectors() * (mu.asDiagonal() * (es.eigenvectors().transpose() * v));

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in(v.data(), v.data() + n);
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, in);
  for (int k = 0; k < n; ++k) {
    double xi2;
    if (symbol == FourierSymbol::Discrete) {
      const double s = 2.0 * std::sin(std::numbers::pi * k / n) / h;
      xi2 = s * s;
    } else {
      const int ks = k <= n / 2 ? k : k - n;
      const double xi = 2.0 * std::numbers::pi * ks / grid.length;
      xi2 = xi * xi;
    }
    spec[k] *= std::pow(xi2, a);
  }
  std::vector<std::complex<double>> out;
  fft.inv(out, spec);

  double dev = 0.0;
  for (int i = 0; i < n; ++i) dev = std::max(dev, std::abs(out[i].real() - spectral(i)));
  return dev;
}

}  // namespace fracred
