#pragma once

#include <vector>

#include "fracred/operator.hpp"

namespace fracred {

/// Gamma(-a) := -Gamma(1-a)/a, negative for a in (0,1).
double gamma_neg(double a);

/// Double-exponential rule for integrals over (0, inf):
/// t = exp(pi sinh s), trapezoid in s on [-s_max, s_max].
struct TimeQuadrature {
  std::vector<double> nodes;
  std::vector<double> weights;  // include dt/ds
  double s_max = 4.0;
  double step = 0.0;

  int size() const { return static_cast<int>(nodes.size()); }
};

TimeQuadrature make_time_quadrature(double s_max = 4.0, int n = 200);

/// (1/Gamma(-a)) sum_q w_q expm1(-t_q lambda) t_q^{-1-a}, an approximation of lambda^a.
double scalar_power_by_quadrature(const TimeQuadrature& quad, double lambda, double a);

struct CalibrationRow {
  double a = 0.0;
  double lambda = 0.0;
  double exact = 0.0;
  double quadrature = 0.0;
  double rel_error = 0.0;
};

std::vector<CalibrationRow> calibrate(const TimeQuadrature& quad, const std::vector<double>& lambdas,
                                      double a);

/// Declared tolerance of the scalar calibration invariant.
inline constexpr double kCalibrationTolerance = 1e-8;

/// Throws QuadratureError unless the scalar calibration holds over the
/// spectrum of `op` (checked on a geometric sweep of [lambda_min, lambda_max]).
void require_calibrated(const TimeQuadrature& quad, const DiscreteOperator& op, double a,
                        double tol = kCalibrationTolerance);

/// L^a v through the eigenpairs; a in [-1, 1]. a = 0 returns v, a = 1
/// returns M^{-1} K v.
Vec apply_power(const DiscreteOperator& op, double a, const Vec& v);

/// e^{-tL} v, t >= 0.
Vec heat_apply(const DiscreteOperator& op, double t, const Vec& v);
/// e^{-tL} v - v evaluated without cancellation (expm1 per eigenvalue).
Vec heat_increment(const DiscreteOperator& op, double t, const Vec& v);

/// (1/Gamma(-a)) sum_q w_q (e^{-t_q L} v - v) / t_q^{1+a}.
Vec power_via_heat_quadrature(const DiscreteOperator& op, double a, const Vec& v,
                              const TimeQuadrature& quad);

/// Discrete heat kernel p_t(x,z) = (e^{-tL} M^{-1})_{xz} = (Phi e^{-t Lambda} Phi^H)_{xz}
/// between mesh nodes x and z.
Complex heat_kernel(const DiscreteOperator& op, double t, int x_node, int z_node);

/// Singular kernel of L^a between distinct mesh nodes:
///   (1/|Gamma(-a)|) sum_q w_q (p_{t_q}(x,z) - p_0(x,z)) t_q^{-1-a}.
/// The discrete p_0 = M^{-1} is not zero off the diagonal, so it is
/// subtracted; in the continuum p_0(x,z) = 0 for x != z. Real operators only.
double kernel_Ka(const DiscreteOperator& op, double a, int x_node, int z_node,
                 const TimeQuadrature& quad);
/// Same kernel through the eigenpairs: -(Phi Lambda^a Phi^H)_{xz}.
double kernel_Ka_spectral(const DiscreteOperator& op, double a, int x_node, int z_node);

/// B(u, w) = w^H M L^a u (linear in u, conjugate-linear in w).
Complex bilinear_form(const DiscreteOperator& op, double a, const Vec& u, const Vec& w);

/// Solves K x = M v.
Vec apply_inverse(const DiscreteOperator& op, const Vec& v);

/// ||v||_s^2 = sum_i (1 + lambda_i)^s |<phi_i, v>_M|^2.
double sobolev_norm(const DiscreteOperator& op, double s, const Vec& v);

/// Uniform periodic grid of `n` points on [0, length).
struct PeriodicGrid {
  int n = 0;
  double length = 1.0;
  double spacing() const { return length / n; }
};

enum class FourierSymbol { Discrete, Continuum };

/// Applies the periodic second-difference operator's power (-D2)^a through a
/// dense symmetric eigendecomposition of the circulant matrix, and the
/// Fourier multiplier |xi|^{2a} through an FFT; returns the max abs deviation.
/// With FourierSymbol::Discrete the multiplier uses xi = 2 sin(pi k / n) / h,
/// otherwise xi = 2 pi k / length.
double fourier_crosscheck_neglap(const PeriodicGrid& grid, double a, const RVec& v,
                                 FourierSymbol symbol = FourierSymbol::Continuum);

}  // namespace fracred
