#pragma once

// Fourier transforms of piecewise-uniform a-adic measures under scaling and
// translation, the C^1 decay bound for densities, and the random-scaling
// smoothing bound  int_0^1 |F_m(S_{b^t} nu)|^2 dt <= 1/(r m ln b) + int nu(B_r(y)) dnu(y).
//
// Conventions: e(x) = exp(2 pi i x), F_xi(nu) = int e(xi x) dnu(x),
// S_t x = t x, R_theta x = x + theta.

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hostlab/measure_kit.hpp"

namespace hostlab {

enum class FtPath { automatic, dense, sparse };

// Exact transform of the piecewise-uniform measure at real frequency xi.
// The dense path contracts the weight pyramid digit by digit; the sparse path
// walks only atoms of positive weight.
std::complex<double> ft_adic(const AdicMeasure& mu, double xi, FtPath path = FtPath::automatic);

// Transform of the level-`level` realization of mu_omega (realize() when the
// past is empty) as a transfer-matrix product over digits, O(level a^2)
// instead of O(a^level). Equals ft_adic on the materialized measure.
std::complex<double> ft_generator(const MeasureGen& gen, const PastWord& past, unsigned level,
                                  double xi);

// F_m(S_t mu) = ft_adic(mu, m t); t > 0.
std::complex<double> ft_scaled(const AdicMeasure& mu, double t, double m);

// Transform at xi of the pushforward of mu by y -> scale*y + shift.
std::complex<double> ft_affine(const AdicMeasure& mu, double scale, double shift, double xi);

// F_m of ((S_scale mu) + shift) mod 1: every image atom is cut at integers,
// wrapped onto [0,1) and integrated piece by piece. Agrees with ft_affine at
// integer m because e_m is 1-periodic.
std::complex<double> ft_wrapped(const AdicMeasure& mu, double scale, double shift, long m);

// ------------------------------------------------------------ C^1 densities

// Closed-form densities on [lo, hi] with integral 1 and exact sup norms of
// f and f'.
class C1Density {
 public:
  enum class Shape { parabolic, raised_cosine, linear_ramp };

  // 6 (x-lo)(hi-x) / w^3
  static C1Density parabolic(double lo = 0.0, double hi = 1.0);
  // (1 + cos(2 pi (x-lo)/w)) / w
  static C1Density raised_cosine(double lo = 0.0, double hi = 1.0);
  // 2 (x-lo) / w^2
  static C1Density linear_ramp(double lo = 0.0, double hi = 1.0);

  double operator()(double x) const;
  double derivative(double x) const;
  double sup_norm() const;
  double derivative_sup_norm() const;
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double width() const { return hi_ - lo_; }
  Shape shape() const { return shape_; }
  std::string name() const;

 private:
  C1Density(Shape shape, double lo, double hi);
  Shape shape_;
  double lo_;
  double hi_;
};

// f^(t) = int f(x) e(t x) dx by adaptive quadrature, abs. error <= tol.
std::complex<double> density_transform(const C1Density& f, double t, double tol = 1e-10);

struct C1BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
};

// lhs = |f^(t)|, rhs = (||f|| + (b-a)||f'||) / (pi |t|), ok = lhs <= rhs + slack.
C1BoundCheck c1_bound_check(const C1Density& f, double t, double slack = 1e-4);

std::vector<C1Density> default_density_battery();

// ---------------------------------------------------------- random scaling

struct SmoothingParams {
  double b_scale = 2.0;
  long m = 1;
  double r = 0.1;
  // Upper limit on quadrature nodes before giving up.
  std::size_t max_nodes = std::size_t{1} << 23;
};

struct ScaledIntegral {
  double value = 0.0;
  double last_change = 0.0;  // |Q(2P) - Q(P)| at acceptance
  std::size_t panels = 0;
};

inline constexpr double kScaledIntegralTolerance = 1e-6;

// int_0^1 |F_m(S_{b^t} nu)|^2 dt with nu = S_prescale mu, by 16-point
// Gauss-Legendre panels doubled until successive values agree to 1e-6.
ScaledIntegral scaled_sq_integral(const AdicMeasure& mu, const SmoothingParams& params,
                                  double prescale = 1.0);

// Same integral for a measure given only through its transform xi -> F_xi.
ScaledIntegral scaled_sq_integral(const std::function<std::complex<double>(double)>& transform,
                                  const SmoothingParams& params, double prescale = 1.0);

// 1/(r |m| ln b) + int nu(B_r(y)) dnu(y) with nu = S_prescale mu.
double smoothing_rhs(const AdicMeasure& mu, const SmoothingParams& params, double prescale = 1.0);

struct BatteryEntry {
  std::string id;
  AdicMeasure measure;
};

struct CertificationRow {
  std::string measure_id;
  long m = 0;
  double b = 0.0;
  double r = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  bool ok = false;
};

inline constexpr double kCertificationSlack = 1e-4;

// Rows for every (measure, m, b, r) whose r passes the resolution guard.
std::vector<CertificationRow> certify_smoothing(std::span<const BatteryEntry> battery,
                                                std::span<const long> ms,
                                                std::span<const double> bs,
                                                std::span<const double> rs);

// Uniform, Cantor, Markov and a seeded random Bernoulli measure.
std::vector<BatteryEntry> default_smoothing_battery();

std::string certification_csv(std::span<const CertificationRow> rows);

struct C1Row {
  std::string density;
  double t = 0.0;
  C1BoundCheck check;
};
std::string c1_csv(std::span<const C1Row> rows);

}  // namespace hostlab
