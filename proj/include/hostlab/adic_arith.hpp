#pragma once

// Exact arithmetic on [0,1) at fixed a-adic precision, the xb orbit kernel,
// and the Kronecker time-change schedule n' = floor(alpha n), z_n = frac(alpha n)
// with alpha = log b / log a.

#include <gmpxx.h>

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

namespace hostlab {

// x = numerator / base^precision, 0 <= numerator < base^precision.
class UnitPoint {
 public:
  UnitPoint(unsigned base, std::size_t precision, mpz_class numerator);

  static UnitPoint zero(unsigned base, std::size_t precision);
  // floor(p/q * base^precision) for 0 <= p/q < 1.
  static UnitPoint from_fraction(unsigned base, std::size_t precision,
                                 const mpz_class& p, const mpz_class& q);

  unsigned base() const { return base_; }
  std::size_t precision() const { return precision_; }
  const mpz_class& numerator() const { return numerator_; }
  const mpz_class& modulus() const { return *modulus_; }

  // digit(j) for 1 <= j <= precision; digit(1) is the most significant.
  unsigned digit(std::size_t j) const;
  std::vector<unsigned> digits() const;

  // Keeps the first n digits and zeroes the rest: the left endpoint of the
  // level-n a-adic atom containing x.
  UnitPoint truncated(std::size_t n) const;

  friend bool operator==(const UnitPoint& x, const UnitPoint& y) {
    return x.base_ == y.base_ && x.precision_ == y.precision_ &&
           x.numerator_ == y.numerator_;
  }

 private:
  UnitPoint(unsigned base, std::size_t precision, mpz_class numerator,
            std::shared_ptr<const mpz_class> modulus);
  friend UnitPoint mul_mod1(const UnitPoint& x, const mpz_class& t);

  unsigned base_;
  std::size_t precision_;
  mpz_class numerator_;
  std::shared_ptr<const mpz_class> modulus_;
};

// Precision L is the number of digits.
UnitPoint make_point_from_digits(unsigned base, std::span<const unsigned> digits);

// T_t x = t x mod 1 at fixed denominator.
UnitPoint mul_mod1(const UnitPoint& x, const mpz_class& t);
UnitPoint mul_mod1(const UnitPoint& x, long t);

// Top `bits` binary digits of x (truncated), 1 <= bits <= 64.
double to_real(const UnitPoint& x, int bits = 53);

nlohmann::json to_json(const UnitPoint& x);
UnitPoint unit_point_from_json(const nlohmann::json& j);

// In-place iteration of T_t on one point; per step one multiply-and-reduce.
class OrbitKernel {
 public:
  OrbitKernel(const UnitPoint& start, unsigned long multiplier);

  void step();
  // to_real(current, 53).
  double value() const;
  std::size_t steps() const { return steps_; }
  UnitPoint point() const;

 private:
  UnitPoint start_;
  unsigned long multiplier_;
  mpz_class numerator_;
  mutable mpz_class scratch_;
  std::size_t steps_ = 0;
};

struct PrecisionBudget {
  std::size_t orbit_length = 0;
  std::size_t guard_digits = 0;
  std::size_t digits = 0;  // retained base-a digits L
};

inline constexpr std::size_t kDefaultGuardDigits = 64;

// L = ceil(N log_a b) + guard + extra_shift, where extra_shift accounts for a
// T_a^k burn-in applied before the xb orbit.
PrecisionBudget precision_budget(unsigned a, unsigned long b, std::size_t orbit_length,
                                 std::size_t guard_digits = kDefaultGuardDigits,
                                 std::size_t extra_shift = 0);

// If a = c^i and b = c^j for an integer c >= 2, returns (i, j) with c chosen
// as the primitive root of a, so alpha = j / i exactly.
struct PowerRelation {
  bool dependent = false;
  unsigned long root = 0;
  unsigned a_exponent = 0;
  unsigned b_exponent = 0;
};
PowerRelation multiplicative_relation(unsigned long a, unsigned long b);

// Tables for n = 0..N. alpha is held as an exact dyadic approximation
// A / 2^shift rounded from log b / log a at `float_bits`, so nprime and z are
// exact functions of that approximation. For dependent (a, b) alpha is the
// exact rational and the schedule is periodic.
class KroneckerSchedule {
 public:
  static constexpr int kDefaultFloatBits = 128;

  static KroneckerSchedule compute(unsigned a, unsigned b, std::size_t n,
                                   int float_bits = kDefaultFloatBits);

  unsigned a() const { return a_; }
  unsigned b() const { return b_; }
  int float_bits() const { return float_bits_; }
  std::size_t size() const { return nprime_.size() - 1; }
  bool dependent() const { return relation_.dependent; }
  const PowerRelation& relation() const { return relation_; }
  double alpha() const { return alpha_; }

  std::int64_t nprime(std::size_t n) const { return nprime_.at(n); }
  double z(std::size_t n) const { return z_.at(n); }

  // z(n) = numerator / 2^shift exactly (independent case), or
  // numerator / a_exponent (dependent case, shift reported as 0).
  mpz_class z_numerator(std::size_t n) const;
  std::size_t z_shift() const { return shift_; }
  const mpz_class& alpha_numerator() const { return alpha_numerator_; }

 private:
  unsigned a_ = 0;
  unsigned b_ = 0;
  int float_bits_ = 0;
  PowerRelation relation_;
  double alpha_ = 0.0;
  mpz_class alpha_numerator_;
  std::size_t shift_ = 0;
  std::vector<std::int64_t> nprime_;
  std::vector<double> z_;
};

// High-precision alpha = log b / log a as a decimal string (for logs/tests).
std::string alpha_decimal(unsigned a, unsigned b, int float_bits, int digits = 40);

struct RotationBound {
  double lhs = 0.0;  // |sum_{n=1}^N e(j n alpha)|
  double rhs = 0.0;  // 1 / (2 ||j alpha||)
};

RotationBound exp_weyl_bound_check(double alpha, long j, std::size_t n);

// e(x) = exp(2 pi i x), reduced mod 1 before the trig call.
std::complex<double> unit_phase(double x);

// Distance to the nearest integer.
double dist_to_integer(double x);

}  // namespace hostlab
