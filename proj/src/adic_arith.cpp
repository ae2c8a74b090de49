#include "hostlab/adic_arith.hpp"

#include <mpfr.h>

#include <cmath>
#include <numbers>
#include <string>

#include "hostlab/errors.hpp"

namespace hostlab {

namespace {

std::shared_ptr<const mpz_class> power_of(unsigned base, std::size_t exponent) {
  auto p = std::make_shared<mpz_class>();
  mpz_ui_pow_ui(p->get_mpz_t(), base, exponent);
  return p;
}

void check_base(unsigned base) {
  if (base < 2) throw InputError("base must be >= 2, got " + std::to_string(base));
}

// RAII for one mpfr_t.
class Mpfr {
 public:
  explicit Mpfr(mpfr_prec_t prec) { mpfr_init2(v_, prec); }
  ~Mpfr() { mpfr_clear(v_); }
  Mpfr(const Mpfr&) = delete;
  Mpfr& operator=(const Mpfr&) = delete;
  mpfr_ptr get() { return v_; }

 private:
  mpfr_t v_;
};

}  // namespace

// ---------------------------------------------------------------- UnitPoint

UnitPoint::UnitPoint(unsigned base, std::size_t precision, mpz_class numerator,
                     std::shared_ptr<const mpz_class> modulus)
    : base_(base),
      precision_(precision),
      numerator_(std::move(numerator)),
      modulus_(std::move(modulus)) {}

UnitPoint::UnitPoint(unsigned base, std::size_t precision, mpz_class numerator)
    : base_(base), precision_(precision), numerator_(std::move(numerator)) {
  check_base(base);
  if (precision == 0) throw InputError("precision must be >= 1");
  modulus_ = power_of(base, precision);
  if (numerator_ < 0 || numerator_ >= *modulus_)
    throw InputError("numerator outside [0, base^L)");
}

UnitPoint UnitPoint::zero(unsigned base, std::size_t precision) {
  return UnitPoint(base, precision, mpz_class(0));
}

UnitPoint UnitPoint::from_fraction(unsigned base, std::size_t precision, const mpz_class& p,
                                   const mpz_class& q) {
  check_base(base);
  if (q <= 0 || p < 0 || p >= q) throw InputError("fraction p/q must lie in [0,1)");
  if (precision == 0) throw InputError("precision must be >= 1");
  auto modulus = power_of(base, precision);
  mpz_class num = p * *modulus;
  mpz_fdiv_q(num.get_mpz_t(), num.get_mpz_t(), q.get_mpz_t());
  return UnitPoint(base, precision, std::move(num), std::move(modulus));
}

unsigned UnitPoint::digit(std::size_t j) const {
  if (j < 1 || j > precision_) throw InputError("digit index out of range");
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), base_, precision_ - j);
  mpz_class q;
  mpz_fdiv_q(q.get_mpz_t(), numerator_.get_mpz_t(), scale.get_mpz_t());
  return static_cast<unsigned>(mpz_fdiv_ui(q.get_mpz_t(), base_));
}

std::vector<unsigned> UnitPoint::digits() const {
  std::vector<unsigned> out(precision_);
  if (base_ <= 36) {
    // Subquadratic radix conversion; left-pad to precision_ digits.
    const std::string text = numerator_.get_str(static_cast<int>(base_));
    const std::size_t pad = precision_ - (numerator_ == 0 ? 0 : text.size());
    if (numerator_ != 0)
      for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        out[pad + i] = static_cast<unsigned>(c <= '9' ? c - '0' : c - 'a' + 10);
      }
    return out;
  }
  mpz_class rest = numerator_;
  for (std::size_t j = precision_; j-- > 0;)
    out[j] = static_cast<unsigned>(mpz_fdiv_q_ui(rest.get_mpz_t(), rest.get_mpz_t(), base_));
  return out;
}

UnitPoint UnitPoint::truncated(std::size_t n) const {
  if (n >= precision_) return *this;
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), base_, precision_ - n);
  mpz_class low;
  mpz_fdiv_r(low.get_mpz_t(), numerator_.get_mpz_t(), scale.get_mpz_t());
  return UnitPoint(base_, precision_, numerator_ - low, modulus_);
}

UnitPoint make_point_from_digits(unsigned base, std::span<const unsigned> digits) {
  check_base(base);
  if (digits.empty()) throw InputError("digit sequence must be nonempty");
  mpz_class num = 0;
  for (unsigned d : digits) {
    if (d >= base)
      throw InputError("digit " + std::to_string(d) + " out of range for base " +
                       std::to_string(base));
    num *= base;
    num += d;
  }
  return UnitPoint(base, digits.size(), std::move(num));
}

UnitPoint mul_mod1(const UnitPoint& x, const mpz_class& t) {
  if (t <= 0) throw InputError("multiplier must be positive");
  mpz_class num = x.numerator_ * t;
  mpz_fdiv_r(num.get_mpz_t(), num.get_mpz_t(), x.modulus_->get_mpz_t());
  return UnitPoint(x.base_, x.precision_, std::move(num), x.modulus_);
}

UnitPoint mul_mod1(const UnitPoint& x, long t) {
  if (t <= 0) throw InputError("multiplier must be positive");
  return mul_mod1(x, mpz_class(t));
}

double to_real(const UnitPoint& x, int bits) {
  if (bits < 1 || bits > 64) throw InputError("to_real: bits must be in [1, 64]");
  mpz_class q;
  mpz_mul_2exp(q.get_mpz_t(), x.numerator().get_mpz_t(), static_cast<mp_bitcnt_t>(bits));
  mpz_tdiv_q(q.get_mpz_t(), q.get_mpz_t(), x.modulus().get_mpz_t());
  return std::ldexp(q.get_d(), -bits);
}

nlohmann::json to_json(const UnitPoint& x) {
  return {{"base", x.base()}, {"L", x.precision()}, {"numerator", x.numerator().get_str(10)}};
}

UnitPoint unit_point_from_json(const nlohmann::json& j) {
  mpz_class num;
  if (num.set_str(j.at("numerator").get<std::string>(), 10) != 0)
    throw InputError("numerator is not a decimal integer");
  return UnitPoint(j.at("base").get<unsigned>(), j.at("L").get<std::size_t>(), std::move(num));
}

// -------------------------------------------------------------- OrbitKernel

OrbitKernel::OrbitKernel(const UnitPoint& start, unsigned long multiplier)
    : start_(start), multiplier_(multiplier), numerator_(start.numerator()) {
  if (multiplier == 0) throw InputError("multiplier must be positive");
}

void OrbitKernel::step() {
  mpz_ptr num = numerator_.get_mpz_t();
  mpz_srcptr mod = start_.modulus().get_mpz_t();
  mpz_mul_ui(num, num, multiplier_);
  if (multiplier_ <= 8) {
    while (mpz_cmp(num, mod) >= 0) mpz_sub(num, num, mod);
  } else {
    mpz_tdiv_r(num, num, mod);
  }
  ++steps_;
}

double OrbitKernel::value() const {
  mpz_ptr q = scratch_.get_mpz_t();
  mpz_mul_2exp(q, numerator_.get_mpz_t(), 53);
  mpz_tdiv_q(q, q, start_.modulus().get_mpz_t());
  return std::ldexp(mpz_get_d(q), -53);
}

UnitPoint OrbitKernel::point() const {
  return UnitPoint(start_.base(), start_.precision(), numerator_);
}

PrecisionBudget precision_budget(unsigned a, unsigned long b, std::size_t orbit_length,
                                 std::size_t guard_digits, std::size_t extra_shift) {
  check_base(a);
  if (b < 2) throw InputError("b must be >= 2");
  std::size_t needed = 0;
  const auto rel = multiplicative_relation(a, b);
  if (rel.dependent) {
    // b = a^{j/i} exactly: N j / i digits, rounded up.
    needed = (orbit_length * rel.b_exponent + rel.a_exponent - 1) / rel.a_exponent;
  } else {
    const double consumed = static_cast<double>(orbit_length) * std::log(static_cast<double>(b)) /
                            std::log(static_cast<double>(a));
    needed = static_cast<std::size_t>(std::ceil(consumed * (1.0 + 1e-12)));
  }
  return {orbit_length, guard_digits, needed + guard_digits + extra_shift};
}

// ------------------------------------------------------- KroneckerSchedule

PowerRelation multiplicative_relation(unsigned long a, unsigned long b) {
  if (a < 2 || b < 2) throw InputError("a and b must be >= 2");
  // Primitive root of a: largest e with a a perfect e-th power.
  mpz_class za(a), root(a);
  unsigned e_a = 1;
  for (unsigned e = 63; e >= 2; --e) {
    mpz_class r;
    if (mpz_root(r.get_mpz_t(), za.get_mpz_t(), e) != 0) {
      root = r;
      e_a = e;
      break;
    }
  }
  const unsigned long c = root.get_ui();
  PowerRelation rel;
  unsigned long p = 1;
  for (unsigned j = 1; j < 64; ++j) {
    if (p > b / c) break;
    p *= c;
    if (p == b) {
      rel = {true, c, e_a, j};
      break;
    }
  }
  return rel;
}

KroneckerSchedule KroneckerSchedule::compute(unsigned a, unsigned b, std::size_t n,
                                             int float_bits) {
  if (a < 2 || b < 2) throw InputError("kronecker_schedule: a, b must be >= 2");
  if (float_bits < 64) throw InputError("kronecker_schedule: float_bits must be >= 64");

  KroneckerSchedule s;
  s.a_ = a;
  s.b_ = b;
  s.float_bits_ = float_bits;
  s.relation_ = multiplicative_relation(a, b);
  s.nprime_.assign(n + 1, 0);
  s.z_.assign(n + 1, 0.0);

  if (s.relation_.dependent) {
    const auto i = static_cast<std::int64_t>(s.relation_.a_exponent);
    const auto j = static_cast<std::int64_t>(s.relation_.b_exponent);
    s.alpha_ = static_cast<double>(j) / static_cast<double>(i);
    s.alpha_numerator_ = j;
    for (std::size_t k = 1; k <= n; ++k) {
      const std::int64_t jn = j * static_cast<std::int64_t>(k);
      s.nprime_[k] = jn / i;
      s.z_[k] = static_cast<double>(jn % i) / static_cast<double>(i);
    }
    return s;
  }

  Mpfr la(float_bits), lb(float_bits), alpha(float_bits);
  mpfr_set_ui(la.get(), a, MPFR_RNDN);
  mpfr_set_ui(lb.get(), b, MPFR_RNDN);
  mpfr_log(la.get(), la.get(), MPFR_RNDN);
  mpfr_log(lb.get(), lb.get(), MPFR_RNDN);
  mpfr_div(alpha.get(), lb.get(), la.get(), MPFR_RNDN);
  s.alpha_ = mpfr_get_d(alpha.get(), MPFR_RNDN);

  mpz_class mant;
  const mpfr_exp_t e = mpfr_get_z_2exp(mant.get_mpz_t(), alpha.get());
  if (e >= 0) {
    mpz_mul_2exp(mant.get_mpz_t(), mant.get_mpz_t(), static_cast<mp_bitcnt_t>(e));
    s.shift_ = 0;
  } else {
    s.shift_ = static_cast<std::size_t>(-e);
  }
  s.alpha_numerator_ = mant;

  // A floor is trusted only if alpha*n stays at least 2^-(float_bits-28) away
  // from an integer, and the rounding error of alpha (<= n*alpha*2^(1-bits))
  // is smaller than half that margin.
  const int margin_bits = float_bits - 28;
  const double err_bound = static_cast<double>(n) * s.alpha_ * std::ldexp(1.0, 1 - float_bits);
  if (err_bound >= std::ldexp(1.0, -margin_bits - 1))
    throw PrecisionError("kronecker_schedule: float_bits=" + std::to_string(float_bits) +
                         " too small for N=" + std::to_string(n));

  mpz_class unit, prod, frac, dist, margin;
  mpz_ui_pow_ui(unit.get_mpz_t(), 2, s.shift_);
  if (static_cast<long>(s.shift_) - margin_bits > 0)
    mpz_ui_pow_ui(margin.get_mpz_t(), 2, s.shift_ - static_cast<std::size_t>(margin_bits));
  else
    margin = 1;
  Mpfr zr(64);
  for (std::size_t k = 1; k <= n; ++k) {
    prod = mant * static_cast<unsigned long>(k);
    mpz_fdiv_r_2exp(frac.get_mpz_t(), prod.get_mpz_t(), s.shift_);
    mpz_fdiv_q_2exp(prod.get_mpz_t(), prod.get_mpz_t(), s.shift_);
    dist = unit - frac;
    if (frac < dist) dist = frac;
    if (dist < margin)
      throw PrecisionError("kronecker_schedule: alpha*n within 2^-" + std::to_string(margin_bits) +
                           " of an integer at n=" + std::to_string(k) +
                           "; rerun with more float_bits");
    s.nprime_[k] = static_cast<std::int64_t>(prod.get_si());
    mpfr_set_z_2exp(zr.get(), frac.get_mpz_t(), -static_cast<mpfr_exp_t>(s.shift_), MPFR_RNDN);
    s.z_[k] = mpfr_get_d(zr.get(), MPFR_RNDN);
  }
  return s;
}

mpz_class KroneckerSchedule::z_numerator(std::size_t n) const {
  if (n >= nprime_.size()) throw InputError("z_numerator: index out of range");
  if (relation_.dependent) {
    return mpz_class(static_cast<long>((relation_.b_exponent * n) % relation_.a_exponent));
  }
  mpz_class prod = alpha_numerator_ * static_cast<unsigned long>(n);
  mpz_fdiv_r_2exp(prod.get_mpz_t(), prod.get_mpz_t(), shift_);
  return prod;
}

std::string alpha_decimal(unsigned a, unsigned b, int float_bits, int digits) {
  Mpfr la(float_bits), lb(float_bits), alpha(float_bits);
  mpfr_set_ui(la.get(), a, MPFR_RNDN);
  mpfr_set_ui(lb.get(), b, MPFR_RNDN);
  mpfr_log(la.get(), la.get(), MPFR_RNDN);
  mpfr_log(lb.get(), lb.get(), MPFR_RNDN);
  mpfr_div(alpha.get(), lb.get(), la.get(), MPFR_RNDN);
  std::string buf(static_cast<std::size_t>(digits) + 32, '\0');
  const int len = mpfr_snprintf(buf.data(), buf.size(), "%.*Rf", digits, alpha.get());
  buf.resize(static_cast<std::size_t>(len));
  return buf;
}

// ----------------------------------------------------------------- helpers

std::complex<double> unit_phase(double x) {
  const double r = x - std::floor(x);
  const double angle = 2.0 * std::numbers::pi * r;
  return {std::cos(angle), std::sin(angle)};
}

double dist_to_integer(double x) { return std::abs(x - std::round(x)); }

RotationBound exp_weyl_bound_check(double alpha, long j, std::size_t n) {
  if (j == 0) throw InputError("exp_weyl_bound_check: j must be nonzero");
  const long double ja = static_cast<long double>(j) * static_cast<long double>(alpha);
  const double d = static_cast<double>(std::fabs(ja - std::roundl(ja)));
  if (d < 1e-12) throw InputError("exp_weyl_bound_check: j*alpha is an integer");
  std::complex<double> sum{0.0, 0.0};
  for (std::size_t k = 1; k <= n; ++k) {
    const long double t = ja * static_cast<long double>(k);
    sum += unit_phase(static_cast<double>(t - std::floor(t)));
  }
  return {std::abs(sum), 1.0 / (2.0 * d)};
}

}  // namespace hostlab
