#include <doctest.h>

#include <mpfr.h>

#include <cmath>
#include <numbers>

#include "hostlab/adic_arith.hpp"
#include "hostlab/errors.hpp"
#include "hostlab/rng.hpp"

using namespace hostlab;

namespace {

mpz_class pow_mpz(unsigned long b, unsigned long e) {
  mpz_class out;
  mpz_ui_pow_ui(out.get_mpz_t(), b, e);
  return out;
}

}  // namespace

TEST_SUITE("adic_arith") {

TEST_CASE("digits, truncation and fractions") {
  const std::vector<unsigned> d{1, 0, 2, 2, 1};
  const auto x = make_point_from_digits(3, d);
  CHECK(x.precision() == 5);
  CHECK(x.digits() == d);
  CHECK(x.digit(1) == 1);
  CHECK(x.digit(5) == 1);
  CHECK(x.truncated(2).digits() == std::vector<unsigned>{1, 0, 0, 0, 0});

  // 1/2 in base 3 is 0.111...
  const auto half = UnitPoint::from_fraction(3, 12, 1, 2);
  for (unsigned v : half.digits()) CHECK(v == 1);
  CHECK(UnitPoint::zero(2, 10).numerator() == 0);
  CHECK(UnitPoint::zero(7, 3).digits() == std::vector<unsigned>(3, 0));

  CHECK_THROWS_AS(UnitPoint::from_fraction(3, 12, 2, 2), InputError);
  CHECK_THROWS_AS(make_point_from_digits(3, std::vector<unsigned>{3}), InputError);
  CHECK_THROWS_AS(UnitPoint(1, 4, 0), InputError);
}

TEST_CASE("mul_mod1 and to_real") {
  const auto third = UnitPoint::from_fraction(2, 200, 1, 3);
  CHECK(to_real(third) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(to_real(mul_mod1(third, 2L)) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(to_real(mul_mod1(third, 4L)) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(mul_mod1(third, 0L), InputError);
  CHECK_THROWS_AS(mul_mod1(third, -3L), InputError);
  CHECK_THROWS_AS(to_real(third, 0), InputError);
  CHECK_THROWS_AS(to_real(third, 65), InputError);
  // Truncation toward zero at the requested bit count.
  CHECK(to_real(third, 2) == 0.25);
}

TEST_CASE("orbit kernel matches one-shot multiplication") {
  Rng rng(11);
  std::vector<unsigned> digits(400);
  for (auto& v : digits) v = static_cast<unsigned>(rng() % 3);
  const auto x = make_point_from_digits(3, digits);
  for (unsigned long b : {2UL, 5UL, 10UL, 12UL}) {
    OrbitKernel k(x, b);
    for (int n = 0; n < 150; ++n) k.step();
    CHECK(k.steps() == 150);
    CHECK(k.point() == mul_mod1(x, pow_mpz(b, 150)));
    CHECK(k.value() == to_real(mul_mod1(x, pow_mpz(b, 150))));
  }
}

TEST_CASE("precision budget") {
  const auto p = precision_budget(3, 2, 100000);
  // ceil(1e5 * log 2 / log 3) = 63093
  CHECK(p.digits == 63093 + 64);
  CHECK(precision_budget(2, 2, 1000).digits == 1064);
  CHECK(precision_budget(3, 2, 1000, 64, 5).digits == precision_budget(3, 2, 1000).digits + 5);
  CHECK_THROWS_AS(precision_budget(3, 1, 10), InputError);
}

TEST_CASE("multiplicative relation") {
  auto r = multiplicative_relation(2, 4);
  CHECK(r.dependent);
  CHECK(r.root == 2);
  CHECK(r.a_exponent == 1);
  CHECK(r.b_exponent == 2);
  r = multiplicative_relation(8, 4);
  CHECK(r.dependent);
  CHECK(r.a_exponent == 3);
  CHECK(r.b_exponent == 2);
  CHECK_FALSE(multiplicative_relation(3, 2).dependent);
  CHECK_FALSE(multiplicative_relation(6, 12).dependent);
}

TEST_CASE("schedule against an MPFR oracle") {
  const std::size_t n = 2000;
  const auto s = KroneckerSchedule::compute(3, 2, n);
  CHECK(s.alpha() == doctest::Approx(0.6309297535714574).epsilon(1e-15));
  CHECK(s.z(2) == doctest::Approx(0.2618595071).epsilon(1e-9));
  CHECK(s.nprime(0) == 0);
  CHECK(s.z(0) == 0.0);
  CHECK_FALSE(s.dependent());

  mpfr_t alpha, tmp, lb, la, z, err, bound;
  for (auto* v : {&alpha, &tmp, &lb, &la, &z, &err, &bound}) mpfr_init2(*v, 512);
  mpfr_set_ui(lb, 2, MPFR_RNDN);
  mpfr_log(lb, lb, MPFR_RNDN);
  mpfr_set_ui(la, 3, MPFR_RNDN);
  mpfr_log(la, la, MPFR_RNDN);
  mpfr_div(alpha, lb, la, MPFR_RNDN);
  for (std::size_t i = 0; i <= n; i += 7) {
    mpfr_mul_ui(tmp, alpha, i, MPFR_RNDN);
    mpfr_floor(z, tmp);
    CHECK(s.nprime(i) == static_cast<std::int64_t>(mpfr_get_si(z, MPFR_RNDN)));
    mpfr_sub(tmp, tmp, z, MPFR_RNDN);
    CHECK(s.z(i) == doctest::Approx(mpfr_get_d(tmp, MPFR_RNDN)).epsilon(1e-15));

    // b^n = a^{n'} a^{z_n} in logarithms, with z_n taken exactly from the table.
    mpfr_set_z(z, s.z_numerator(i).get_mpz_t(), MPFR_RNDN);
    mpfr_div_2ui(z, z, s.z_shift(), MPFR_RNDN);
    mpfr_add_si(z, z, static_cast<long>(s.nprime(i)), MPFR_RNDN);
    mpfr_mul(z, z, la, MPFR_RNDN);
    mpfr_mul_ui(err, lb, i, MPFR_RNDN);
    mpfr_sub(err, err, z, MPFR_RNDN);
    mpfr_abs(err, err, MPFR_RNDN);
    const double scale = std::max(1.0, static_cast<double>(i) * std::log(2.0));
    mpfr_set_d(bound, scale, MPFR_RNDN);
    mpfr_mul_2si(bound, bound, 1 - s.float_bits(), MPFR_RNDN);
    CHECK(mpfr_lessequal_p(err, bound));
  }
  for (auto* v : {&alpha, &tmp, &lb, &la, &z, &err, &bound}) mpfr_clear(*v);

  CHECK(alpha_decimal(3, 2, 128, 16).rfind("0.630929753571457", 0) == 0);
  CHECK_THROWS_AS(KroneckerSchedule::compute(3, 2, 10, 32), InputError);
}

TEST_CASE("dependent schedules are exact") {
  const auto s = KroneckerSchedule::compute(4, 8, 12);
  CHECK(s.dependent());
  CHECK(s.alpha() == 1.5);
  for (std::size_t n = 0; n <= 12; ++n) {
    CHECK(s.nprime(n) == static_cast<std::int64_t>(3 * n / 2));
    CHECK(s.z(n) == (n % 2 ? 0.5 : 0.0));
  }
}

TEST_CASE("rotation sums obey the geometric bound") {
  const double alpha = std::log(2.0) / std::log(3.0);
  const auto r = exp_weyl_bound_check(alpha, 1, 10000);
  CHECK(r.rhs == doctest::Approx(1.35475564).epsilon(1e-8));
  for (long j : {1L, 2L, 3L, -5L, 17L})
    for (std::size_t n : {1UL, 10UL, 999UL, 20000UL}) {
      const auto c = exp_weyl_bound_check(alpha, j, n);
      CHECK(c.lhs <= c.rhs + 1e-9);
    }
  CHECK_THROWS_AS(exp_weyl_bound_check(alpha, 0, 10), InputError);
  CHECK_THROWS_AS(exp_weyl_bound_check(0.5, 2, 10), InputError);
}

TEST_CASE("unit phase and distance") {
  CHECK(std::abs(unit_phase(0.25) - std::complex<double>(0, 1)) < 1e-15);
  CHECK(std::abs(unit_phase(7.5) + 1.0) < 1e-15);
  CHECK(dist_to_integer(2.9) == doctest::Approx(0.1));
  CHECK(dist_to_integer(-0.25) == doctest::Approx(0.25));
}

TEST_CASE("json round trip") {
  const auto x = UnitPoint::from_fraction(5, 80, 2, 7);
  const auto j = to_json(x);
  CHECK(j.at("numerator").is_string());
  CHECK(unit_point_from_json(j) == x);
  auto bad = j;
  bad["numerator"] = "not a number";
  CHECK_THROWS_AS(unit_point_from_json(bad), InputError);
}

}  // TEST_SUITE
