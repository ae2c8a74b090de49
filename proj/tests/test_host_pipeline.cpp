#include <doctest.h>

#include <cmath>

#include "hostlab/errors.hpp"
#include "hostlab/fourier_lab.hpp"
#include "hostlab/host_pipeline.hpp"
#include "oracles.hpp"

using namespace hostlab;
using cd = std::complex<double>;

namespace {

MeasureGen cantor() { return MeasureGen::ifs_digits(3, {0, 2}, Eigen::Vector2d(0.5, 0.5)); }

MeasureGen markov2() {
  Eigen::Matrix2d p;
  p << 0.9, 0.1, 0.5, 0.5;
  return MeasureGen::markov(p);
}

// A mu_omega-typical point with `digits` base-a digits.
UnitPoint typical_point(const MeasureGen& g, const PastWord& past, std::size_t digits,
                        std::uint64_t seed) {
  Rng rng(seed);
  const auto d = g.iid() ? sample_digits(g, digits, rng) : sample_digits_given_past(g, past, digits, rng);
  return make_point_from_digits(g.base(), d);
}

}  // namespace

TEST_SUITE("host_pipeline") {

TEST_CASE("Weyl sums on simple points") {
  const std::vector<long> ms{1, -1, 3};
  const std::vector<std::size_t> cps{10, 100};
  const auto zero = weyl_sum(UnitPoint::zero(2, precision_budget(2, 2, 100).digits), 2, ms, cps);
  for (const auto& row : zero.averages())
    for (const auto& w : row) CHECK(std::abs(w - 1.0) < 1e-15);

  const auto third = UnitPoint::from_fraction(2, precision_budget(2, 2, 100).digits, 1, 3);
  const auto acc = weyl_sum(third, 2, ms, cps);
  CHECK(acc.averages().size() == 2);
  CHECK(std::abs(acc.averages()[1][0] - cd(-0.5, 0.0)) < 1e-12);
  CHECK(std::abs(acc.averages()[1][1] - std::conj(acc.averages()[1][0])) < 1e-15);
  CHECK(std::abs(acc.averages()[1][2] - 1.0) < 1e-12);  // 3 * (1/3 or 2/3) is an integer

  CHECK_THROWS_AS(weyl_sum(UnitPoint::zero(2, 50), 2, ms, cps), PrecisionError);
  const std::vector<long> bad{0};
  CHECK_THROWS_AS(weyl_sum(third, 2, bad, cps), InputError);
  const std::vector<std::size_t> unordered{100, 10};
  CHECK_THROWS_AS(weyl_sum(third, 2, ms, unordered), InputError);
}

TEST_CASE("support checks") {
  const std::vector<unsigned> ok{0, 2, 2}, bad{0, 1};
  CHECK_NOTHROW(require_in_support(cantor(), PastWord(3, {}), ok));
  CHECK_THROWS_AS(require_in_support(cantor(), PastWord(3, {}), bad), NullCylinderError);
  Eigen::Matrix2d p;
  p << 1.0, 0.0, 0.5, 0.5;
  const auto g = MeasureGen::markov(p);
  const std::vector<unsigned> after0{1};
  CHECK_THROWS_AS(require_in_support(g, PastWord(2, {0}), after0), NullCylinderError);
  CHECK(relevant_past(markov2(), PastWord(2, {1, 0, 0})).symbols == std::vector<unsigned>{1});
  CHECK(relevant_past(cantor(), PastWord(3, {2})).empty());
}

TEST_CASE("lifting identity") {
  struct Case {
    MeasureGen gen;
    PastWord past;
    unsigned b;
  };
  const std::vector<Case> cases{{cantor(), PastWord(3, {}), 2},
                                {markov2(), PastWord(2, {1}), 3},
                                {markov2(), PastWord(2, {0}), 3}};
  for (const auto& c : cases) {
    const auto sched = KroneckerSchedule::compute(c.gen.base(), c.b, 30);
    const auto x = typical_point(c.gen, c.past, 120, 31);
    for (unsigned k : {0u, 2u})
      for (std::size_t n : {0UL, 1UL, 7UL, 18UL, 30UL})
        for (long m : {1L, 2L, 3L, 4L}) {
          const auto r = lifting_check(c.gen, c.past, x, sched, k, n, m);
          CHECK(r.defect < 1e-9);
        }
  }
}

TEST_CASE("orbit against conditional averages") {
  const auto g = cantor();
  const std::size_t n = 10000;
  const unsigned k = 4;
  const auto x = typical_point(g, PastWord(3, {}), precision_budget(3, 2, n, kDefaultGuardDigits, k).digits, 5);
  const auto r = orbit_vs_conditional_compare(g, PastWord(3, {}), x, 2, k, 1, n);
  CHECK(r.n == n);
  CHECK(r.gap < 0.1);
  CHECK(std::abs(r.cond_avg) <= r.abs_term_avg + 1e-12);

  const auto markov_x = typical_point(markov2(), PastWord(2, {0}), precision_budget(2, 3, 2000).digits, 6);
  const auto rm = orbit_vs_conditional_compare(markov2(), PastWord(2, {0}), markov_x, 3, 0, 2, 2000);
  CHECK(std::abs(rm.cond_avg) <= rm.abs_term_avg + 1e-12);
  CHECK_THROWS_AS(orbit_vs_conditional_compare(markov2(), PastWord(2, {}), markov_x, 3, 0, 2, 2000),
                  InputError);
  CHECK_THROWS_AS(orbit_vs_conditional_compare(g, PastWord(3, {}), x, 2, k, 0, n), InputError);
  CHECK_THROWS_AS(orbit_vs_conditional_compare(g, PastWord(3, {}), x, 2, k, 1, 4 * n), PrecisionError);
}

TEST_CASE("Lebesgue conditional terms are small") {
  // Image intervals have non-integer length a^{k+z}, so the terms do not
  // vanish; they are bounded by 1/(pi |m| a^{k+z}) <= 1/(pi |m| a^k).
  const auto g = MeasureGen::bernoulli(Eigen::Vector3d::Constant(1.0 / 3.0));
  const std::size_t n = 500;
  for (unsigned k : {0u, 3u})
    for (long m : {1L, 5L}) {
      const auto x = typical_point(g, PastWord(3, {}), precision_budget(3, 2, n, kDefaultGuardDigits, k).digits, 2);
      const auto r = orbit_vs_conditional_compare(g, PastWord(3, {}), x, 2, k, m, n);
      CHECK(r.abs_term_avg <= 1.0 / (oracle::kPi * static_cast<double>(m) * std::pow(3.0, k)) + 1e-12);
    }
}

TEST_CASE("integrated Fourier quantity") {
  const auto leb = MeasureGen::bernoulli(Eigen::Vector2d(0.5, 0.5));
  const auto u = proof_chain_quantity(leb, 2, 1, 4, 12, 1);
  CHECK(u.value <= u.rhs);
  CHECK(u.std_error == 0.0);
  CHECK(u.seeds.size() == 4);
  CHECK_THROWS_AS(proof_chain_quantity(MeasureGen::bernoulli(Eigen::Vector2d(1.0, 0.0)), 0, 1, 2, 8, 1),
                  InputError);
  CHECK_THROWS_AS(proof_chain_quantity(cantor(), 0, 0, 2, 8, 1), InputError);

  double prev = INFINITY;
  for (unsigned k : {0u, 2u, 4u}) {
    const auto e = proof_chain_quantity(cantor(), k, 1, 3, 10, 7);
    CHECK(e.value < prev);
    CHECK(e.value <= e.rhs);
    CHECK(e.rhs_corr == doctest::Approx(correlation_integral(realize(cantor(), 10), std::pow(3.0, -0.5 * k))));
    prev = e.value;
  }

  const auto mk = proof_chain_quantity(markov2(), 2, 1, 20, 12, 3);
  CHECK(mk.value <= mk.rhs);
  CHECK(mk.std_error >= 0.0);
}

TEST_CASE("log slope fit") {
  const std::vector<double> x{1, 2, 4, 8, 16};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -0.63));
  CHECK(fit_log_slope(x, y) == doctest::Approx(-0.63).epsilon(1e-12));
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(fit_log_slope(one, one), InputError);
}

TEST_CASE("rational controls") {
  const cd want(-1.0 / 6.0, std::sqrt(7.0) / 6.0);
  CHECK(std::abs(rational_cycle_average(1, 7, 2, 1) - want) < 1e-14);
  // 1/6 under x2: 1/3, 2/3, 1/3, ... (eventually periodic).
  CHECK(std::abs(rational_cycle_average(1, 6, 2, 1) - cd(-0.5, 0.0)) < 1e-14);
  const auto rc = rational_control(1, 7, 2, 1, 3000);
  CHECK(rc.gap < 1e-3);
  CHECK_THROWS_AS(rational_cycle_average(7, 7, 2, 1), InputError);
}

TEST_CASE("experiment reports") {
  HostExperimentConfig cfg{MeasureGen::bernoulli(Eigen::Vector2d(0.25, 0.75)), 2, 4, 1000, {1, 2}, {100, 1000}, 0, 3, 0.05};
  const auto dep = host_experiment(cfg);
  CHECK(dep.negative_control);
  CHECK(dep.samples.size() == 4);
  CHECK(dep.stats.size() == 4);
  REQUIRE(dep.predicted.size() == 2);
  REQUIRE(dep.predicted[0].has_value());
  CHECK(std::abs(*dep.predicted[0] - ft_adic(realize(cfg.gen, 14), 1.0)) < 1e-3);
  const auto summary = host_summary(dep);
  CHECK(summary.at("label") == "negative-control");

  cfg.gen = cantor();
  cfg.frequencies = {1};
  const auto ind = host_experiment(cfg);
  CHECK_FALSE(ind.negative_control);
  CHECK(host_summary(ind).at("label") == "independent");
  CHECK(weyl_csv(ind).find("sample_id") != std::string::npos);
  CHECK_FALSE(weyl_dat(ind).empty());

  cfg.checkpoints = {100, 500};
  CHECK_THROWS_AS(host_experiment(cfg), InputError);
}

}  // TEST_SUITE
