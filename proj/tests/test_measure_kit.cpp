#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hostlab/errors.hpp"
#include "hostlab/measure_kit.hpp"
#include "oracles.hpp"

using namespace hostlab;

namespace {

MeasureGen cantor() { return MeasureGen::ifs_digits(3, {0, 2}, Eigen::Vector2d(0.5, 0.5)); }

MeasureGen markov2() {
  Eigen::Matrix2d p;
  p << 0.9, 0.1, 0.5, 0.5;
  return MeasureGen::markov(p);
}

}  // namespace

TEST_SUITE("measure_kit") {

TEST_CASE("generator validation") {
  CHECK_THROWS_AS(MeasureGen::bernoulli(Eigen::Vector2d(0.6, 0.6)), InputError);
  CHECK_THROWS_AS(MeasureGen::bernoulli(Eigen::Vector2d(-0.1, 1.1)), InputError);
  CHECK_THROWS_AS(MeasureGen::bernoulli(Eigen::VectorXd()), InputError);
  Eigen::Matrix2d bad;
  bad << 0.9, 0.2, 0.5, 0.5;
  CHECK_THROWS_AS(MeasureGen::markov(bad), InputError);
  CHECK_THROWS_AS(MeasureGen::markov(Eigen::MatrixXd::Ones(2, 3) / 3.0), InputError);
  CHECK_THROWS_AS(MeasureGen::ifs_digits(3, {0, 0}, Eigen::Vector2d(0.5, 0.5)), InputError);
  CHECK_THROWS_AS(MeasureGen::ifs_digits(3, {0, 3}, Eigen::Vector2d(0.5, 0.5)), InputError);
  CHECK_THROWS_AS(MeasureGen::ifs_digits(3, {0, 2}, Eigen::Vector3d(0.2, 0.3, 0.5)), InputError);
  CHECK_THROWS_AS(MeasureGen::markov(markov2().transition(), Eigen::Vector2d(0.5, 0.5)), InputError);
}

TEST_CASE("stationary vector of the Markov chain") {
  const auto g = markov2();
  CHECK(g.initial()[0] == doctest::Approx(5.0 / 6.0).epsilon(1e-14));
  CHECK(g.initial()[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  CHECK_FALSE(g.iid());
  CHECK(cantor().iid());
  CHECK(to_string(g.kind()) == "markov");
}

TEST_CASE("realizations") {
  const auto mu = realize(cantor(), 2);
  CHECK(mu.size() == 9);
  const double expect[9] = {0.25, 0, 0.25, 0, 0, 0, 0.25, 0, 0.25};
  for (int k = 0; k < 9; ++k) CHECK(mu.weights()[k] == doctest::Approx(expect[k]));
  CHECK(mu.support() == std::vector<std::size_t>{0, 2, 6, 8});
  const std::vector<unsigned> w{2};
  CHECK(mu.mass(w) == doctest::Approx(0.5));

  // Markov level-2 weights are pi_i P_ij.
  const auto g = markov2();
  const auto m2 = realize(g, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(m2.weights()[2 * i + j] ==
            doctest::Approx(g.initial()[i] * g.transition()(i, j)).epsilon(1e-14));

  CHECK(coarsen(refine(mu)).weights().isApprox(mu.weights(), 1e-15));
  CHECK(coarsen(realize(g, 5)).weights().isApprox(realize(g, 4).weights(), 1e-14));
  CHECK_THROWS_AS(realize(g, 0), InputError);
}

TEST_CASE("index convention") {
  const std::vector<unsigned> w{1, 0, 2};
  CHECK(word_index(3, w) == 11);
  CHECK(index_word(3, 3, 11) == w);
  CHECK_THROWS_AS(atom_count(2, 40), ResourceError);
  CHECK(atom_count(3, 4) == 81);
}

TEST_CASE("conditioning on cylinders and the past") {
  const auto mu = realize(cantor(), 4);
  CHECK_THROWS_AS(cylinder_condition(mu, CylinderWord(3, {1})), NullCylinderError);
  const auto c = cylinder_condition(mu, CylinderWord(3, {2, 0}));
  CHECK(c.level() == 2);
  CHECK(c.weights().isApprox(realize(cantor(), 2).weights(), 1e-15));

  const auto g = markov2();
  CHECK_THROWS_AS(conditional_on_past(g, PastWord(2, {}), 3), InputError);
  const auto m = conditional_on_past(g, PastWord(2, {1, 0}), 1);
  CHECK(m.weights()[0] == doctest::Approx(0.5));
  // Stationary mixture of the conditionals is the stationary measure.
  const auto m0 = conditional_on_past(g, PastWord(2, {0}), 6);
  const auto m1 = conditional_on_past(g, PastWord(2, {1}), 6);
  const Eigen::VectorXd mix = g.initial()[0] * m0.weights() + g.initial()[1] * m1.weights();
  CHECK(mix.isApprox(realize(g, 6).weights(), 1e-13));
}

TEST_CASE("equivariance") {
  const auto g = markov2();
  CHECK(verify_equivariance(g, PastWord(2, {1}), CylinderWord(2, {0, 1, 1}), 7));
  CHECK(verify_equivariance(cantor(), PastWord(3, {2}), CylinderWord(3, {2, 2}), 6));
  for (const auto& gen : {g, cantor(), MeasureGen::bernoulli(Eigen::Vector3d(0.2, 0.3, 0.5))}) {
    const auto rows = equivariance_battery(gen, "g", 40, 7, 99);
    CHECK(rows.size() == 40);
    for (const auto& r : rows) {
      CHECK(r.ok);
      CHECK(r.defect <= 1e-12);
      CHECK(r.past_length >= 1);
      CHECK(r.cylinder_length >= 1);
      CHECK(r.cylinder_length <= 6);
    }
  }
  const auto csv = equivariance_csv(equivariance_battery(g, "m", 5, 5, 1));
  CHECK(csv.find("defect") != std::string::npos);
}

TEST_CASE("shift pushforward preserves stationary measures") {
  for (const auto& gen : {markov2(), cantor()}) {
    const auto mu = realize(gen, 7);
    for (unsigned j : {1u, 3u}) {
      const auto pushed = shift_push(mu, j);
      CHECK(pushed.weights().isApprox(realize(gen, 7 - j).weights(), 1e-13));
    }
  }
}

TEST_CASE("entropy") {
  CHECK(entropy(cantor()) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(entropy(MeasureGen::bernoulli(Eigen::Vector2d(1.0, 0.0))) == 0.0);
  const auto g = markov2();
  auto h = [](double p) { return -p * std::log(p) - (1 - p) * std::log(1 - p); };
  CHECK(entropy(g) == doctest::Approx(5.0 / 6.0 * h(0.1) + 1.0 / 6.0 * h(0.5)).epsilon(1e-14));
}

TEST_CASE("correlation integral") {
  const auto leb = AdicMeasure::uniform(2, 12);
  for (double r : {0.01, 0.1, 0.3})
    CHECK(correlation_integral(leb, r) == doctest::Approx(2 * r - r * r).epsilon(1e-12));
  CHECK(correlation_integral(leb, 1.5) == 1.0);
  CHECK_THROWS_AS(correlation_integral(AdicMeasure::uniform(2, 4), 0.1), ResolutionError);
  CHECK_THROWS_AS(correlation_integral(leb, 0.0), InputError);

  for (const auto& gen : {cantor(), markov2(), MeasureGen::bernoulli(Eigen::Vector3d(0.2, 0.3, 0.5))}) {
    const auto mu = realize(gen, gen.base() == 2 ? 11 : 7);
    for (double r : {0.03, 0.1, 0.2})
      CHECK(correlation_integral(mu, r) ==
            doctest::Approx(oracle::correlation_bruteforce(mu, r)).epsilon(1e-11));
  }
}

TEST_CASE("sampling") {
  const auto g = markov2();
  Rng rng(5);
  const auto d = sample_digits(g, 200000, rng);
  double ones = 0.0;
  for (unsigned v : d) ones += v;
  CHECK(ones / 200000.0 == doctest::Approx(1.0 / 6.0).epsilon(0.03));

  const PointSampler s(realize(cantor(), 8));
  double mean = 0.0;
  for (int i = 0; i < 100000; ++i) mean += s(rng);
  CHECK(mean / 100000.0 == doctest::Approx(0.5).epsilon(0.01));

  const auto p = sample_past(g, 4, rng);
  CHECK(p.symbols.size() == 4);
  CHECK(sample_digits_given_past(g, PastWord(2, {1}), 3, rng).size() == 3);
  CHECK_THROWS_AS(sample_digits_given_past(g, PastWord(2, {}), 3, rng), InputError);
}

TEST_CASE("serialization") {
  for (const auto& gen : {markov2(), cantor(), MeasureGen::bernoulli(Eigen::Vector2d(0.25, 0.75))}) {
    const auto back = measure_gen_from_json(to_json(gen));
    CHECK(back.kind() == gen.kind());
    CHECK(back.transition().isApprox(gen.transition(), 1e-15));
    CHECK(back.initial().isApprox(gen.initial(), 1e-15));
  }
  CHECK_THROWS_AS(measure_gen_from_json(nlohmann::json{{"kind", "weird"}}), InputError);

  const auto csv = to_csv(realize(cantor(), 2));
  std::istringstream in(csv);
  std::string line;
  double total = 0.0;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("k,", 0) == 0) continue;
    total += std::stod(line.substr(line.find(',') + 1));
    ++rows;
  }
  CHECK(rows == 9);
  CHECK(total == doctest::Approx(1.0));
}

}  // TEST_SUITE
