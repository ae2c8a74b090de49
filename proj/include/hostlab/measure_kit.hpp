#pragma once

// a-adic measures: generators (Bernoulli, Markov, equal-ratio IFS digit sets),
// their level-n piecewise-uniform realizations, conditioning on cylinders and
// on the past, the T_a pushforward, entropy and the correlation integral.
//
// Index convention: a word d_1..d_n maps to k = sum_j d_j a^{n-j}, the atom
// [k/a^n, (k+1)/a^n). The word v*u therefore has index k_v * a^{|u|} + k_u, so
// every cylinder is a contiguous block of the weight vector.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hostlab/rng.hpp"

namespace hostlab {

inline constexpr double kProbabilityTolerance = 1e-12;
inline constexpr std::size_t kMaxAtoms = std::size_t{1} << 24;

enum class GeneratorKind { bernoulli, markov, ifs_digits };

std::string to_string(GeneratorKind kind);

class MeasureGen {
 public:
  // Base is p.size().
  static MeasureGen bernoulli(Eigen::VectorXd p);
  // Stationary vector solved from P.
  static MeasureGen markov(Eigen::MatrixXd transition);
  static MeasureGen markov(Eigen::MatrixXd transition, Eigen::VectorXd stationary);
  // Equal-ratio self-similar measure: digits in `digits` with the given weights.
  static MeasureGen ifs_digits(unsigned base, std::vector<unsigned> digits,
                               Eigen::VectorXd weights);

  GeneratorKind kind() const { return kind_; }
  unsigned base() const { return base_; }
  bool iid() const { return kind_ != GeneratorKind::markov; }

  // Law of the first digit (p, pi, or IFS weights spread over the full base).
  const Eigen::VectorXd& initial() const { return initial_; }
  // Row d is the law of the next digit after d. For i.i.d. kinds every row
  // equals initial().
  const Eigen::MatrixXd& transition() const { return transition_; }
  // IFS only.
  const std::vector<unsigned>& digit_set() const { return digit_set_; }
  const Eigen::VectorXd& digit_weights() const { return digit_weights_; }

 private:
  MeasureGen() = default;
  void validate() const;

  GeneratorKind kind_ = GeneratorKind::bernoulli;
  unsigned base_ = 0;
  Eigen::VectorXd initial_;
  Eigen::MatrixXd transition_;
  std::vector<unsigned> digit_set_;
  Eigen::VectorXd digit_weights_;
};

nlohmann::json to_json(const MeasureGen& gen);
MeasureGen measure_gen_from_json(const nlohmann::json& j);

// Level-n measure with piecewise-uniform density a^n w_k on atom k.
class AdicMeasure {
 public:
  AdicMeasure(unsigned base, unsigned level, Eigen::VectorXd weights);

  static AdicMeasure uniform(unsigned base, unsigned level);
  // All mass on the single atom named by `digits` (level = digits.size()).
  static AdicMeasure point_mass(unsigned base, std::span<const unsigned> digits);

  unsigned base() const { return base_; }
  unsigned level() const { return level_; }
  std::size_t size() const { return static_cast<std::size_t>(weights_.size()); }
  double cell_width() const;
  const Eigen::VectorXd& weights() const { return weights_; }

  // Indices of atoms with positive weight, ascending.
  const std::vector<std::size_t>& support() const { return support_; }

  // Mass of the cylinder named by a word of length <= level.
  double mass(std::span<const unsigned> word) const;

 private:
  unsigned base_;
  unsigned level_;
  Eigen::VectorXd weights_;
  std::vector<std::size_t> support_;
};

// a^level, or ResourceError past kMaxAtoms.
std::size_t atom_count(unsigned base, unsigned level);
std::size_t word_index(unsigned base, std::span<const unsigned> word);
std::vector<unsigned> index_word(unsigned base, unsigned level, std::size_t index);

// Splits each atom evenly into a children (same piecewise-uniform measure).
AdicMeasure refine(const AdicMeasure& mu);
// Sums children into parents (drops the last digit).
AdicMeasure coarsen(const AdicMeasure& mu);

// Past (omega_0, omega_{-1}, ...): most recent symbol first.
struct PastWord {
  unsigned base = 2;
  std::vector<unsigned> symbols;

  PastWord() = default;
  PastWord(unsigned base, std::vector<unsigned> symbols);
  bool empty() const { return symbols.empty(); }
  // Past after the next `digits` have been emitted: omega * digits.
  PastWord extended(std::span<const unsigned> digits) const;
};

// An atom of the partition A_n, named by its first n digits.
struct CylinderWord {
  unsigned base = 2;
  std::vector<unsigned> digits;

  CylinderWord() = default;
  CylinderWord(unsigned base, std::vector<unsigned> digits);
  std::size_t length() const { return digits.size(); }
};

AdicMeasure realize(const MeasureGen& gen, unsigned level);

// (mu)_{A_n(w)} pushed forward by T_a^n: weights w'_u = w_{w*u} / mu(w).
AdicMeasure cylinder_condition(const AdicMeasure& mu, const CylinderWord& word);

// The conditional measure mu_omega at the given level.
AdicMeasure conditional_on_past(const MeasureGen& gen, const PastWord& past, unsigned level);

// Pushforward by T_a^j: w'_u = sum_v w_{v*u}.
AdicMeasure shift_push(const AdicMeasure& mu, unsigned j);

// Entropy rate of the digit process, in nats.
double entropy(const MeasureGen& gen);

// int mu(B_r(y)) dmu(y) for the piecewise-uniform measure on [0,1] (no
// wraparound). Requires a^-level <= r/16 unless r >= 1.
double correlation_integral(const AdicMeasure& mu, double r);

inline constexpr double kCorrelationGuard = 16.0;

// Compares both sides of T_a^n((mu_omega)_{A_n(x)}) = mu_{T^n(omega,x)} at
// `level` entrywise to 1e-12.
bool verify_equivariance(const MeasureGen& gen, const PastWord& past, const CylinderWord& x,
                         unsigned level);

// Largest entrywise gap between the two sides above.
double equivariance_defect(const MeasureGen& gen, const PastWord& past, const CylinderWord& x,
                           unsigned level);

struct EquivarianceRow {
  std::string gen_id;
  std::size_t pair = 0;
  std::size_t past_length = 0;
  std::size_t cylinder_length = 0;
  double defect = 0.0;
  bool ok = false;
};

// `pairs` random (past, cylinder) pairs: a stationary past of length 1..6 and
// a cylinder of length 1..level-1 drawn from mu_omega, so it is never null.
std::vector<EquivarianceRow> equivariance_battery(const MeasureGen& gen, const std::string& id,
                                                  std::size_t pairs, unsigned level,
                                                  std::uint64_t seed);
std::string equivariance_csv(std::span<const EquivarianceRow> rows);

// --------------------------------------------------------------- sampling

std::size_t sample_categorical(const Eigen::Ref<const Eigen::VectorXd>& p, Rng& rng);

// Stationary digit path X_1..X_count.
std::vector<unsigned> sample_digits(const MeasureGen& gen, std::size_t count, Rng& rng);

// Digits X_1..X_count drawn from mu_omega (the future given the past).
std::vector<unsigned> sample_digits_given_past(const MeasureGen& gen, const PastWord& past,
                                               std::size_t count, Rng& rng);

// Stationary past of the given length, most recent first.
PastWord sample_past(const MeasureGen& gen, std::size_t length, Rng& rng);

// Draws points of [0,1) from the piecewise-uniform measure.
class PointSampler {
 public:
  explicit PointSampler(const AdicMeasure& mu);
  double operator()(Rng& rng) const;

 private:
  double width_;
  std::vector<std::size_t> atoms_;
  std::vector<double> cumulative_;
};

// CSV rows "k,weight" with the versioned header.
std::string to_csv(const AdicMeasure& mu);

}  // namespace hostlab
