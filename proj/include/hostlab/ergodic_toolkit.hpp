#pragma once

// Simulation harness for the martingale-difference ergodic theorem and for
// joint equidistribution of (n theta, T^[beta n] x) with T the a-adic shift.

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hostlab/measure_kit.hpp"

namespace hostlab {

// Stationary digit process X_1, X_2, ... (Bernoulli or Markov only).
struct SymbolicProcess {
  MeasureGen gen;
  std::uint64_t seed = 0;

  SymbolicProcess(MeasureGen gen, std::uint64_t seed);
};

// f_n = table(X_{n+1}, ..., X_{n+k}); table indexed by word_index.
class WindowFunction {
 public:
  WindowFunction(unsigned base, unsigned window, Eigen::VectorXd table);

  static WindowFunction constant(unsigned base, unsigned window, double c);
  // +1 / -1 on the next digit being even / odd.
  static WindowFunction parity(unsigned base);
  // Seeded table with entries uniform in [-1, 1].
  static WindowFunction random(unsigned base, unsigned window, std::uint64_t seed);

  unsigned base() const { return base_; }
  unsigned window() const { return window_; }
  const Eigen::VectorXd& table() const { return table_; }
  double bound() const { return bound_; }
  double operator()(std::span<const unsigned> word) const;

 private:
  unsigned base_;
  unsigned window_;
  Eigen::VectorXd table_;
  double bound_;
};

// E(f_n | X_n = s) for every state s: k-step transition sums, no simulation.
Eigen::VectorXd window_conditional_expectation(const MeasureGen& gen, const WindowFunction& f);

// Per-trial values of (1/N) sum_{n=1}^N (f_n - E(f_n | B_n)). Trial t uses
// seed derive_seed(proc.seed, stream, t).
std::vector<double> martingale_avg_experiment(const SymbolicProcess& proc,
                                              const WindowFunction& f, std::size_t n,
                                              std::size_t trials, std::uint64_t stream = 0);

double rms(std::span<const double> values);

struct SplitAverage {
  double full = 0.0;
  std::vector<double> class_means;    // residue classes n = p mod k, n = 1..N
  std::vector<std::size_t> class_sizes;
  double reassembled = 0.0;
};

SplitAverage split_index_average(std::span<const double> values, std::size_t k);

// -------------------------------------------------- time-change experiment

// Throws InputError if a convergent p/q with q <= max_denominator is within
// tolerance of theta.
void require_irrational(double theta, double max_denominator = 1e6, double tolerance = 1e-14);

// Test function on the shift space, depending on finitely many leading digits.
struct DigitTest {
  std::string id;
  unsigned base = 2;
  unsigned depth = 1;
  std::vector<std::complex<double>> table;  // indexed by word_index of depth digits

  std::complex<double> operator()(std::span<const unsigned> digits) const;
  double bound() const;
};

DigitTest constant_test(unsigned base, std::complex<double> c = 1.0);
// e_1 of the first-digit truncation: x -> e(x_1 / a).
DigitTest first_digit_phase(unsigned base);
// Real two-digit table, seeded, entries in [-1, 1].
DigitTest two_digit_table(unsigned base, std::uint64_t seed);

// int g dmu under the stationary law of gen.
std::complex<double> stationary_mean(const MeasureGen& gen, const DigitTest& g);

struct JointEntry {
  long j = 0;
  std::string g_id;
  std::complex<double> value;
  std::complex<double> predicted;
  double tolerance = 0.0;
  double z_score = 0.0;
  bool ok = false;
};

struct JointEquidistResult {
  double theta = 0.0;
  double beta = 0.0;
  std::size_t n = 0;
  std::size_t samples = 0;
  std::vector<JointEntry> entries;
};

// A(j, g) = mean over M samples of (1/N) sum_{n<=N} e(j n theta) g(T^[beta n] x).
// Prediction 1{j=0} int g dmu; tolerance 5 M^{-1/2} + eps_N with
// eps_N = ||g|| / (2 N ||j theta||) for j != 0 and ||g|| / N for j = 0.
JointEquidistResult time_change_joint_experiment(double theta, double beta, const MeasureGen& gen,
                                                 std::span<const long> js,
                                                 std::span<const DigitTest> tests, std::size_t n,
                                                 std::size_t samples, std::uint64_t seed);

std::string martingale_csv(std::span<const double> values, std::size_t n);
std::string joint_csv(const JointEquidistResult& result);

}  // namespace hostlab
