#pragma once

// Weyl sums along xb orbits of mu-typical points, the orbit-versus-conditional
// comparison with the n' = floor(alpha n) time change, the lifting identity,
// and the integrated Fourier quantity that drives the whole argument.

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hostlab/adic_arith.hpp"
#include "hostlab/measure_kit.hpp"

namespace hostlab {

// W_N(m) = (1/N) sum_{n=1}^N e(m T_b^n x) at a fixed checkpoint schedule.
class WeylAccumulator {
 public:
  WeylAccumulator(std::vector<long> frequencies, std::vector<std::size_t> checkpoints);

  void add(double point);
  std::size_t count() const { return count_; }
  const std::vector<long>& frequencies() const { return frequencies_; }
  const std::vector<std::size_t>& checkpoints() const { return checkpoints_; }
  std::complex<double> current(std::size_t freq_index) const;
  // averages()[c][f]: W at checkpoint c for frequency f. Only reached
  // checkpoints are present.
  const std::vector<std::vector<std::complex<double>>>& averages() const { return averages_; }

 private:
  std::vector<long> frequencies_;
  std::vector<std::size_t> checkpoints_;
  std::vector<std::complex<double>> sums_;
  std::size_t count_ = 0;
  std::vector<std::vector<std::complex<double>>> averages_;
};

// Exact orbit under T_b; the last checkpoint is N_max. Throws PrecisionError
// when x carries fewer digits than precision_budget(base, b, N_max).
WeylAccumulator weyl_sum(const UnitPoint& x, unsigned long b, std::span<const long> frequencies,
                         std::span<const std::size_t> checkpoints);

// Checks that every leading digit of x up to `length` is allowed after the
// past omega; throws NullCylinderError naming the first null prefix.
void require_in_support(const MeasureGen& gen, const PastWord& past,
                        std::span<const unsigned> digits);

// The one past symbol mu_omega depends on (empty for i.i.d. kinds).
PastWord relevant_past(const MeasureGen& gen, const PastWord& past);

// T_b^n (T_{a^k} (mu_omega)_{A_{n'}(x)}) = (S_scale mu_state + shift) mod 1,
// scale = a^k a^{z_n}, shift = frac(a^k b^n c_n) with c_n the n'-digit
// truncation of x, state = past after the first n' digits of x.
struct LiftedMeasure {
  std::size_t n = 0;
  std::int64_t nprime = 0;
  double z = 0.0;
  double scale = 0.0;
  double shift = 0.0;
  PastWord state;
};

inline constexpr unsigned kDefaultTransformDepth = 30;

struct CompareResult {
  std::complex<double> orbit_avg;
  std::complex<double> cond_avg;
  double gap = 0.0;
  double abs_term_avg = 0.0;  // (1/N) sum |F_m| of the conditional terms
  std::size_t n = 0;
};

// orbitAvg = (1/N) sum e_m(T_b^n T_a^k x) over the exact orbit;
// condAvg = (1/N) sum F_m(T_b^n(T_{a^k}(mu_omega)_{A_{n'}(x)})), each term
// evaluated through the lifting identity. `depth` is the level of the
// conditional realizations (k + depth digits below the cylinder).
CompareResult orbit_vs_conditional_compare(const MeasureGen& gen, const PastWord& omega,
                                           const UnitPoint& x, unsigned long b, unsigned k,
                                           long m, std::size_t n,
                                           unsigned depth = kDefaultTransformDepth);

struct LiftingCheck {
  std::size_t n = 0;
  std::int64_t nprime = 0;
  long m = 0;
  std::complex<double> direct;   // exact interval images of the level-(n'+depth) cylinder
  std::complex<double> lifted;   // e(m shift) * F(m scale) of mu_state
  std::complex<double> wrapped;  // wrapped pieces of (S_scale mu_state + shift) mod 1
  double defect = 0.0;           // max pairwise gap
};

// Both sides of the lifting identity at time n.
LiftingCheck lifting_check(const MeasureGen& gen, const PastWord& omega, const UnitPoint& x,
                           const KroneckerSchedule& schedule, unsigned k, std::size_t n, long m,
                           unsigned depth = 6);

struct ProofChainEstimate {
  unsigned k = 0;
  long m = 0;
  std::size_t samples = 0;
  unsigned level = 0;
  std::size_t panels = 0;  // largest panel count used
  double value = 0.0;      // mean over pasts of int_0^1 |F_m(S_{a^z} S_{a^k} mu_omega)|^2 dz
  double std_error = 0.0;
  double rhs_first = 0.0;  // 1 / (a^{k/2} |m| ln a)
  double rhs_corr = 0.0;   // mean of int mu_omega(B_{a^{-k/2}}(y)) dmu_omega(y)
  double rhs = 0.0;
  std::vector<std::uint64_t> seeds;
};

ProofChainEstimate proof_chain_quantity(const MeasureGen& gen, unsigned k, long m,
                                        std::size_t samples, unsigned level, std::uint64_t seed,
                                        std::size_t max_nodes = std::size_t{1} << 24);

// Least-squares slope of log y against log x.
double fit_log_slope(std::span<const double> x, std::span<const double> y);

// ------------------------------------------------------------- experiments

struct HostExperimentConfig {
  MeasureGen gen;
  unsigned long b = 2;
  std::size_t samples = 50;
  std::size_t n_max = 100000;
  std::vector<long> frequencies{1};
  std::vector<std::size_t> checkpoints{100, 1000, 10000, 100000};
  unsigned k = 0;
  std::uint64_t seed = 0;
  double soft_threshold = 0.05;
};

struct WeylSample {
  std::size_t id = 0;
  std::uint64_t seed = 0;
  WeylAccumulator weyl;
};

struct CheckpointStats {
  long m = 0;
  std::size_t n = 0;
  double median = 0.0;
  double p90 = 0.0;
  std::complex<double> mean;
  double median_gap = 0.0;  // median |W - predicted| (negative control only)
};

struct HostReport {
  HostExperimentConfig config;
  bool negative_control = false;
  std::vector<WeylSample> samples;
  std::vector<CheckpointStats> stats;
  // Limit of W(m) for dependent (a, b) with b a power of a: mu^(m).
  std::vector<std::optional<std::complex<double>>> predicted;
  bool medians_decrease = false;  // over checkpoints >= 1000, every m
  bool below_threshold = false;   // median |W_{N_max}(m_0)| < soft_threshold
};

HostReport host_experiment(const HostExperimentConfig& cfg);

std::string weyl_csv(const HostReport& report);
std::string weyl_dat(const HostReport& report);
nlohmann::json host_summary(const HostReport& report);

// Mean of e(m y) over the eventual T_b cycle of p/q.
std::complex<double> rational_cycle_average(unsigned long p, unsigned long q, unsigned long b,
                                            long m);

struct RationalControl {
  std::complex<double> observed;
  std::complex<double> predicted;
  double gap = 0.0;
};

// W_N(m) for x = p/q (digits per budget in base 2) against the cycle average.
RationalControl rational_control(unsigned long p, unsigned long q, unsigned long b, long m,
                                 std::size_t n);

}  // namespace hostlab
