#include "hostlab/host_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "hostlab/errors.hpp"
#include "hostlab/fourier_lab.hpp"
#include "hostlab/parallel.hpp"
#include "hostlab/report.hpp"
#include "hostlab/rng.hpp"

namespace hostlab {

using cd = std::complex<double>;

namespace {

constexpr double kPi = std::numbers::pi;

mpz_class pow_ui(unsigned long base, unsigned long exp) {
  mpz_class out;
  mpz_ui_pow_ui(out.get_mpz_t(), base, exp);
  return out;
}

// floor(num * 2^53 / den) / 2^53 for 0 <= num < den.
double ratio_to_real(const mpz_class& num, const mpz_class& den) {
  mpz_class q = num;
  mpz_mul_2exp(q.get_mpz_t(), q.get_mpz_t(), 53);
  mpz_tdiv_q(q.get_mpz_t(), q.get_mpz_t(), den.get_mpz_t());
  return std::ldexp(q.get_d(), -53);
}

void check_frequencies(std::span<const long> ms) {
  if (ms.empty()) throw InputError("frequency set must be nonempty");
  for (long m : ms)
    if (m == 0) throw InputError("frequency m = 0 is not allowed");
}

std::vector<std::size_t> checked_checkpoints(std::span<const std::size_t> cps) {
  if (cps.empty()) throw InputError("checkpoint schedule must be nonempty");
  std::vector<std::size_t> out(cps.begin(), cps.end());
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i] == 0 || (i > 0 && out[i] <= out[i - 1]))
      throw InputError("checkpoints must be positive and strictly increasing");
  return out;
}

void require_positive_entropy(const MeasureGen& gen, const char* who) {
  if (!(entropy(gen) > 1e-12))
    throw InputError(std::string(who) + ": generator has zero entropy (atomic conditionals)");
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Nearest-rank percentile.
double percentile_of(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return 0.0;
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  rank = std::clamp<std::size_t>(rank, 1, v.size());
  return v[rank - 1];
}

}  // namespace

// --------------------------------------------------------------- Weyl sums

WeylAccumulator::WeylAccumulator(std::vector<long> frequencies, std::vector<std::size_t> checkpoints)
    : frequencies_(std::move(frequencies)),
      checkpoints_(checked_checkpoints(checkpoints)),
      sums_(frequencies_.size(), cd{0.0, 0.0}) {
  check_frequencies(frequencies_);
}

void WeylAccumulator::add(double point) {
  for (std::size_t f = 0; f < frequencies_.size(); ++f)
    sums_[f] += unit_phase(static_cast<double>(frequencies_[f]) * point);
  ++count_;
  if (averages_.size() < checkpoints_.size() && count_ == checkpoints_[averages_.size()]) {
    std::vector<cd> row(frequencies_.size());
    for (std::size_t f = 0; f < row.size(); ++f) row[f] = current(f);
    averages_.push_back(std::move(row));
  }
}

cd WeylAccumulator::current(std::size_t freq_index) const {
  if (count_ == 0) return {0.0, 0.0};
  return sums_.at(freq_index) / static_cast<double>(count_);
}

WeylAccumulator weyl_sum(const UnitPoint& x, unsigned long b, std::span<const long> frequencies,
                         std::span<const std::size_t> checkpoints) {
  WeylAccumulator acc({frequencies.begin(), frequencies.end()}, checked_checkpoints(checkpoints));
  const std::size_t n_max = acc.checkpoints().back();
  const auto budget = precision_budget(x.base(), b, n_max);
  if (x.precision() < budget.digits)
    throw PrecisionError("weyl_sum: x carries " + std::to_string(x.precision()) +
                         " digits but N = " + std::to_string(n_max) + " under x" +
                         std::to_string(b) + " needs " + std::to_string(budget.digits));
  OrbitKernel orbit(x, b);
  for (std::size_t n = 1; n <= n_max; ++n) {
    orbit.step();
    acc.add(orbit.value());
  }
  return acc;
}

// ------------------------------------------------ conditional comparison

void require_in_support(const MeasureGen& gen, const PastWord& past,
                        std::span<const unsigned> digits) {
  const bool use_past = !gen.iid() && !past.empty();
  for (std::size_t i = 0; i < digits.size(); ++i) {
    const unsigned d = digits[i];
    if (d >= gen.base()) throw InputError("digit out of range for the generator base");
    double p = 0.0;
    if (i == 0)
      p = use_past ? gen.transition()(past.symbols.front(), d) : gen.initial()[d];
    else
      p = gen.transition()(digits[i - 1], d);
    if (!(p > 0.0))
      throw NullCylinderError("digit " + std::to_string(i + 1) + " (= " + std::to_string(d) +
                              ") has probability zero given the preceding digits");
  }
}

PastWord relevant_past(const MeasureGen& gen, const PastWord& past) {
  if (gen.iid() || past.empty()) return PastWord(gen.base(), {});
  return PastWord(gen.base(), {past.symbols.front()});
}

namespace {

PastWord state_after(const MeasureGen& gen, const PastWord& omega,
                     const std::vector<unsigned>& digits, std::int64_t nprime) {
  if (gen.iid()) return PastWord(gen.base(), {});
  if (nprime == 0) return relevant_past(gen, omega);
  return PastWord(gen.base(), {digits[static_cast<std::size_t>(nprime) - 1]});
}

}  // namespace

CompareResult orbit_vs_conditional_compare(const MeasureGen& gen, const PastWord& omega,
                                           const UnitPoint& x, unsigned long b, unsigned k,
                                           long m, std::size_t n, unsigned depth) {
  if (m == 0) throw InputError("orbit_vs_conditional_compare: m = 0 is not allowed");
  if (n == 0) throw InputError("orbit_vs_conditional_compare: N must be >= 1");
  if (depth == 0) throw InputError("orbit_vs_conditional_compare: depth must be >= 1");
  const unsigned a = gen.base();
  if (x.base() != a) throw InputError("orbit_vs_conditional_compare: x is not in the generator base");
  if (!gen.iid() && omega.empty())
    throw InputError("orbit_vs_conditional_compare: Markov generator needs a past");
  const auto schedule = KroneckerSchedule::compute(a, static_cast<unsigned>(b), n);
  const auto budget = precision_budget(a, b, n, kDefaultGuardDigits, k);
  if (x.precision() < budget.digits)
    throw PrecisionError("orbit_vs_conditional_compare: x needs " + std::to_string(budget.digits) +
                         " digits, has " + std::to_string(x.precision()));

  const std::vector<unsigned> digits = x.digits();
  require_in_support(gen, omega,
                     std::span<const unsigned>(digits).first(
                         static_cast<std::size_t>(schedule.nprime(n)) + k));

  const mpz_class ak = pow_ui(a, k);
  OrbitKernel orbit(k ? mul_mod1(x, ak) : x, b);
  mpz_class t = ak;  // a^k b^n mod a^L
  const double md = static_cast<double>(m);

  cd orbit_sum{0.0, 0.0}, cond_sum{0.0, 0.0};
  double abs_sum = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    orbit.step();
    orbit_sum += unit_phase(md * orbit.value());

    t *= b;
    mpz_fdiv_r(t.get_mpz_t(), t.get_mpz_t(), x.modulus().get_mpz_t());
    const std::int64_t np = schedule.nprime(i);
    const double shift = to_real(mul_mod1(x.truncated(static_cast<std::size_t>(np)), t), 53);
    const double scale = std::pow(static_cast<double>(a), static_cast<double>(k) + schedule.z(i));
    const cd f = ft_generator(gen, state_after(gen, omega, digits, np), k + depth, md * scale);
    abs_sum += std::abs(f);
    cond_sum += unit_phase(md * shift) * f;
  }
  CompareResult out;
  out.n = n;
  out.orbit_avg = orbit_sum / static_cast<double>(n);
  out.cond_avg = cond_sum / static_cast<double>(n);
  out.gap = std::abs(out.orbit_avg - out.cond_avg);
  out.abs_term_avg = abs_sum / static_cast<double>(n);
  return out;
}

LiftingCheck lifting_check(const MeasureGen& gen, const PastWord& omega, const UnitPoint& x,
                           const KroneckerSchedule& schedule, unsigned k, std::size_t n, long m,
                           unsigned depth) {
  if (m == 0) throw InputError("lifting_check: m = 0 is not allowed");
  const unsigned a = gen.base();
  if (schedule.a() != a || x.base() != a) throw InputError("lifting_check: base mismatch");
  if (!gen.iid() && omega.empty()) throw InputError("lifting_check: Markov generator needs a past");
  const std::int64_t np = schedule.nprime(n);
  const auto npu = static_cast<std::size_t>(np);
  if (x.precision() < npu) throw PrecisionError("lifting_check: x has too few digits");
  const std::vector<unsigned> all = x.digits();
  const std::vector<unsigned> prefix(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(npu));
  require_in_support(gen, omega, prefix);

  const mpz_class t = pow_ui(a, k) * pow_ui(schedule.b(), n);
  const double md = static_cast<double>(m);

  // Lifting side.
  const double shift = to_real(mul_mod1(x.truncated(npu), t), 53);
  const double scale = std::pow(static_cast<double>(a), static_cast<double>(k) + schedule.z(n));
  const PastWord state = state_after(gen, omega, all, np);

  LiftingCheck out;
  out.n = n;
  out.nprime = np;
  out.m = m;
  out.lifted = unit_phase(md * shift) * ft_generator(gen, state, depth, md * scale);
  const PastWord cond_past = gen.iid() ? PastWord(a, {}) : state;
  out.wrapped = ft_wrapped(conditional_on_past(gen, cond_past, depth), scale, shift, m);

  // Direct side: every level-(n'+depth) atom inside A_{n'}(x), with its mass
  // from the chain along the whole word, mapped by y -> a^k b^n y exactly.
  const std::size_t sub = atom_count(a, depth);
  const mpz_class modulus = pow_ui(a, npu + depth);
  const double len = mpq_class(t, modulus).get_d();
  std::vector<double> mass(sub);
  double prefix_mass = 1.0;
  {
    const bool use_past = !gen.iid() && !omega.empty();
    for (std::size_t i = 0; i < prefix.size(); ++i)
      prefix_mass *= i == 0 ? (use_past ? gen.transition()(omega.symbols.front(), prefix[0])
                                        : gen.initial()[prefix[0]])
                            : gen.transition()(prefix[i - 1], prefix[i]);
    for (std::size_t u = 0; u < sub; ++u) {
      const auto word = index_word(a, depth, u);
      double p = prefix_mass;
      for (unsigned j = 0; j < depth; ++j) {
        if (j == 0 && prefix.empty())
          p *= use_past ? gen.transition()(omega.symbols.front(), word[0]) : gen.initial()[word[0]];
        else
          p *= gen.transition()(j == 0 ? prefix.back() : word[j - 1], word[j]);
      }
      mass[u] = p;
    }
  }
  mpz_class left = x.truncated(npu).numerator();  // c_n * a^L
  // c_n * a^{n'+depth} = numerator / a^{L - n' - depth}
  if (x.precision() >= npu + depth) {
    mpz_class drop = pow_ui(a, x.precision() - npu - depth);
    mpz_divexact(left.get_mpz_t(), left.get_mpz_t(), drop.get_mpz_t());
  } else {
    left *= pow_ui(a, npu + depth - x.precision());
  }
  left *= t;
  mpz_fdiv_r(left.get_mpz_t(), left.get_mpz_t(), modulus.get_mpz_t());
  mpz_class step = t;
  mpz_fdiv_r(step.get_mpz_t(), step.get_mpz_t(), modulus.get_mpz_t());
  cd direct{0.0, 0.0};
  for (std::size_t u = 0; u < sub; ++u) {
    if (mass[u] > 0.0) {
      const double lo = ratio_to_real(left, modulus);
      const cd seg = (unit_phase(md * (lo + len)) - unit_phase(md * lo)) / cd{0.0, 2.0 * kPi * md};
      direct += mass[u] / prefix_mass / len * seg;
    }
    left += step;
    if (left >= modulus) left -= modulus;
  }
  out.direct = direct;
  out.defect = std::max({std::abs(out.direct - out.lifted), std::abs(out.direct - out.wrapped),
                         std::abs(out.lifted - out.wrapped)});
  return out;
}

// -------------------------------------------------------------- proof chain

ProofChainEstimate proof_chain_quantity(const MeasureGen& gen, unsigned k, long m,
                                        std::size_t samples, unsigned level, std::uint64_t seed,
                                        std::size_t max_nodes) {
  require_positive_entropy(gen, "proof_chain_quantity");
  if (m == 0) throw InputError("proof_chain_quantity: m = 0 is not allowed");
  if (samples == 0) throw InputError("proof_chain_quantity: need at least one sample");
  if (level == 0) throw InputError("proof_chain_quantity: level must be >= 1");
  const unsigned a = gen.base();
  const double prescale = std::pow(static_cast<double>(a), static_cast<double>(k));
  const double r = std::pow(static_cast<double>(a), -0.5 * static_cast<double>(k));

  ProofChainEstimate out;
  out.k = k;
  out.m = m;
  out.samples = samples;
  out.level = level;
  out.rhs_first = 1.0 / (std::sqrt(prescale) * std::abs(static_cast<double>(m)) *
                         std::log(static_cast<double>(a)));

  // mu_omega depends on omega only through its last symbol (Markov) or not at
  // all (i.i.d.), so each sampled past maps to a cached state.
  std::vector<unsigned> state_of(samples, 0);
  for (std::size_t s = 0; s < samples; ++s) {
    const std::uint64_t sd = derive_seed(seed, 0x9c, s);
    out.seeds.push_back(sd);
    if (!gen.iid()) {
      Rng rng(sd);
      state_of[s] = sample_past(gen, 1, rng).symbols.front();
    }
  }
  std::map<unsigned, std::pair<double, double>> cache;  // state -> (value, corr)
  for (unsigned st : state_of) {
    if (cache.count(st)) continue;
    const PastWord past = gen.iid() ? PastWord(a, {}) : PastWord(a, {st});
    const auto integral = scaled_sq_integral(
        [&](double xi) { return ft_generator(gen, past, level, xi); },
        SmoothingParams{static_cast<double>(a), m, 1.0, max_nodes}, prescale);
    out.panels = std::max(out.panels, integral.panels);
    const double corr = correlation_integral(conditional_on_past(gen, past, level), r);
    cache[st] = {integral.value, corr};
  }

  double sum = 0.0, sum_corr = 0.0;
  for (unsigned st : state_of) {
    sum += cache[st].first;
    sum_corr += cache[st].second;
  }
  const double count = static_cast<double>(samples);
  out.value = sum / count;
  out.rhs_corr = sum_corr / count;
  double var = 0.0;
  for (unsigned st : state_of) var += (cache[st].first - out.value) * (cache[st].first - out.value);
  out.std_error = samples > 1 ? std::sqrt(var / (count - 1.0) / count) : 0.0;
  out.rhs = out.rhs_first + out.rhs_corr;
  return out;
}

double fit_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("fit_log_slope: need >= 2 paired points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InputError("fit_log_slope: values must be positive");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// -------------------------------------------------------------- experiment

HostReport host_experiment(const HostExperimentConfig& cfg) {
  require_positive_entropy(cfg.gen, "host_experiment");
  if (cfg.b < 2) throw InputError("host_experiment: b must be >= 2");
  if (cfg.samples == 0) throw InputError("host_experiment: samples must be >= 1");
  check_frequencies(cfg.frequencies);
  auto checkpoints = checked_checkpoints(cfg.checkpoints);
  if (checkpoints.back() != cfg.n_max)
    throw InputError("host_experiment: last checkpoint must equal N_max");
  const unsigned a = cfg.gen.base();

  HostReport report{cfg, false, {}, {}, {}, false, false};
  const auto relation = multiplicative_relation(a, cfg.b);
  report.negative_control = relation.dependent;
  report.predicted.assign(cfg.frequencies.size(), std::nullopt);
  if (relation.dependent && relation.b_exponent % relation.a_exponent == 0) {
    // T_b is a power of T_a, so mu-typical orbits equidistribute for mu itself.
    constexpr unsigned kLevel = 20;
    const bool dense_ok = std::pow(static_cast<double>(a), kLevel) <= static_cast<double>(kMaxAtoms);
    std::optional<AdicMeasure> mu;
    if (dense_ok) mu = realize(cfg.gen, kLevel);
    for (std::size_t f = 0; f < cfg.frequencies.size(); ++f) {
      const double xi = static_cast<double>(cfg.frequencies[f]);
      report.predicted[f] = mu ? ft_adic(*mu, xi) : ft_generator(cfg.gen, PastWord(a, {}), kLevel, xi);
    }
  }

  const auto budget = precision_budget(a, cfg.b, cfg.n_max, kDefaultGuardDigits, cfg.k);
  const mpz_class ak = pow_ui(a, cfg.k);
  std::vector<std::optional<WeylAccumulator>> results(cfg.samples);
  std::vector<std::uint64_t> seeds(cfg.samples);
  for (std::size_t i = 0; i < cfg.samples; ++i) seeds[i] = derive_seed(cfg.seed, 0x57, i);
  parallel_for(cfg.samples, [&](std::size_t i) {
    Rng rng(seeds[i]);
    const auto digits = sample_digits(cfg.gen, budget.digits, rng);
    UnitPoint x = make_point_from_digits(a, digits);
    if (cfg.k) x = mul_mod1(x, ak);
    results[i] = weyl_sum(x, cfg.b, cfg.frequencies, checkpoints);
  });
  for (std::size_t i = 0; i < cfg.samples; ++i)
    report.samples.push_back({i, seeds[i], std::move(*results[i])});

  for (std::size_t f = 0; f < cfg.frequencies.size(); ++f) {
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      std::vector<double> mags, gaps;
      cd mean{0.0, 0.0};
      for (const auto& s : report.samples) {
        const cd w = s.weyl.averages()[c][f];
        mags.push_back(std::abs(w));
        mean += w;
        if (report.predicted[f]) gaps.push_back(std::abs(w - *report.predicted[f]));
      }
      CheckpointStats st;
      st.m = cfg.frequencies[f];
      st.n = checkpoints[c];
      st.median = median_of(mags);
      st.p90 = percentile_of(mags, 0.9);
      st.mean = mean / static_cast<double>(cfg.samples);
      st.median_gap = gaps.empty() ? 0.0 : median_of(gaps);
      report.stats.push_back(st);
    }
  }

  report.medians_decrease = true;
  for (std::size_t f = 0; f < cfg.frequencies.size(); ++f) {
    double prev = INFINITY;
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      if (checkpoints[c] < 1000) continue;
      const double med = report.stats[f * checkpoints.size() + c].median;
      if (!(med < prev)) report.medians_decrease = false;
      prev = med;
    }
  }
  report.below_threshold = report.stats[checkpoints.size() - 1].median < cfg.soft_threshold;
  return report;
}

std::string weyl_csv(const HostReport& report) {
  CsvWriter csv({"sample_id", "m", "N", "re", "im", "abs"});
  for (const auto& s : report.samples) {
    const auto& cps = s.weyl.checkpoints();
    for (std::size_t f = 0; f < s.weyl.frequencies().size(); ++f)
      for (std::size_t c = 0; c < cps.size(); ++c) {
        const cd w = s.weyl.averages()[c][f];
        csv.cell(s.id).cell(s.weyl.frequencies()[f]).cell(cps[c]).cell(w.real()).cell(w.imag())
            .cell(std::abs(w)).end_row();
      }
  }
  return csv.str();
}

std::string weyl_dat(const HostReport& report) {
  std::ostringstream out;
  const auto& ms = report.config.frequencies;
  const auto& cps = report.config.checkpoints;
  out << "# N";
  for (long m : ms) out << " median_m" << m << " p90_m" << m;
  out << '\n';
  for (std::size_t c = 0; c < cps.size(); ++c) {
    out << cps[c];
    for (std::size_t f = 0; f < ms.size(); ++f) {
      const auto& st = report.stats[f * cps.size() + c];
      out << ' ' << format_double(st.median) << ' ' << format_double(st.p90);
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::json host_summary(const HostReport& report) {
  const auto& cfg = report.config;
  nlohmann::json j;
  j["version"] = version_string();
  j["label"] = report.negative_control ? "negative-control" : "independent";
  j["config"] = {{"generator", to_json(cfg.gen)}, {"a", cfg.gen.base()},     {"b", cfg.b},
                 {"samples", cfg.samples},        {"N_max", cfg.n_max},      {"frequencies", cfg.frequencies},
                 {"checkpoints", cfg.checkpoints}, {"k", cfg.k},             {"seed", cfg.seed},
                 {"soft_threshold", cfg.soft_threshold}};
  nlohmann::json stats = nlohmann::json::array();
  for (const auto& st : report.stats) {
    nlohmann::json row = {{"m", st.m},         {"N", st.n},   {"median_abs", st.median},
                          {"p90_abs", st.p90}, {"mean", complex_json(st.mean)}};
    if (report.negative_control) row["median_gap_to_prediction"] = st.median_gap;
    stats.push_back(row);
  }
  j["stats"] = stats;
  nlohmann::json predicted = nlohmann::json::array();
  for (const auto& p : report.predicted) predicted.push_back(p ? complex_json(*p) : nlohmann::json());
  j["predicted_limit"] = predicted;
  j["soft"] = {{"medians_decrease", report.medians_decrease},
               {"below_threshold", report.below_threshold}};
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& s : report.samples) seeds.push_back(s.seed);
  j["sample_seeds"] = seeds;
  return j;
}

// ------------------------------------------------------------- controls

cd rational_cycle_average(unsigned long p, unsigned long q, unsigned long b, long m) {
  if (q == 0 || p >= q) throw InputError("rational_cycle_average: need 0 <= p < q");
  std::map<unsigned long, std::size_t> seen;
  std::vector<unsigned long> orbit;
  unsigned long r = p;
  for (;;) {
    r = mpz_class(mpz_class(r) * b % q).get_ui();
    auto [it, fresh] = seen.emplace(r, orbit.size());
    if (!fresh) {
      cd s{0.0, 0.0};
      for (std::size_t i = it->second; i < orbit.size(); ++i)
        s += unit_phase(static_cast<double>(m) * static_cast<double>(orbit[i]) / static_cast<double>(q));
      return s / static_cast<double>(orbit.size() - it->second);
    }
    orbit.push_back(r);
  }
}

RationalControl rational_control(unsigned long p, unsigned long q, unsigned long b, long m,
                                 std::size_t n) {
  const auto budget = precision_budget(2, b, n);
  const UnitPoint x = UnitPoint::from_fraction(2, budget.digits, p, q);
  const std::size_t cps[] = {n};
  const long ms[] = {m};
  RationalControl out;
  out.observed = weyl_sum(x, b, ms, cps).current(0);
  out.predicted = rational_cycle_average(p, q, b, m);
  out.gap = std::abs(out.observed - out.predicted);
  return out;
}

}  // namespace hostlab
