#include "hostlab/ergodic_toolkit.hpp"

#include <cmath>

#include "hostlab/adic_arith.hpp"
#include "hostlab/errors.hpp"
#include "hostlab/parallel.hpp"
#include "hostlab/report.hpp"
#include "hostlab/rng.hpp"

namespace hostlab {

using cd = std::complex<double>;

SymbolicProcess::SymbolicProcess(MeasureGen gen_, std::uint64_t seed_)
    : gen(std::move(gen_)), seed(seed_) {
  if (gen.kind() == GeneratorKind::ifs_digits)
    throw InputError("SymbolicProcess: only bernoulli and markov generators are supported");
}

WindowFunction::WindowFunction(unsigned base, unsigned window, Eigen::VectorXd table)
    : base_(base), window_(window), table_(std::move(table)) {
  if (window == 0) throw InputError("WindowFunction: window must be >= 1");
  if (static_cast<std::size_t>(table_.size()) != atom_count(base, window))
    throw InputError("WindowFunction: table size must be base^window");
  if (!table_.allFinite()) throw InputError("WindowFunction: non-finite table entry");
  bound_ = table_.cwiseAbs().maxCoeff();
}

WindowFunction WindowFunction::constant(unsigned base, unsigned window, double c) {
  return {base, window, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(atom_count(base, window)), c)};
}

WindowFunction WindowFunction::parity(unsigned base) {
  Eigen::VectorXd t(base);
  for (unsigned d = 0; d < base; ++d) t[d] = d % 2 == 0 ? 1.0 : -1.0;
  return {base, 1, std::move(t)};
}

WindowFunction WindowFunction::random(unsigned base, unsigned window, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x77, window));
  Eigen::VectorXd t(static_cast<Eigen::Index>(atom_count(base, window)));
  for (auto& v : t) v = 2.0 * uniform01(rng) - 1.0;
  return {base, window, std::move(t)};
}

double WindowFunction::operator()(std::span<const unsigned> word) const {
  return table_[static_cast<Eigen::Index>(word_index(base_, word.first(window_)))];
}

Eigen::VectorXd window_conditional_expectation(const MeasureGen& gen, const WindowFunction& f) {
  if (gen.base() != f.base()) throw InputError("window_conditional_expectation: base mismatch");
  const Eigen::Index a = gen.base();
  const Eigen::MatrixXd& p = gen.transition();
  // Fold the last digit: level(w_1..w_{i-1}) = sum_d P(w_{i-1}, d) level(w_1..w_{i-1} d).
  Eigen::VectorXd level = f.table();
  for (unsigned i = f.window(); i >= 2; --i) {
    Eigen::Map<const Eigen::MatrixXd> grid(level.data(), a, level.size() / a);
    Eigen::VectorXd next(grid.cols());
    for (Eigen::Index c = 0; c < grid.cols(); ++c) next[c] = p.row(c % a).dot(grid.col(c));
    level.swap(next);
  }
  return p * level;
}

std::vector<double> martingale_avg_experiment(const SymbolicProcess& proc,
                                              const WindowFunction& f, std::size_t n,
                                              std::size_t trials, std::uint64_t stream) {
  if (n == 0) throw InputError("martingale_avg_experiment: N must be >= 1");
  const Eigen::VectorXd cond = window_conditional_expectation(proc.gen, f);
  const unsigned k = f.window();
  return parallel_map<double>(trials, [&](std::size_t t) {
    Rng rng(derive_seed(proc.seed, stream, t));
    const auto x = sample_digits(proc.gen, n + k, rng);  // x[i] = X_{i+1}
    double acc = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
      acc += f(std::span<const unsigned>(x).subspan(i, k)) - cond[x[i - 1]];
    return acc / static_cast<double>(n);
  });
}

double rms(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s / static_cast<double>(values.size()));
}

SplitAverage split_index_average(std::span<const double> values, std::size_t k) {
  if (k == 0) throw InputError("split_index_average: k must be >= 1");
  SplitAverage out;
  out.class_means.assign(k, 0.0);
  out.class_sizes.assign(k, 0);
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t p = (i + 1) % k;  // index n = i + 1
    out.class_means[p] += values[i];
    ++out.class_sizes[p];
    total += values[i];
  }
  if (values.empty()) return out;
  const double count = static_cast<double>(values.size());
  out.full = total / count;
  for (std::size_t p = 0; p < k; ++p) {
    if (out.class_sizes[p] == 0) continue;
    out.class_means[p] /= static_cast<double>(out.class_sizes[p]);
    out.reassembled += static_cast<double>(out.class_sizes[p]) / count * out.class_means[p];
  }
  return out;
}

// ------------------------------------------------------------ time change

void require_irrational(double theta, double max_denominator, double tolerance) {
  if (!std::isfinite(theta)) throw InputError("theta must be finite");
  // Continued-fraction convergents h/k of theta.
  double x = theta;
  double h_prev = 1.0, h = std::floor(x);
  double k_prev = 0.0, k = 1.0;
  for (int iter = 0; iter < 64 && k <= max_denominator; ++iter) {
    if (std::abs(theta - h / k) < tolerance)
      throw InputError("theta = " + format_double(theta) + " is rational at working precision (" +
                       format_double(h) + "/" + format_double(k) + ")");
    const double frac = x - std::floor(x);
    if (frac == 0.0) break;
    x = 1.0 / frac;
    const double q = std::floor(x);
    const double h_next = q * h + h_prev;
    const double k_next = q * k + k_prev;
    h_prev = h;
    h = h_next;
    k_prev = k;
    k = k_next;
  }
}

cd DigitTest::operator()(std::span<const unsigned> digits) const {
  return table[word_index(base, digits.first(depth))];
}

double DigitTest::bound() const {
  double b = 0.0;
  for (const auto& v : table) b = std::max(b, std::abs(v));
  return b;
}

DigitTest constant_test(unsigned base, cd c) {
  return {"const", base, 1, std::vector<cd>(base, c)};
}

DigitTest first_digit_phase(unsigned base) {
  DigitTest g{"e1_first_digit", base, 1, {}};
  for (unsigned d = 0; d < base; ++d)
    g.table.push_back(unit_phase(static_cast<double>(d) / static_cast<double>(base)));
  return g;
}

DigitTest two_digit_table(unsigned base, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x2d, base));
  DigitTest g{"table2", base, 2, {}};
  for (std::size_t i = 0; i < std::size_t{base} * base; ++i) g.table.emplace_back(2.0 * uniform01(rng) - 1.0);
  return g;
}

cd stationary_mean(const MeasureGen& gen, const DigitTest& g) {
  const unsigned a = gen.base();
  if (g.base != a || g.table.size() != atom_count(a, g.depth)) throw InputError("stationary_mean: base mismatch");
  // Marginal of the first `depth` digits.
  Eigen::VectorXd w = gen.initial();
  for (unsigned j = 1; j < g.depth; ++j) {
    Eigen::VectorXd next(w.size() * a);
    for (Eigen::Index i = 0; i < w.size(); ++i)
      for (unsigned d = 0; d < a; ++d) next[i * a + d] = w[i] * gen.transition()(i % a, d);
    w.swap(next);
  }
  cd s = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) s += w[i] * g.table[static_cast<std::size_t>(i)];
  return s;
}

JointEquidistResult time_change_joint_experiment(double theta, double beta, const MeasureGen& gen,
                                                 std::span<const long> js,
                                                 std::span<const DigitTest> tests, std::size_t n,
                                                 std::size_t samples, std::uint64_t seed) {
  require_irrational(theta);
  if (!(beta > 0.0)) throw InputError("time_change_joint_experiment: beta must be positive");
  if (n == 0 || samples == 0) throw InputError("time_change_joint_experiment: N, M must be >= 1");
  for (const auto& g : tests)
    if (g.base != gen.base() || g.table.size() != atom_count(gen.base(), g.depth))
      throw InputError("time_change_joint_experiment: test '" + g.id + "' has the wrong base");
  unsigned depth = 1;
  for (const auto& g : tests) depth = std::max(depth, g.depth);
  const auto last_shift = static_cast<std::size_t>(std::floor(beta * static_cast<double>(n)));

  const std::size_t cells = js.size() * tests.size();
  // per_sample[s * cells + c]
  std::vector<cd> per_sample(samples * cells);
  parallel_for(samples, [&](std::size_t s) {
    Rng rng(derive_seed(seed, 0x7c, s));
    const auto x = sample_digits(gen, last_shift + depth, rng);
    std::vector<cd> acc(cells, 0.0);
    for (std::size_t t = 1; t <= n; ++t) {
      const auto shift = static_cast<std::size_t>(std::floor(beta * static_cast<double>(t)));
      const std::span<const unsigned> window(x.data() + shift, depth);
      for (std::size_t ji = 0; ji < js.size(); ++ji) {
        const cd rot = unit_phase(static_cast<double>(js[ji]) * static_cast<double>(t) * theta);
        for (std::size_t gi = 0; gi < tests.size(); ++gi) acc[ji * tests.size() + gi] += rot * tests[gi](window);
      }
    }
    for (std::size_t c = 0; c < cells; ++c) per_sample[s * cells + c] = acc[c] / static_cast<double>(n);
  });

  JointEquidistResult out{theta, beta, n, samples, {}};
  const double m = static_cast<double>(samples);
  for (std::size_t ji = 0; ji < js.size(); ++ji) {
    for (std::size_t gi = 0; gi < tests.size(); ++gi) {
      const std::size_t c = ji * tests.size() + gi;
      cd mean = 0.0;
      for (std::size_t s = 0; s < samples; ++s) mean += per_sample[s * cells + c];
      mean /= m;
      double var = 0.0;
      for (std::size_t s = 0; s < samples; ++s) var += std::norm(per_sample[s * cells + c] - mean);
      const double se = samples > 1 ? std::sqrt(var / (m - 1.0) / m) : 0.0;

      JointEntry e;
      e.j = js[ji];
      e.g_id = tests[gi].id;
      e.value = mean;
      e.predicted = e.j == 0 ? stationary_mean(gen, tests[gi]) : cd{0.0, 0.0};
      const double g_norm = tests[gi].bound();
      const double eps_n =
          e.j == 0 ? g_norm / static_cast<double>(n)
                   : g_norm / (2.0 * static_cast<double>(n) *
                               dist_to_integer(static_cast<double>(e.j) * theta));
      e.tolerance = 5.0 / std::sqrt(m) + eps_n;
      const double gap = std::abs(e.value - e.predicted);
      e.z_score = se > 0.0 ? gap / se : (gap == 0.0 ? 0.0 : INFINITY);
      e.ok = gap <= e.tolerance;
      out.entries.push_back(std::move(e));
    }
  }
  return out;
}

std::string martingale_csv(std::span<const double> values, std::size_t n) {
  CsvWriter csv({"trial", "N", "value"});
  for (std::size_t t = 0; t < values.size(); ++t) csv.cell(t).cell(n).cell(values[t]).end_row();
  return csv.str();
}

std::string joint_csv(const JointEquidistResult& result) {
  CsvWriter csv({"j", "g_id", "re", "im", "z_score"});
  for (const auto& e : result.entries)
    csv.cell(e.j).cell(e.g_id).cell(e.value.real()).cell(e.value.imag()).cell(e.z_score).end_row();
  return csv.str();
}

}  // namespace hostlab
