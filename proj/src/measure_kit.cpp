#include "hostlab/measure_kit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hostlab/errors.hpp"
#include "hostlab/parallel.hpp"
#include "hostlab/report.hpp"

namespace hostlab {

namespace {

void check_probability_vector(const Eigen::VectorXd& p, const char* what) {
  if (p.size() == 0) throw InputError(std::string(what) + ": empty probability vector");
  if ((p.array() < 0.0).any() || !p.allFinite())
    throw InputError(std::string(what) + ": negative or non-finite probability");
  if (std::abs(p.sum() - 1.0) > kProbabilityTolerance)
    throw InputError(std::string(what) + ": probabilities do not sum to 1");
}

void check_digits(unsigned base, std::span<const unsigned> digits, const char* what) {
  for (unsigned d : digits)
    if (d >= base)
      throw InputError(std::string(what) + ": digit " + std::to_string(d) +
                       " out of range for base " + std::to_string(base));
}

// Extends a level-n weight vector one digit using the transition rows.
Eigen::VectorXd extend_level(const Eigen::VectorXd& w, const Eigen::MatrixXd& transition) {
  const auto a = transition.rows();
  Eigen::VectorXd out(w.size() * a);
  Eigen::Map<Eigen::MatrixXd> blocks(out.data(), a, w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k)
    blocks.col(k) = w[k] * transition.row(k % a).transpose();
  return out;
}

// Chain started from `first` (law of digit 1), extended to `level` digits.
AdicMeasure chain_measure(unsigned base, const Eigen::VectorXd& first,
                          const Eigen::MatrixXd& transition, unsigned level) {
  if (level == 0) return AdicMeasure(base, 0, Eigen::VectorXd::Ones(1));
  atom_count(base, level);
  Eigen::VectorXd w = first;
  for (unsigned j = 1; j < level; ++j) w = extend_level(w, transition);
  return AdicMeasure(base, level, std::move(w));
}

// P(|d + D| < rho) with D the difference of two independent U(0,1) variables.
double band_probability(double d, double rho) {
  auto cdf = [](double s) {
    if (s <= -1.0) return 0.0;
    if (s <= 0.0) return 0.5 * (1.0 + s) * (1.0 + s);
    if (s < 1.0) return 1.0 - 0.5 * (1.0 - s) * (1.0 - s);
    return 1.0;
  };
  return cdf(rho - d) - cdf(-rho - d);
}

}  // namespace

std::string to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::bernoulli:
      return "bernoulli";
    case GeneratorKind::markov:
      return "markov";
    case GeneratorKind::ifs_digits:
      return "ifs_digits";
  }
  return "unknown";
}

// -------------------------------------------------------------- MeasureGen

MeasureGen MeasureGen::bernoulli(Eigen::VectorXd p) {
  MeasureGen g;
  g.kind_ = GeneratorKind::bernoulli;
  g.base_ = static_cast<unsigned>(p.size());
  g.initial_ = std::move(p);
  g.validate();
  g.transition_ = g.initial_.transpose().replicate(g.base_, 1);
  return g;
}

MeasureGen MeasureGen::markov(Eigen::MatrixXd transition) {
  const auto a = transition.rows();
  if (a < 2 || transition.cols() != a) throw InputError("markov: P must be square, size >= 2");
  // pi (P - I) = 0 together with sum(pi) = 1, solved in the least-squares sense.
  Eigen::MatrixXd system(a + 1, a);
  system.topRows(a) = transition.transpose() - Eigen::MatrixXd::Identity(a, a);
  system.row(a).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(a + 1);
  rhs[a] = 1.0;
  Eigen::VectorXd pi = system.colPivHouseholderQr().solve(rhs);
  pi = pi.cwiseMax(0.0);
  pi /= pi.sum();
  return markov(std::move(transition), std::move(pi));
}

MeasureGen MeasureGen::markov(Eigen::MatrixXd transition, Eigen::VectorXd stationary) {
  MeasureGen g;
  g.kind_ = GeneratorKind::markov;
  g.base_ = static_cast<unsigned>(transition.rows());
  g.transition_ = std::move(transition);
  g.initial_ = std::move(stationary);
  g.validate();
  return g;
}

MeasureGen MeasureGen::ifs_digits(unsigned base, std::vector<unsigned> digits,
                                  Eigen::VectorXd weights) {
  if (base < 2) throw InputError("ifs_digits: base must be >= 2");
  if (digits.empty() || static_cast<Eigen::Index>(digits.size()) != weights.size())
    throw InputError("ifs_digits: need one weight per digit");
  check_digits(base, digits, "ifs_digits");
  auto sorted = digits;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InputError("ifs_digits: repeated digit");
  check_probability_vector(weights, "ifs_digits");

  MeasureGen g;
  g.kind_ = GeneratorKind::ifs_digits;
  g.base_ = base;
  g.initial_ = Eigen::VectorXd::Zero(base);
  for (std::size_t i = 0; i < digits.size(); ++i)
    g.initial_[digits[i]] = weights[static_cast<Eigen::Index>(i)];
  g.digit_set_ = std::move(digits);
  g.digit_weights_ = std::move(weights);
  g.transition_ = g.initial_.transpose().replicate(base, 1);
  return g;
}

void MeasureGen::validate() const {
  if (base_ < 2) throw InputError("generator base must be >= 2");
  check_probability_vector(initial_, "generator");
  if (kind_ != GeneratorKind::markov) return;
  if (transition_.rows() != base_ || transition_.cols() != base_ || initial_.size() != base_)
    throw InputError("markov: dimension mismatch");
  if ((transition_.array() < 0.0).any() || !transition_.allFinite())
    throw InputError("markov: negative or non-finite transition probability");
  const Eigen::VectorXd row_sums = transition_.rowwise().sum();
  if ((row_sums.array() - 1.0).abs().maxCoeff() > kProbabilityTolerance)
    throw InputError("markov: rows of P must sum to 1");
  const Eigen::RowVectorXd drift = initial_.transpose() * transition_ - initial_.transpose();
  if (drift.cwiseAbs().maxCoeff() > kProbabilityTolerance)
    throw InputError("markov: stationary vector does not satisfy pi P = pi");
}

nlohmann::json to_json(const MeasureGen& gen) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.begin(), v.end()); };
  nlohmann::json j{{"kind", to_string(gen.kind())}, {"a", gen.base()}};
  switch (gen.kind()) {
    case GeneratorKind::bernoulli:
      j["p"] = vec(gen.initial());
      break;
    case GeneratorKind::markov: {
      std::vector<std::vector<double>> rows;
      for (Eigen::Index i = 0; i < gen.transition().rows(); ++i)
        rows.push_back(vec(gen.transition().row(i).transpose()));
      j["P"] = rows;
      j["pi"] = vec(gen.initial());
      break;
    }
    case GeneratorKind::ifs_digits:
      j["digits"] = gen.digit_set();
      j["weights"] = vec(gen.digit_weights());
      break;
  }
  return j;
}

MeasureGen measure_gen_from_json(const nlohmann::json& j) {
  auto vec = [](const nlohmann::json& arr) {
    const auto v = arr.get<std::vector<double>>();
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  try {
    const auto kind = j.at("kind").get<std::string>();
    MeasureGen gen = [&] {
      if (kind == "bernoulli") return MeasureGen::bernoulli(vec(j.at("p")));
      if (kind == "ifs_digits")
        return MeasureGen::ifs_digits(j.at("a").get<unsigned>(),
                                      j.at("digits").get<std::vector<unsigned>>(),
                                      vec(j.at("weights")));
      if (kind == "markov") {
        const auto rows = j.at("P").get<std::vector<std::vector<double>>>();
        const auto n = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd p(n, n);
        for (Eigen::Index r = 0; r < n; ++r) {
          if (static_cast<Eigen::Index>(rows[r].size()) != n)
            throw InputError("markov: P must be square");
          for (Eigen::Index c = 0; c < n; ++c) p(r, c) = rows[r][c];
        }
        if (j.contains("pi")) return MeasureGen::markov(std::move(p), vec(j.at("pi")));
        return MeasureGen::markov(std::move(p));
      }
      throw InputError("unknown generator kind '" + kind + "'");
    }();
    if (j.contains("a") && j.at("a").get<unsigned>() != gen.base())
      throw InputError("generator field 'a' disagrees with its parameters");
    return gen;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("generator config: ") + e.what());
  }
}

// ------------------------------------------------------------- AdicMeasure

std::size_t atom_count(unsigned base, unsigned level) {
  if (base < 2) throw InputError("base must be >= 2");
  std::size_t n = 1;
  for (unsigned j = 0; j < level; ++j) {
    n *= base;
    if (n > kMaxAtoms)
      throw ResourceError("level " + std::to_string(level) + " in base " + std::to_string(base) +
                          " exceeds the 2^24 atom budget");
  }
  return n;
}

std::size_t word_index(unsigned base, std::span<const unsigned> word) {
  std::size_t k = 0;
  for (unsigned d : word) k = k * base + d;
  return k;
}

std::vector<unsigned> index_word(unsigned base, unsigned level, std::size_t index) {
  std::vector<unsigned> w(level);
  for (unsigned j = level; j-- > 0;) {
    w[j] = static_cast<unsigned>(index % base);
    index /= base;
  }
  return w;
}

AdicMeasure::AdicMeasure(unsigned base, unsigned level, Eigen::VectorXd weights)
    : base_(base), level_(level), weights_(std::move(weights)) {
  if (static_cast<std::size_t>(weights_.size()) != atom_count(base, level))
    throw InputError("AdicMeasure: weight vector length must be base^level");
  if ((weights_.array() < 0.0).any() || !weights_.allFinite())
    throw InputError("AdicMeasure: weights must be finite and nonnegative");
  if (std::abs(weights_.sum() - 1.0) > kProbabilityTolerance)
    throw InputError("AdicMeasure: weights must sum to 1");
  for (Eigen::Index k = 0; k < weights_.size(); ++k)
    if (weights_[k] > 0.0) support_.push_back(static_cast<std::size_t>(k));
}

AdicMeasure AdicMeasure::uniform(unsigned base, unsigned level) {
  const auto n = atom_count(base, level);
  return AdicMeasure(base, level,
                     Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n)));
}

AdicMeasure AdicMeasure::point_mass(unsigned base, std::span<const unsigned> digits) {
  check_digits(base, digits, "point_mass");
  const auto level = static_cast<unsigned>(digits.size());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(atom_count(base, level)));
  w[static_cast<Eigen::Index>(word_index(base, digits))] = 1.0;
  return AdicMeasure(base, level, std::move(w));
}

double AdicMeasure::cell_width() const {
  return std::pow(static_cast<double>(base_), -static_cast<double>(level_));
}

double AdicMeasure::mass(std::span<const unsigned> word) const {
  if (word.size() > level_) throw InputError("mass: word longer than the level");
  check_digits(base_, word, "mass");
  const auto block = atom_count(base_, level_ - static_cast<unsigned>(word.size()));
  const auto start = word_index(base_, word) * block;
  return weights_.segment(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(block)).sum();
}

AdicMeasure refine(const AdicMeasure& mu) {
  const auto a = static_cast<Eigen::Index>(mu.base());
  atom_count(mu.base(), mu.level() + 1);
  Eigen::VectorXd out(mu.weights().size() * a);
  Eigen::Map<Eigen::MatrixXd>(out.data(), a, mu.weights().size()) =
      (mu.weights() / static_cast<double>(a)).transpose().replicate(a, 1);
  return AdicMeasure(mu.base(), mu.level() + 1, std::move(out));
}

AdicMeasure coarsen(const AdicMeasure& mu) {
  if (mu.level() == 0) throw InputError("coarsen: level-0 measure has no parent");
  const auto a = static_cast<Eigen::Index>(mu.base());
  Eigen::Map<const Eigen::MatrixXd> children(mu.weights().data(), a, mu.weights().size() / a);
  return AdicMeasure(mu.base(), mu.level() - 1, children.colwise().sum().transpose());
}

PastWord::PastWord(unsigned base_, std::vector<unsigned> symbols_)
    : base(base_), symbols(std::move(symbols_)) {
  if (base < 2) throw InputError("PastWord: base must be >= 2");
  check_digits(base, symbols, "PastWord");
}

PastWord PastWord::extended(std::span<const unsigned> digits) const {
  check_digits(base, digits, "PastWord::extended");
  std::vector<unsigned> out(digits.rbegin(), digits.rend());
  out.insert(out.end(), symbols.begin(), symbols.end());
  PastWord p;
  p.base = base;
  p.symbols = std::move(out);
  return p;
}

CylinderWord::CylinderWord(unsigned base_, std::vector<unsigned> digits_)
    : base(base_), digits(std::move(digits_)) {
  if (base < 2) throw InputError("CylinderWord: base must be >= 2");
  check_digits(base, digits, "CylinderWord");
}

// -------------------------------------------------------------- operations

AdicMeasure realize(const MeasureGen& gen, unsigned level) {
  if (level < 1) throw InputError("realize: level must be >= 1");
  return chain_measure(gen.base(), gen.initial(), gen.transition(), level);
}

AdicMeasure cylinder_condition(const AdicMeasure& mu, const CylinderWord& word) {
  if (word.base != mu.base()) throw InputError("cylinder_condition: base mismatch");
  if (word.length() > mu.level()) throw InputError("cylinder_condition: word longer than level");
  const unsigned rest = mu.level() - static_cast<unsigned>(word.length());
  const auto block = static_cast<Eigen::Index>(atom_count(mu.base(), rest));
  const auto start = static_cast<Eigen::Index>(word_index(mu.base(), word.digits)) * block;
  const auto segment = mu.weights().segment(start, block);
  const double mass = segment.sum();
  if (!(mass > 0.0)) {
    std::string name;
    for (unsigned d : word.digits) name += std::to_string(d);
    throw NullCylinderError("cylinder [" + name + "] has zero mass");
  }
  return AdicMeasure(mu.base(), rest, segment / mass);
}

AdicMeasure conditional_on_past(const MeasureGen& gen, const PastWord& past, unsigned level) {
  if (past.base != gen.base()) throw InputError("conditional_on_past: base mismatch");
  if (gen.iid()) return chain_measure(gen.base(), gen.initial(), gen.transition(), level);
  if (past.empty()) throw InputError("conditional_on_past: Markov generator needs a nonempty past");
  const Eigen::VectorXd first = gen.transition().row(past.symbols.front()).transpose();
  return chain_measure(gen.base(), first, gen.transition(), level);
}

AdicMeasure shift_push(const AdicMeasure& mu, unsigned j) {
  if (j > mu.level()) throw InputError("shift_push: j exceeds the level");
  const auto rows = static_cast<Eigen::Index>(atom_count(mu.base(), mu.level() - j));
  Eigen::Map<const Eigen::MatrixXd> grid(mu.weights().data(), rows, mu.weights().size() / rows);
  return AdicMeasure(mu.base(), mu.level() - j, grid.rowwise().sum());
}

double entropy(const MeasureGen& gen) {
  auto h = [](const Eigen::VectorXd& p) {
    double s = 0.0;
    for (double v : p)
      if (v > 0.0) s -= v * std::log(v);
    return s;
  };
  if (gen.iid()) return h(gen.initial());
  double s = 0.0;
  for (Eigen::Index i = 0; i < gen.transition().rows(); ++i)
    s += gen.initial()[i] * h(gen.transition().row(i).transpose());
  return s;
}

double correlation_integral(const AdicMeasure& mu, double r) {
  if (!(r > 0.0)) throw InputError("correlation_integral: r must be positive");
  if (r >= 1.0) return 1.0;
  const double h = mu.cell_width();
  if (h > r / kCorrelationGuard)
    throw ResolutionError("correlation_integral: level " + std::to_string(mu.level()) +
                          " too coarse for r=" + format_double(r) + " (need a^-level <= r/16)");

  const Eigen::VectorXd& w = mu.weights();
  const auto n = w.size();
  const double rho = r / h;
  // Offsets |d| <= full are covered with probability one; the next few are
  // partial overlaps weighted by band_probability.
  const auto full = static_cast<Eigen::Index>(std::floor(rho - 1.0));
  const auto reach = static_cast<Eigen::Index>(std::ceil(rho + 1.0));

  Eigen::VectorXd prefix(n + 1);
  prefix[0] = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + w[i];

  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (w[i] == 0.0) continue;
    const auto lo = std::max<Eigen::Index>(0, i - full);
    const auto hi = std::min<Eigen::Index>(n, i + full + 1);
    total += w[i] * (prefix[hi] - prefix[lo]);
  }
  for (Eigen::Index d = full + 1; d <= reach && d < n; ++d) {
    const double g = band_probability(static_cast<double>(d), rho);
    if (g == 0.0) continue;
    const double c = w.head(n - d).dot(w.tail(n - d));
    total += 2.0 * g * c;
  }
  return std::clamp(total, 0.0, 1.0);
}

double equivariance_defect(const MeasureGen& gen, const PastWord& past, const CylinderWord& x,
                           unsigned level) {
  if (x.length() > level) throw InputError("verify_equivariance: cylinder longer than level");
  const AdicMeasure lhs = cylinder_condition(conditional_on_past(gen, past, level), x);
  const AdicMeasure rhs = conditional_on_past(gen, past.extended(x.digits),
                                              level - static_cast<unsigned>(x.length()));
  return (lhs.weights() - rhs.weights()).cwiseAbs().maxCoeff();
}

bool verify_equivariance(const MeasureGen& gen, const PastWord& past, const CylinderWord& x,
                         unsigned level) {
  return equivariance_defect(gen, past, x, level) <= 1e-12;
}

std::vector<EquivarianceRow> equivariance_battery(const MeasureGen& gen, const std::string& id,
                                                  std::size_t pairs, unsigned level,
                                                  std::uint64_t seed) {
  if (level < 2) throw InputError("equivariance_battery: level must be >= 2");
  std::vector<EquivarianceRow> rows(pairs);
  parallel_for(pairs, [&](std::size_t i) {
    Rng rng(derive_seed(seed, 0xe8, i));
    const std::size_t past_len = 1 + static_cast<std::size_t>(uniform01(rng) * 6.0);
    const std::size_t cyl_len = 1 + static_cast<std::size_t>(uniform01(rng) * (level - 1));
    const PastWord past = sample_past(gen, past_len, rng);
    const CylinderWord x(gen.base(), sample_digits_given_past(gen, past, cyl_len, rng));
    const double defect = equivariance_defect(gen, past, x, level);
    rows[i] = {id, i, past_len, cyl_len, defect, defect <= 1e-12};
  });
  return rows;
}

std::string equivariance_csv(std::span<const EquivarianceRow> rows) {
  CsvWriter csv({"gen_id", "pair", "past_length", "cylinder_length", "defect", "ok"});
  for (const auto& r : rows)
    csv.cell(r.gen_id).cell(r.pair).cell(r.past_length).cell(r.cylinder_length).cell(r.defect)
        .cell(r.ok).end_row();
  return csv.str();
}

// ---------------------------------------------------------------- sampling

std::size_t sample_categorical(const Eigen::Ref<const Eigen::VectorXd>& p, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    acc += p[i];
    last_positive = static_cast<std::size_t>(i);
    if (u < acc) return last_positive;
  }
  return last_positive;
}

std::vector<unsigned> sample_digits(const MeasureGen& gen, std::size_t count, Rng& rng) {
  std::vector<unsigned> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = static_cast<unsigned>(
        i == 0 ? sample_categorical(gen.initial(), rng)
               : sample_categorical(gen.transition().row(out[i - 1]).transpose(), rng));
  }
  return out;
}

std::vector<unsigned> sample_digits_given_past(const MeasureGen& gen, const PastWord& past,
                                               std::size_t count, Rng& rng) {
  if (gen.iid()) return sample_digits(gen, count, rng);
  if (past.empty()) throw InputError("sample_digits_given_past: Markov generator needs a past");
  std::vector<unsigned> out(count);
  unsigned prev = past.symbols.front();
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = static_cast<unsigned>(sample_categorical(gen.transition().row(prev).transpose(), rng));
    prev = out[i];
  }
  return out;
}

PastWord sample_past(const MeasureGen& gen, std::size_t length, Rng& rng) {
  auto forward = sample_digits(gen, length, rng);
  std::reverse(forward.begin(), forward.end());
  return PastWord(gen.base(), std::move(forward));
}

PointSampler::PointSampler(const AdicMeasure& mu) : width_(mu.cell_width()), atoms_(mu.support()) {
  cumulative_.reserve(atoms_.size());
  double acc = 0.0;
  for (auto k : atoms_) {
    acc += mu.weights()[static_cast<Eigen::Index>(k)];
    cumulative_.push_back(acc);
  }
}

double PointSampler::operator()(Rng& rng) const {
  const double u = uniform01(rng) * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  const auto k = atoms_[static_cast<std::size_t>(it - cumulative_.begin())];
  return (static_cast<double>(k) + uniform01(rng)) * width_;
}

std::string to_csv(const AdicMeasure& mu) {
  CsvWriter csv({"k", "weight"});
  for (Eigen::Index k = 0; k < mu.weights().size(); ++k)
    csv.cell(static_cast<long long>(k)).cell(mu.weights()[k]).end_row();
  return csv.str();
}

}  // namespace hostlab
