#include "hostlab/fourier_lab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hostlab/adic_arith.hpp"
#include "hostlab/errors.hpp"
#include "hostlab/parallel.hpp"
#include "hostlab/quadrature.hpp"
#include "hostlab/report.hpp"

namespace hostlab {

using cd = std::complex<double>;

const GaussLegendreRule<double>& gauss_legendre_16() {
  static const GaussLegendreRule<double> rule = gauss_legendre<double>(16);
  return rule;
}

namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double u) { return std::abs(u) < 1e-8 ? 1.0 - u * u / 6.0 : std::sin(u) / u; }

// phases(j-1, d) = e(xi d a^-j), j = 1..level.
Eigen::MatrixXcd digit_phases(unsigned base, unsigned level, double xi) {
  Eigen::MatrixXcd phases(level, base);
  double scale = 1.0;
  for (unsigned j = 0; j < level; ++j) {
    scale /= static_cast<double>(base);
    for (unsigned d = 0; d < base; ++d) phases(j, d) = unit_phase(xi * d * scale);
  }
  return phases;
}

// sum_k w_k e(xi k h) by contracting one digit at a time, finest first.
cd dense_sum(const AdicMeasure& mu, const Eigen::MatrixXcd& phases) {
  const auto a = static_cast<Eigen::Index>(mu.base());
  const unsigned n = mu.level();
  if (n == 0) return mu.weights()[0];
  const Eigen::VectorXcd last = phases.row(n - 1).transpose();
  Eigen::Map<const Eigen::MatrixXd> finest(mu.weights().data(), a, mu.weights().size() / a);
  Eigen::VectorXcd level(finest.cols());
  level.real() = finest.transpose() * last.real();
  level.imag() = finest.transpose() * last.imag();
  for (unsigned j = n - 1; j >= 1; --j) {
    Eigen::Map<const Eigen::MatrixXcd> grid(level.data(), a, level.size() / a);
    Eigen::VectorXcd next = grid.transpose() * phases.row(j - 1).transpose();
    level.swap(next);
  }
  return level[0];
}

// Same sum over the support only; shared digit prefixes reuse partial
// phase products.
cd sparse_sum(const AdicMeasure& mu, const Eigen::MatrixXcd& phases) {
  const unsigned n = mu.level();
  const std::size_t a = mu.base();
  if (n == 0) return mu.weights()[0];
  std::vector<std::size_t> power(n + 1, 1);
  for (unsigned t = 1; t <= n; ++t) power[t] = power[t - 1] * a;
  std::vector<cd> prefix(n + 1, cd{1.0, 0.0});
  cd total{0.0, 0.0};
  bool first = true;
  std::size_t prev = 0;
  for (std::size_t k : mu.support()) {
    unsigned changed = n;
    if (!first) {
      changed = 1;
      while (changed < n && k / power[changed] != prev / power[changed]) ++changed;
    }
    for (unsigned j = n - changed + 1; j <= n; ++j) {
      const auto d = static_cast<Eigen::Index>((k / power[n - j]) % a);
      prefix[j] = prefix[j - 1] * phases(j - 1, d);
    }
    total += mu.weights()[static_cast<Eigen::Index>(k)] * prefix[n];
    prev = k;
    first = false;
  }
  return total;
}

// int_p^q e(m x) dx
cd segment_integral(double p, double q, long m) {
  if (m == 0) return {q - p, 0.0};
  const double w = 2.0 * kPi * static_cast<double>(m);
  return (unit_phase(static_cast<double>(m) * q) - unit_phase(static_cast<double>(m) * p)) /
         cd{0.0, w};
}

}  // namespace

cd ft_adic(const AdicMeasure& mu, double xi, FtPath path) {
  const double h = mu.cell_width();
  const auto phases = digit_phases(mu.base(), mu.level(), xi);
  bool sparse = path == FtPath::sparse;
  if (path == FtPath::automatic) sparse = mu.support().size() * 4 < mu.size();
  const cd sum = sparse ? sparse_sum(mu, phases) : dense_sum(mu, phases);
  return sum * unit_phase(0.5 * xi * h) * sinc(kPi * xi * h);
}

cd ft_generator(const MeasureGen& gen, const PastWord& past, unsigned level, double xi) {
  if (level == 0) throw InputError("ft_generator: level must be >= 1");
  const unsigned a = gen.base();
  Eigen::VectorXd first = gen.initial();
  if (!gen.iid()) {
    if (past.empty()) {
      first = gen.initial();
    } else {
      if (past.symbols.front() >= a) throw InputError("ft_generator: past symbol out of range");
      first = gen.transition().row(past.symbols.front()).transpose();
    }
  }
  const auto phases = digit_phases(a, level, xi);
  Eigen::VectorXcd v = first.cast<cd>().cwiseProduct(phases.row(0).transpose());
  const Eigen::MatrixXcd step = gen.transition().cast<cd>();
  for (unsigned j = 1; j < level; ++j) {
    Eigen::VectorXcd next = (step.transpose() * v).cwiseProduct(phases.row(j).transpose());
    v.swap(next);
  }
  const double h = std::pow(static_cast<double>(a), -static_cast<double>(level));
  return v.sum() * unit_phase(0.5 * xi * h) * sinc(kPi * xi * h);
}

cd ft_scaled(const AdicMeasure& mu, double t, double m) {
  if (!(t > 0.0)) throw InputError("ft_scaled: scale t must be positive");
  return ft_adic(mu, m * t);
}

cd ft_affine(const AdicMeasure& mu, double scale, double shift, double xi) {
  return unit_phase(xi * shift) * ft_adic(mu, xi * scale);
}

cd ft_wrapped(const AdicMeasure& mu, double scale, double shift, long m) {
  if (!(scale > 0.0)) throw InputError("ft_wrapped: scale must be positive");
  const double h = mu.cell_width();
  const double len = scale * h;
  cd total{0.0, 0.0};
  for (std::size_t k : mu.support()) {
    const double lo = shift + scale * static_cast<double>(k) * h;
    const double hi = lo + len;
    const double first_cut = std::floor(lo) + 1.0;
    cd piece{0.0, 0.0};
    if (hi <= first_cut) {
      const double base = std::floor(lo);
      piece = segment_integral(lo - base, hi - base, m);
    } else {
      // Head [lo, first_cut), whole periods (zero unless m = 0), tail.
      const double last_cut = std::floor(hi);
      piece = segment_integral(lo - (first_cut - 1.0), 1.0, m);
      if (m == 0) piece += cd{last_cut - first_cut, 0.0};
      piece += segment_integral(0.0, hi - last_cut, m);
    }
    total += mu.weights()[static_cast<Eigen::Index>(k)] / len * piece;
  }
  return total;
}

// ------------------------------------------------------------ C1Density

C1Density::C1Density(Shape shape, double lo, double hi) : shape_(shape), lo_(lo), hi_(hi) {
  if (!(hi > lo)) throw InputError("C1Density: need lo < hi");
}

C1Density C1Density::parabolic(double lo, double hi) { return {Shape::parabolic, lo, hi}; }
C1Density C1Density::raised_cosine(double lo, double hi) { return {Shape::raised_cosine, lo, hi}; }
C1Density C1Density::linear_ramp(double lo, double hi) { return {Shape::linear_ramp, lo, hi}; }

double C1Density::operator()(double x) const {
  const double w = width();
  switch (shape_) {
    case Shape::parabolic:
      return 6.0 * (x - lo_) * (hi_ - x) / (w * w * w);
    case Shape::raised_cosine:
      return (1.0 + std::cos(2.0 * kPi * (x - lo_) / w)) / w;
    case Shape::linear_ramp:
      return 2.0 * (x - lo_) / (w * w);
  }
  return 0.0;
}

double C1Density::derivative(double x) const {
  const double w = width();
  switch (shape_) {
    case Shape::parabolic:
      return 6.0 * (hi_ + lo_ - 2.0 * x) / (w * w * w);
    case Shape::raised_cosine:
      return -2.0 * kPi * std::sin(2.0 * kPi * (x - lo_) / w) / (w * w);
    case Shape::linear_ramp:
      return 2.0 / (w * w);
  }
  return 0.0;
}

double C1Density::sup_norm() const {
  const double w = width();
  switch (shape_) {
    case Shape::parabolic:
      return 1.5 / w;
    case Shape::raised_cosine:
    case Shape::linear_ramp:
      return 2.0 / w;
  }
  return 0.0;
}

double C1Density::derivative_sup_norm() const {
  const double w2 = width() * width();
  switch (shape_) {
    case Shape::parabolic:
      return 6.0 / w2;
    case Shape::raised_cosine:
      return 2.0 * kPi / w2;
    case Shape::linear_ramp:
      return 2.0 / w2;
  }
  return 0.0;
}

std::string C1Density::name() const {
  std::string s;
  switch (shape_) {
    case Shape::parabolic:
      s = "parabolic";
      break;
    case Shape::raised_cosine:
      s = "raised_cosine";
      break;
    case Shape::linear_ramp:
      s = "linear_ramp";
      break;
  }
  return s + "[" + format_double(lo_) + "," + format_double(hi_) + "]";
}

cd density_transform(const C1Density& f, double t, double tol) {
  bool converged = true;
  const cd value = integrate_adaptive([&](double x) { return f(x) * unit_phase(t * x); }, f.lo(),
                                      f.hi(), tol, &converged);
  if (!converged) throw NumericalError("density_transform: adaptive quadrature did not converge");
  return value;
}

C1BoundCheck c1_bound_check(const C1Density& f, double t, double slack) {
  if (t == 0.0) throw InputError("c1_bound_check: t must be nonzero");
  C1BoundCheck out;
  out.lhs = std::abs(density_transform(f, t));
  out.rhs = (f.sup_norm() + f.width() * f.derivative_sup_norm()) / (kPi * std::abs(t));
  out.ok = out.lhs <= out.rhs + slack;
  return out;
}

std::vector<C1Density> default_density_battery() {
  return {C1Density::parabolic(0.0, 1.0), C1Density::raised_cosine(0.0, 1.0),
          C1Density::linear_ramp(0.0, 1.0), C1Density::parabolic(-1.0, 2.0),
          C1Density::raised_cosine(0.25, 0.75)};
}

// ----------------------------------------------------------- random scaling

ScaledIntegral scaled_sq_integral(const AdicMeasure& mu, const SmoothingParams& params,
                                  double prescale) {
  return scaled_sq_integral([&mu](double xi) { return ft_adic(mu, xi); }, params, prescale);
}

ScaledIntegral scaled_sq_integral(const std::function<cd(double)>& transform,
                                  const SmoothingParams& params, double prescale) {
  if (params.m == 0) throw InputError("scaled_sq_integral: m must be nonzero");
  if (!(params.b_scale > 1.0)) throw InputError("scaled_sq_integral: b must exceed 1");
  if (!(prescale > 0.0)) throw InputError("scaled_sq_integral: prescale must be positive");

  const double log_b = std::log(params.b_scale);
  const double freq = static_cast<double>(params.m) * prescale;
  auto integrand = [&](double t) { return std::norm(transform(freq * std::exp(t * log_b))); };
  const auto& rule = gauss_legendre_16();
  auto evaluate = [&](std::size_t panels) {
    std::vector<double> parts(panels);
    const double width = 1.0 / static_cast<double>(panels);
    parallel_for(panels, [&](std::size_t p) {
      const double lo = width * static_cast<double>(p);
      const double hi = p + 1 == panels ? 1.0 : lo + width;
      parts[p] = gauss_panel(integrand, lo, hi, rule);
    });
    double sum = 0.0;
    for (double v : parts) sum += v;
    return sum;
  };

  const double oscillation = 4.0 * std::abs(static_cast<double>(params.m)) * params.b_scale *
                             log_b * prescale;
  std::size_t panels = std::max<std::size_t>(16, static_cast<std::size_t>(std::ceil(oscillation)));
  double previous = evaluate(panels);
  for (;;) {
    const std::size_t next = panels * 2;
    if (next * static_cast<std::size_t>(rule.nodes.size()) > params.max_nodes)
      throw NumericalError("scaled_sq_integral: no convergence within " +
                           std::to_string(params.max_nodes) + " nodes (m=" +
                           std::to_string(params.m) + ", b=" + format_double(params.b_scale) +
                           ", prescale=" + format_double(prescale) + ", panels=" +
                           std::to_string(panels) + ", last value=" + format_double(previous) + ")");
    const double current = evaluate(next);
    const double change = std::abs(current - previous);
    panels = next;
    if (change < kScaledIntegralTolerance) return {current, change, panels};
    previous = current;
  }
}

double smoothing_rhs(const AdicMeasure& mu, const SmoothingParams& params, double prescale) {
  if (params.m == 0) throw InputError("smoothing_rhs: m must be nonzero");
  if (!(params.r > 0.0)) throw InputError("smoothing_rhs: r must be positive");
  if (!(params.b_scale > 1.0)) throw InputError("smoothing_rhs: b must exceed 1");
  if (!(prescale > 0.0)) throw InputError("smoothing_rhs: prescale must be positive");
  const double first =
      1.0 / (params.r * std::abs(static_cast<double>(params.m)) * std::log(params.b_scale));
  // nu = S_s mu, so nu(B_r(y)) = mu(B_{r/s}(y/s)).
  return first + correlation_integral(mu, params.r / prescale);
}

std::vector<CertificationRow> certify_smoothing(std::span<const BatteryEntry> battery,
                                                std::span<const long> ms,
                                                std::span<const double> bs,
                                                std::span<const double> rs) {
  struct Task {
    std::size_t measure;
    long m;
    double b;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < battery.size(); ++i)
    for (double b : bs)
      for (long m : ms) tasks.push_back({i, m, b});

  const auto lhs = parallel_map<double>(tasks.size(), [&](std::size_t t) {
    const auto& task = tasks[t];
    return scaled_sq_integral(battery[task.measure].measure, {task.b, task.m, 1.0}).value;
  });

  std::vector<CertificationRow> rows;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto& task = tasks[t];
    const auto& mu = battery[task.measure].measure;
    for (double r : rs) {
      if (r < 1.0 && mu.cell_width() > r / kCorrelationGuard) continue;
      CertificationRow row;
      row.measure_id = battery[task.measure].id;
      row.m = task.m;
      row.b = task.b;
      row.r = r;
      row.lhs = lhs[t];
      row.rhs = smoothing_rhs(mu, {task.b, task.m, r});
      row.margin = row.rhs - row.lhs;
      row.ok = row.lhs <= row.rhs + kCertificationSlack;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<BatteryEntry> default_smoothing_battery() {
  Rng rng(derive_seed(20240611, 3, 0));
  Eigen::VectorXd p(3);
  for (auto& v : p) v = 0.1 + uniform01(rng);
  p /= p.sum();
  p[2] = 1.0 - p[0] - p[1];

  Eigen::MatrixXd chain(2, 2);
  chain << 0.9, 0.1, 0.5, 0.5;

  std::vector<BatteryEntry> battery;
  battery.push_back({"uniform2_L10", AdicMeasure::uniform(2, 10)});
  battery.push_back(
      {"cantor3_L9", realize(MeasureGen::ifs_digits(3, {0, 2}, Eigen::Vector2d(0.5, 0.5)), 9)});
  battery.push_back({"markov2_L12", realize(MeasureGen::markov(chain), 12)});
  battery.push_back({"bernoulli3_L9", realize(MeasureGen::bernoulli(p), 9)});
  return battery;
}

std::string certification_csv(std::span<const CertificationRow> rows) {
  CsvWriter csv({"measure_id", "m", "b", "r", "lhs", "rhs", "margin", "ok"});
  for (const auto& row : rows)
    csv.cell(row.measure_id)
        .cell(row.m)
        .cell(row.b)
        .cell(row.r)
        .cell(row.lhs)
        .cell(row.rhs)
        .cell(row.margin)
        .cell(row.ok)
        .end_row();
  return csv.str();
}

std::string c1_csv(std::span<const C1Row> rows) {
  CsvWriter csv({"density", "t", "lhs", "rhs", "margin", "ok"});
  for (const auto& row : rows)
    csv.cell(row.density)
        .cell(row.t)
        .cell(row.check.lhs)
        .cell(row.check.rhs)
        .cell(row.check.rhs - row.check.lhs)
        .cell(row.check.ok)
        .end_row();
  return csv.str();
}

}  // namespace hostlab
