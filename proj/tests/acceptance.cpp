// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "hostlab/ergodic_toolkit.hpp"
#include "hostlab/fourier_lab.hpp"
#include "hostlab/host_pipeline.hpp"
#include "hostlab/parallel.hpp"
#include "hostlab/report.hpp"
#include "oracles.hpp"

using namespace hostlab;
using cd = std::complex<double>;

namespace {

constexpr std::uint64_t kSeed = 20240611;

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<std::string> warnings;
  std::string csv;  // everything the criterion would write as CSV

  void require(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

MeasureGen cantor() { return MeasureGen::ifs_digits(3, {0, 2}, Eigen::Vector2d(0.5, 0.5)); }

MeasureGen markov2() {
  Eigen::Matrix2d p;
  p << 0.9, 0.1, 0.5, 0.5;
  return MeasureGen::markov(p);
}

// ---------------------------------------------------------------- 1

Outcome c1_certification(bool) {
  Outcome o;
  std::vector<C1Row> rows;
  const auto battery = default_density_battery();
  o.require(battery.size() >= 3, "fewer than 3 densities");
  for (const auto& f : battery)
    for (double t : {-100.0, -10.0, -5.0, -2.0, -1.0, 1.0, 2.0, 5.0, 10.0, 100.0}) {
      const auto c = c1_bound_check(f, t);
      rows.push_back({f.name(), t, c});
      o.require(c.ok, f.name() + " fails at t=" + fmt(t));
    }
  const cd closed = density_transform(C1Density::parabolic(), 1.0);
  const double want = -3.0 / (std::numbers::pi * std::numbers::pi);
  o.require(std::abs(closed - want) < 1e-9, "f = 6x(1-x): f^(1) = " + fmt(closed.real(), 12));
  o.csv = c1_csv(rows);
  if (o.pass)
    o.detail = std::to_string(rows.size()) + " rows ok; f^(1) = " + fmt(closed.real(), 10) +
               " vs -3/pi^2 = " + fmt(want, 10);
  return o;
}

// ---------------------------------------------------------------- 2

Outcome smoothing_certification(bool full) {
  Outcome o;
  const auto battery = default_smoothing_battery();
  o.require(battery.size() >= 4, "fewer than 4 measures");
  std::vector<long> ms;
  for (long m = 1; m <= 8; ++m) {
    ms.push_back(m);
    ms.push_back(-m);
  }
  const std::vector<double> bs{2.0, 10.0};
  std::vector<double> rs;
  for (int j = 1; j <= 6; ++j) rs.push_back(std::pow(3.0, -j));
  const auto rows = certify_smoothing(battery, ms, bs, rs);
  double min_margin = INFINITY;
  std::size_t bad = 0;
  for (const auto& r : rows) {
    min_margin = std::min(min_margin, r.margin);
    if (!r.ok) ++bad;
  }
  o.require(!rows.empty(), "no rows passed the resolution guard");
  o.require(bad == 0, std::to_string(bad) + " rows violate the bound");
  o.csv = certification_csv(rows);
  std::string mc_detail;
  if (full && !rows.empty()) {
    Rng pick(derive_seed(kSeed, 0x2c, 0));
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
      const auto& row = rows[pick() % rows.size()];
      const AdicMeasure* mu = nullptr;
      for (const auto& e : battery)
        if (e.id == row.measure_id) mu = &e.measure;
      const auto mc = oracle::scaled_ft_monte_carlo(*mu, row.b, row.m, 40000, derive_seed(kSeed, 0x2d, i));
      const double z = std::abs(row.lhs - mc.mean) / std::max(mc.std_error, 1e-12);
      worst = std::max(worst, z);
      o.require(z <= 3.0, "Monte Carlo disagrees on " + row.measure_id + " m=" + std::to_string(row.m) +
                              " b=" + fmt(row.b) + " (z=" + fmt(z) + ")");
    }
    mc_detail = "; Monte Carlo max z = " + fmt(worst, 3) + " on 5 rows";
  }
  if (o.pass)
    o.detail = std::to_string(rows.size()) + " rows ok, min margin " + fmt(min_margin) + mc_detail;
  return o;
}

// ---------------------------------------------------------------- 3

Outcome equivariance(bool) {
  Outcome o;
  const std::vector<std::pair<std::string, MeasureGen>> gens{
      {"bernoulli", MeasureGen::bernoulli(Eigen::Vector3d(0.2, 0.3, 0.5))},
      {"markov2", markov2()},
      {"cantor3", cantor()}};
  double worst = 0.0;
  std::size_t total = 0;
  for (const auto& [id, g] : gens) {
    const auto rows = equivariance_battery(g, id, 100, 8, kSeed);
    for (const auto& r : rows) {
      worst = std::max(worst, r.defect);
      o.require(r.ok, id + " pair " + std::to_string(r.pair) + " defect " + fmt(r.defect));
    }
    total += rows.size();
    o.csv += equivariance_csv(rows);
  }
  if (o.pass) o.detail = std::to_string(total) + " pairs, max defect " + fmt(worst, 3);
  return o;
}

// ---------------------------------------------------------------- 4

Outcome host_desk_scale(bool) {
  Outcome o;
  HostExperimentConfig cfg{cantor(), 2, 50, 100000, {1, 2, 3}, {100, 1000, 10000, 100000}, 0, kSeed, 0.05};
  const auto report = host_experiment(cfg);
  o.csv = weyl_csv(report);
  const std::size_t nc = cfg.checkpoints.size();
  std::string medians;
  for (std::size_t f = 0; f < cfg.frequencies.size(); ++f) {
    double prev = INFINITY;
    medians += (f ? " | m=" : "m=") + std::to_string(cfg.frequencies[f]) + ":";
    for (std::size_t c = 1; c < nc; ++c) {
      const double med = report.stats[f * nc + c].median;
      medians += " " + fmt(med, 3);
      o.require(med < prev, "median |W| not decreasing for m=" + std::to_string(cfg.frequencies[f]));
      prev = med;
    }
  }
  const double last = report.stats[nc - 1].median;
  if (!(last < cfg.soft_threshold))
    o.warnings.push_back("median |W_1e5(1)| = " + fmt(last) + " >= " + fmt(cfg.soft_threshold));
  o.detail = (o.pass ? "" : o.detail + "; ") + "medians at N=1e3,1e4,1e5 " + medians;
  return o;
}

// ---------------------------------------------------------------- 5

Outcome negative_controls(bool) {
  Outcome o;
  HostExperimentConfig cfg{MeasureGen::bernoulli(Eigen::Vector2d(0.25, 0.75)), 2, 10, 100000, {1},
                           {100, 1000, 10000, 100000}, 0, kSeed, 0.05};
  const auto report = host_experiment(cfg);
  o.require(report.negative_control, "a = b = 2 not labelled as a negative control");
  const cd oracle_limit = ft_adic(realize(cfg.gen, 20), 1.0);
  o.require(report.predicted[0].has_value() && std::abs(*report.predicted[0] - oracle_limit) < 1e-12,
            "predicted limit differs from the level-20 transform");
  double worst = 0.0;
  for (const auto& s : report.samples) worst = std::max(worst, std::abs(s.weyl.current(0) - oracle_limit));
  o.require(worst < 0.05, "max |W - mu^(1)| = " + fmt(worst));

  const auto rc = rational_control(1, 7, 2, 1, 30000);
  const cd cycle = (oracle::e(1.0 / 7) + oracle::e(2.0 / 7) + oracle::e(4.0 / 7)) / 3.0;
  const double gap = std::abs(rc.observed - cycle);
  o.require(gap < 1e-3, "x = 1/7 gap " + fmt(gap));

  CsvWriter rational({"p", "q", "b", "m", "N", "re", "im", "gap"});
  rational.cell(1).cell(7).cell(2).cell(1).cell(30000).cell(rc.observed.real()).cell(rc.observed.imag())
      .cell(gap).end_row();
  o.csv = weyl_csv(report) + rational.str();
  if (o.pass)
    o.detail = "mu^(1) = " + fmt(oracle_limit.real(), 6) + (oracle_limit.imag() < 0 ? "" : "+") +
               fmt(oracle_limit.imag(), 6) + "i, max gap " + fmt(worst, 3) + "; 1/7 gap " + fmt(gap, 3);
  return o;
}

// ---------------------------------------------------------------- 6

Outcome proof_chain(bool full) {
  Outcome o;
  const auto g = cantor();
  CsvWriter csv({"k", "value", "std_error", "rhs"});
  std::vector<ProofChainEstimate> est;
  for (unsigned k : {0u, 2u, 4u, 6u}) {
    est.push_back(proof_chain_quantity(g, k, 1, 50, 13, kSeed));
    const auto& e = est.back();
    csv.cell(k).cell(e.value).cell(e.std_error).cell(e.rhs).end_row();
    o.require(e.value <= e.rhs, "k=" + std::to_string(k) + " exceeds its bound");
  }
  for (std::size_t i = 1; i < est.size(); ++i)
    o.require(est[i].value <= est[i - 1].value + 2.0 * std::hypot(est[i].std_error, est[i - 1].std_error),
              "not decreasing at k=" + std::to_string(est[i].k));

  const auto mu = realize(g, 11);
  std::vector<double> rs, cs;
  CsvWriter corr({"r", "correlation"});
  for (int j = 2; j <= 8; ++j) {
    const double r = std::pow(3.0, -j);
    rs.push_back(r);
    cs.push_back(correlation_integral(mu, r));
    corr.cell(r).cell(cs.back()).end_row();
    if (full) {
      const double brute = oracle::correlation_bruteforce(mu, r);
      o.require(std::abs(brute - cs.back()) <= 1e-10 * std::max(1.0, brute),
                "correlation differs from brute force at r=3^-" + std::to_string(j));
    }
  }
  const double slope = fit_log_slope(rs, cs);
  const double dim = std::log(2.0) / std::log(3.0);
  o.require(std::abs(slope - dim) <= 0.05, "correlation slope " + fmt(slope));
  o.csv = csv.str() + corr.str();
  if (o.pass) {
    std::string vals;
    for (const auto& e : est) vals += " " + fmt(e.value, 3) + "<=" + fmt(e.rhs, 3);
    o.detail = "values" + vals + "; slope " + fmt(slope, 5) + " vs " + fmt(dim, 5);
  }
  return o;
}

// ---------------------------------------------------------------- 7

Outcome martingale(bool) {
  Outcome o;
  const std::vector<std::pair<std::string, MeasureGen>> gens{
      {"bernoulli", MeasureGen::bernoulli(Eigen::Vector2d(0.3, 0.7))}, {"markov2", markov2()}};
  const std::size_t n = 10000;
  std::string detail;
  for (const auto& [id, g] : gens) {
    const SymbolicProcess proc(g, kSeed);
    for (unsigned k : {1u, 3u}) {
      const auto f = k == 1 ? WindowFunction::parity(2) : WindowFunction::random(2, 3, kSeed);
      const auto v1 = martingale_avg_experiment(proc, f, n, 100, 2 * k);
      const auto v4 = martingale_avg_experiment(proc, f, 4 * n, 100, 2 * k + 1);
      const double r1 = rms(v1), r4 = rms(v4);
      const double ratio = r4 / r1;
      const std::string tag = id + " k=" + std::to_string(k);
      o.require(r1 < 3.0 * f.bound() * 1e-2, tag + " RMS " + fmt(r1));
      o.require(ratio >= 0.3 && ratio <= 0.75, tag + " ratio " + fmt(ratio));
      detail += (detail.empty() ? "" : ", ") + tag + ": " + fmt(r1, 3) + "/" + fmt(ratio, 3);
      o.csv += martingale_csv(v1, n) + martingale_csv(v4, 4 * n);
    }
  }
  if (o.pass) o.detail = "RMS(N)/ratio " + detail;
  return o;
}

// ---------------------------------------------------------------- 8

Outcome time_change(bool) {
  Outcome o;
  const double theta = std::log(2.0) / std::log(3.0);
  const std::vector<long> js{0, 1, 2, 3};
  const std::vector<DigitTest> tests{first_digit_phase(2), two_digit_table(2, kSeed)};
  const auto res = time_change_joint_experiment(theta, theta, markov2(), js, tests, 10000, 100, kSeed);
  double worst = 0.0;
  for (const auto& e : res.entries) {
    worst = std::max(worst, std::abs(e.value - e.predicted) / e.tolerance);
    o.require(e.ok, "A(" + std::to_string(e.j) + ", " + e.g_id + ") off by " +
                        fmt(std::abs(e.value - e.predicted)));
  }
  o.csv = joint_csv(res);
  if (o.pass)
    o.detail = std::to_string(res.entries.size()) + " entries, max gap/tolerance " + fmt(worst, 3);
  return o;
}

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  bool hard_budget;
  std::function<Outcome(bool)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "C1 decay bound", 1.0, true, c1_certification},
      {2, "random-scaling bound", 120.0, true, smoothing_certification},
      {3, "conditional-measure equivariance", 10.0, true, equivariance},
      {4, "Cantor orbits under x2", 600.0, false, host_desk_scale},
      {5, "negative controls", 120.0, true, negative_controls},
      {6, "proof-chain decay", 300.0, true, proof_chain},
      {7, "martingale differences", 60.0, true, martingale},
      {8, "time-change joint averages", 120.0, true, time_change},
  };

  using clock = std::chrono::steady_clock;
  bool all = true;
  std::vector<std::string> serial_csv;
  set_thread_count(1);
  for (const auto& c : criteria) {
    const auto t0 = clock::now();
    Outcome o;
    try {
      o = c.run(true);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    if (secs > c.budget_s) {
      if (c.hard_budget) o.require(false, "runtime " + fmt(secs) + " s over " + fmt(c.budget_s) + " s");
      else o.warnings.push_back("runtime over the " + fmt(c.budget_s) + " s target");
    }
    serial_csv.push_back(o.csv);
    all = all && o.pass;
    std::printf("%s criterion %d (%s): %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), secs);
    for (const auto& w : o.warnings) std::printf("  warning: %s\n", w.c_str());
    std::fflush(stdout);
  }

  // 9: the same producers on four workers must write identical bytes.
  {
    const auto t0 = clock::now();
    Outcome o;
    set_thread_count(4);
    std::vector<int> differ;
    try {
      for (std::size_t i = 0; i < criteria.size(); ++i)
        if (criteria[i].run(false).csv != serial_csv[i]) differ.push_back(criteria[i].id);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    set_thread_count(0);
    for (int id : differ) o.require(false, "criterion " + std::to_string(id) + " CSV differs");
    if (o.pass) o.detail = "CSV outputs of criteria 1-8 identical on 1 and 4 threads";
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    all = all && o.pass;
    std::printf("%s criterion 9 (determinism): %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                secs);
  }
  return all ? 0 : 1;
}
