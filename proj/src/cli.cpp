#include "hostlab/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include "hostlab/errors.hpp"
#include "hostlab/ergodic_toolkit.hpp"
#include "hostlab/fourier_lab.hpp"
#include "hostlab/host_pipeline.hpp"
#include "hostlab/parallel.hpp"
#include "hostlab/report.hpp"

namespace hostlab::cli {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

double parse_number(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InputError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw InputError("not a number: '" + s + "'");
  return v;
}

unsigned parse_base(const std::string& s) {
  const double v = parse_number(s);
  if (v < 2 || v != std::floor(v)) throw InputError("base must be an integer >= 2: '" + s + "'");
  return static_cast<unsigned>(v);
}

Eigen::VectorXd parse_vector(const std::string& s) {
  const auto parts = split(s, ',');
  Eigen::VectorXd v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) v[static_cast<Eigen::Index>(i)] = parse_number(parts[i]);
  return v;
}

}  // namespace

MeasureGen parse_generator(const std::string& spec) {
  if (!spec.empty() && spec.front() == '{') {
    json j;
    try {
      j = json::parse(spec);
    } catch (const json::exception& e) {
      throw InputError(std::string("generator JSON: ") + e.what());
    }
    return measure_gen_from_json(j);
  }
  if (spec == "cantor3") return MeasureGen::ifs_digits(3, {0, 2}, Eigen::Vector2d(0.5, 0.5));
  if (spec == "markov2") {
    Eigen::MatrixXd p(2, 2);
    p << 0.9, 0.1, 0.5, 0.5;
    return MeasureGen::markov(p);
  }
  if (spec.rfind("uniform", 0) == 0) {
    std::string rest = spec.substr(7);
    if (!rest.empty() && rest.front() == ':') rest.erase(0, 1);
    const unsigned a = parse_base(rest);
    return MeasureGen::bernoulli(Eigen::VectorXd::Constant(a, 1.0 / a));
  }
  const auto parts = split(spec, ':');
  if (parts.size() == 2 && parts[0] == "bernoulli") return MeasureGen::bernoulli(parse_vector(parts[1]));
  if (parts.size() == 3 && parts[0] == "markov") {
    const unsigned a = parse_base(parts[1]);
    const Eigen::VectorXd flat = parse_vector(parts[2]);
    if (flat.size() != static_cast<Eigen::Index>(a) * a)
      throw InputError("markov generator needs base^2 transition entries");
    Eigen::MatrixXd p(a, a);
    for (unsigned i = 0; i < a; ++i)
      for (unsigned j = 0; j < a; ++j) p(i, j) = flat[i * a + j];
    return MeasureGen::markov(p);
  }
  if ((parts.size() == 3 || parts.size() == 4) && parts[0] == "ifs") {
    const unsigned a = parse_base(parts[1]);
    std::vector<unsigned> digits;
    for (const auto& d : split(parts[2], ',')) digits.push_back(static_cast<unsigned>(parse_number(d)));
    Eigen::VectorXd w = parts.size() == 4
                            ? parse_vector(parts[3])
                            : Eigen::VectorXd::Constant(static_cast<Eigen::Index>(digits.size()),
                                                        1.0 / static_cast<double>(digits.size()));
    return MeasureGen::ifs_digits(a, std::move(digits), std::move(w));
  }
  throw InputError("unknown generator spec '" + spec + "'");
}

namespace {

struct Context {
  std::string out_dir = ".";
  bool strict = false;
  std::size_t hard_failures = 0;
  std::size_t soft_failures = 0;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  void write(const std::string& name, const std::string& contents) const {
    const auto path = std::filesystem::path(out_dir) / name;
    write_text_file(path.string(), contents);
    *out << "wrote " << path.string() << '\n';
  }
  void soft(bool ok, const std::string& what) {
    if (ok) return;
    ++soft_failures;
    *err << "warning: soft criterion not met: " << what << '\n';
  }
  void hard(bool ok, const std::string& what) {
    if (ok) return;
    ++hard_failures;
    *err << "error: hard invariant violated: " << what << '\n';
  }
};

// Every option of the subcommand with its (possibly defaulted) value.
json echo_config(const CLI::App* sub) {
  json j;
  j["subcommand"] = sub->get_name();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    auto results = opt->results();
    if (results.empty()) {
      const std::string def = opt->get_default_str();
      if (opt->get_type_size() == 0) {
        j[name] = opt->count() > 0;
        continue;
      }
      if (!def.empty()) results = {def};
    }
    if (opt->get_type_size() == 0) {
      j[name] = opt->count() > 0;
    } else if (opt->get_items_expected_max() > 1) {
      j[name] = results;
    } else if (!results.empty()) {
      j[name] = results.back();
    } else {
      j[name] = nullptr;
    }
  }
  return j;
}

json with_meta(json body, const json& config) {
  body["version"] = version_string();
  body["config"] = config;
  return body;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Splices flat JSON config keys into argv as flags, unless the same flag is
// already given on the command line (flags override the file).
std::vector<std::string> apply_config_file(const std::vector<std::string>& args) {
  std::string path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (path.empty()) return rest;
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config file '" + path + "'");
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("config file '" + path + "': " + e.what());
  }
  if (!cfg.is_object()) throw InputError("config file must hold a flat JSON object");

  auto given = [&](const std::string& key) {
    const std::string flag = "--" + key;
    return std::any_of(rest.begin(), rest.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  std::vector<std::string> injected;
  std::string subcommand;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "subcommand") {
      if (!value.is_string()) throw InputError("config: subcommand must be a string");
      subcommand = value.get<std::string>();
      continue;
    }
    if (given(key)) continue;
    auto scalar = [&](const json& v) -> std::string {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_object()) return v.dump();
      if (v.is_number() || v.is_boolean()) return v.dump();
      throw InputError("config: unsupported value for key '" + key + "'");
    };
    if (value.is_boolean()) {
      if (value.get<bool>()) injected.push_back("--" + key);
    } else if (value.is_array()) {
      injected.push_back("--" + key);
      for (const auto& v : value) injected.push_back(scalar(v));
    } else {
      injected.push_back("--" + key);
      injected.push_back(scalar(value));
    }
  }
  // Place injected flags right after the subcommand name.
  std::vector<std::string> out;
  out.push_back(rest.empty() ? "hostlab" : rest.front());
  std::size_t i = 1;
  if (i < rest.size() && !rest[i].empty() && rest[i][0] != '-') {
    out.push_back(rest[i++]);
  } else if (!subcommand.empty()) {
    out.push_back(subcommand);
  }
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), rest.begin() + static_cast<std::ptrdiff_t>(i), rest.end());
  return out;
}

std::vector<std::size_t> default_checkpoints(std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t c = 100; c < n; c *= 10) out.push_back(c);
  out.push_back(n);
  return out;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  Context ctx;
  ctx.out = &out;
  ctx.err = &err;

  CLI::App app{"hostlab: numerical experiments on xa-invariant measures under xb"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 0;
  int threads = 0;
  std::string config_path;
  app.add_option("--config", config_path, "flat JSON file of option values (flags override)");
  app.add_option("--threads", threads, "worker threads (default: HOSTLAB_THREADS or all cores)");

  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "master seed (required)")->required();
    sub->add_option("--out", ctx.out_dir, "output directory")->capture_default_str();
    sub->add_flag("--strict", ctx.strict, "treat soft-threshold failures as errors");
  };

  // weyl
  auto* weyl = app.add_subcommand("weyl", "Weyl sums along xb orbits of mu-typical points");
  std::string weyl_gen = "cantor3";
  unsigned long weyl_b = 2;
  std::vector<long> weyl_m{1};
  std::size_t weyl_n = 100000, weyl_samples = 50;
  std::vector<std::size_t> weyl_checkpoints;
  unsigned weyl_k = 0;
  double weyl_soft = 0.05;
  weyl->add_option("--gen", weyl_gen)->capture_default_str();
  weyl->add_option("--b", weyl_b)->capture_default_str();
  weyl->add_option("--m", weyl_m)->capture_default_str();
  weyl->add_option("--N", weyl_n)->capture_default_str();
  weyl->add_option("--samples", weyl_samples)->capture_default_str();
  weyl->add_option("--checkpoints", weyl_checkpoints, "default: 100, 1000, ... up to N");
  weyl->add_option("--k", weyl_k, "T_a^k burn-in")->capture_default_str();
  weyl->add_option("--soft-threshold", weyl_soft)->capture_default_str();
  common(weyl);

  // fourier-cert
  auto* cert = app.add_subcommand("fourier-cert", "C^1 decay and random-scaling bound battery");
  std::string cert_battery = "default";
  std::vector<long> cert_m{-8, -7, -6, -5, -4, -3, -2, -1, 1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<double> cert_b{2.0, std::numbers::e, 10.0};
  std::vector<double> cert_r;
  for (int j = 1; j <= 6; ++j) cert_r.push_back(std::pow(3.0, -j));
  std::vector<double> cert_t{-100, -10, -5, -2, -1, 1, 2, 5, 10, 100};
  cert->add_option("--battery", cert_battery)->capture_default_str();
  cert->add_option("--m", cert_m)->capture_default_str();
  cert->add_option("--b", cert_b)->capture_default_str();
  cert->add_option("--r", cert_r)->capture_default_str();
  cert->add_option("--t", cert_t)->capture_default_str();
  cert->add_option("--seed", seed, "master seed (required)")->required();
  cert->add_option("--out", ctx.out_dir, "output directory")->capture_default_str();
  cert->add_flag("--strict", ctx.strict);

  // proof-chain
  auto* chain = app.add_subcommand("proof-chain", "k-decay of the integrated scaled transform");
  std::string chain_gen = "cantor3";
  long chain_m = 1;
  std::vector<unsigned> chain_k{0, 2, 4, 6};
  std::size_t chain_samples = 50;
  unsigned chain_level = 13;
  unsigned long chain_b = 2;
  chain->add_option("--gen", chain_gen)->capture_default_str();
  chain->add_option("--m", chain_m)->capture_default_str();
  chain->add_option("--k", chain_k)->capture_default_str();
  chain->add_option("--samples", chain_samples)->capture_default_str();
  chain->add_option("--level", chain_level)->capture_default_str();
  chain->add_option("--b", chain_b, "recorded only; the quantity depends on a")->capture_default_str();
  common(chain);

  // martingale
  auto* mart = app.add_subcommand("martingale", "Cesaro averages of martingale differences");
  std::string mart_gen = "markov2";
  unsigned mart_window = 1;
  std::string mart_function = "parity";
  std::size_t mart_n = 10000, mart_trials = 100;
  mart->add_option("--gen", mart_gen)->capture_default_str();
  mart->add_option("--window", mart_window)->capture_default_str();
  mart->add_option("--function", mart_function, "parity | random | constant")->capture_default_str();
  mart->add_option("--N", mart_n)->capture_default_str();
  mart->add_option("--trials", mart_trials)->capture_default_str();
  common(mart);

  // time-change
  auto* tc = app.add_subcommand("time-change", "joint equidistribution of (n theta, T^[beta n] x)");
  const double alpha23 = std::log(2.0) / std::log(3.0);
  double tc_theta = alpha23, tc_beta = alpha23;
  std::string tc_gen = "markov2";
  std::vector<long> tc_j{0, 1, 2, 3};
  std::size_t tc_n = 10000, tc_samples = 100;
  tc->add_option("--theta", tc_theta)->capture_default_str();
  tc->add_option("--beta", tc_beta)->capture_default_str();
  tc->add_option("--gen", tc_gen)->capture_default_str();
  tc->add_option("--j", tc_j)->capture_default_str();
  tc->add_option("--N", tc_n)->capture_default_str();
  tc->add_option("--samples", tc_samples)->capture_default_str();
  common(tc);

  // equivariance
  auto* eq = app.add_subcommand("equivariance", "conditional-measure equivariance battery");
  std::vector<std::string> eq_gen{"uniform2", "bernoulli:0.2,0.3,0.5", "markov2", "cantor3"};
  std::size_t eq_pairs = 100;
  unsigned eq_level = 7;
  eq->add_option("--gen", eq_gen)->capture_default_str();
  eq->add_option("--pairs", eq_pairs)->capture_default_str();
  eq->add_option("--level", eq_level)->capture_default_str();
  common(eq);

  // controls
  auto* ctl = app.add_subcommand("controls", "negative controls: dependent (a, b), rational points");
  std::string ctl_mode = "dependent";
  std::string ctl_gen;
  unsigned ctl_a = 2;
  unsigned long ctl_b = 2, ctl_p = 1, ctl_q = 7;
  long ctl_m = 1;
  std::size_t ctl_n = 100000, ctl_samples = 10;
  double ctl_soft = 0.05;
  ctl->add_option("--mode", ctl_mode, "dependent | rational")
      ->check(CLI::IsMember({"dependent", "rational"}))
      ->capture_default_str();
  ctl->add_option("--gen", ctl_gen, "default: bernoulli with p = (0.25, 0.75, ...) in base a");
  ctl->add_option("--a", ctl_a)->capture_default_str();
  ctl->add_option("--b", ctl_b)->capture_default_str();
  ctl->add_option("--p", ctl_p)->capture_default_str();
  ctl->add_option("--q", ctl_q)->capture_default_str();
  ctl->add_option("--m", ctl_m)->capture_default_str();
  ctl->add_option("--N", ctl_n)->capture_default_str();
  ctl->add_option("--samples", ctl_samples)->capture_default_str();
  ctl->add_option("--soft-threshold", ctl_soft)->capture_default_str();
  common(ctl);

  try {
    std::vector<std::string> args = apply_config_file(raw_args);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    try {
      app.parse(reversed);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success) ? 0 : (code ? 2 : 0);
    }
    if (threads > 0) set_thread_count(threads);
    std::filesystem::create_directories(ctx.out_dir);

    if (weyl->parsed()) {
      HostExperimentConfig cfg{parse_generator(weyl_gen)};
      cfg.b = weyl_b;
      cfg.samples = weyl_samples;
      cfg.n_max = weyl_n;
      cfg.frequencies = weyl_m;
      cfg.checkpoints = weyl_checkpoints.empty() ? default_checkpoints(weyl_n) : weyl_checkpoints;
      cfg.k = weyl_k;
      cfg.seed = seed;
      cfg.soft_threshold = weyl_soft;
      const auto report = host_experiment(cfg);
      for (const auto& s : report.samples)
        for (std::size_t f = 0; f < cfg.frequencies.size(); ++f)
          for (const auto& row : s.weyl.averages()) ctx.hard(std::abs(row[f]) <= 1.0 + 1e-12, "|W| <= 1");
      if (report.negative_control) {
        out << "label: negative-control (a, b multiplicatively dependent)\n";
      } else {
        ctx.soft(report.medians_decrease, "median |W_N(m)| decreases over checkpoints >= 1000");
        ctx.soft(report.below_threshold, "median |W_Nmax(m)| < soft threshold");
      }
      ctx.write("weyl.csv", weyl_csv(report));
      ctx.write("weyl.dat", weyl_dat(report));
      ctx.write("weyl_summary.json", dump(with_meta(host_summary(report), echo_config(weyl))));
    } else if (cert->parsed()) {
      if (cert_battery != "default") throw InputError("unknown battery '" + cert_battery + "'");
      std::vector<C1Row> c1;
      for (const auto& f : default_density_battery())
        for (double t : cert_t) c1.push_back({f.name(), t, c1_bound_check(f, t)});
      const auto battery = default_smoothing_battery();
      const auto rows = certify_smoothing(battery, cert_m, cert_b, cert_r);
      std::size_t bad = 0;
      for (const auto& r : c1) bad += !r.check.ok;
      for (const auto& r : rows) bad += !r.ok;
      ctx.hard(bad == 0, std::to_string(bad) + " certification rows fail");
      ctx.write("c1_cert.csv", c1_csv(c1));
      ctx.write("smoothing_cert.csv", certification_csv(rows));
      json summary = {{"c1_rows", c1.size()}, {"smoothing_rows", rows.size()}, {"failed_rows", bad},
                      {"seed", seed}};
      ctx.write("fourier_cert.json", dump(with_meta(summary, echo_config(cert))));
    } else if (chain->parsed()) {
      const MeasureGen gen = parse_generator(chain_gen);
      CsvWriter csv({"k", "m", "value", "std_error", "rhs_first", "rhs_corr", "rhs", "ok"});
      json rows = json::array();
      std::vector<ProofChainEstimate> estimates;
      for (unsigned k : chain_k) {
        const auto e = proof_chain_quantity(gen, k, chain_m, chain_samples, chain_level, seed);
        const bool ok = e.value <= e.rhs + kCertificationSlack;
        ctx.hard(ok, "proof-chain value <= companion bound at k = " + std::to_string(k));
        csv.cell(k).cell(e.m).cell(e.value).cell(e.std_error).cell(e.rhs_first).cell(e.rhs_corr)
            .cell(e.rhs).cell(ok).end_row();
        rows.push_back({{"k", k}, {"value", e.value}, {"std_error", e.std_error},
                        {"rhs", e.rhs}, {"panels", e.panels}, {"seeds", e.seeds}});
        estimates.push_back(e);
      }
      for (std::size_t i = 1; i < estimates.size(); ++i) {
        const auto& p = estimates[i - 1];
        const auto& c = estimates[i];
        if (c.k > p.k)
          ctx.soft(c.value <= p.value + 2.0 * std::hypot(p.std_error, c.std_error),
                   "estimate decreases from k = " + std::to_string(p.k) + " to " + std::to_string(c.k));
      }
      ctx.write("proof_chain.csv", csv.str());
      ctx.write("proof_chain.json", dump(with_meta({{"rows", rows}}, echo_config(chain))));
    } else if (mart->parsed()) {
      const SymbolicProcess proc(parse_generator(mart_gen), seed);
      const unsigned a = proc.gen.base();
      WindowFunction f = mart_function == "parity"   ? WindowFunction::parity(a)
                         : mart_function == "random" ? WindowFunction::random(a, mart_window, seed)
                         : mart_function == "constant"
                             ? WindowFunction::constant(a, mart_window, 1.0)
                             : throw InputError("unknown window function '" + mart_function + "'");
      if (mart_function == "parity" && mart_window != 1)
        throw InputError("the parity window function has window 1");
      const auto v1 = martingale_avg_experiment(proc, f, mart_n, mart_trials, 1);
      const auto v4 = martingale_avg_experiment(proc, f, 4 * mart_n, mart_trials, 4);
      const double r1 = rms(v1), r4 = rms(v4);
      const double bound = 3.0 * f.bound() / std::sqrt(static_cast<double>(mart_n));
      ctx.soft(r1 <= bound, "trial RMS <= 3 ||f|| / sqrt(N)");
      const double ratio = r1 > 0.0 ? r4 / r1 : 0.0;
      if (r1 > 0.0) ctx.soft(ratio >= 0.3 && ratio <= 0.75, "RMS(4N)/RMS(N) in [0.3, 0.75]");
      std::string csv = martingale_csv(v1, mart_n);
      const std::string more = martingale_csv(v4, 4 * mart_n);
      csv += more.substr(more.find('\n', more.find('\n') + 1) + 1);  // drop repeated header
      ctx.write("martingale.csv", csv);
      json summary = {{"rms_N", r1}, {"rms_4N", r4}, {"ratio", ratio}, {"bound", bound},
                      {"window", f.window()}, {"sup_norm", f.bound()}};
      ctx.write("martingale.json", dump(with_meta(summary, echo_config(mart))));
    } else if (tc->parsed()) {
      const MeasureGen gen = parse_generator(tc_gen);
      const std::vector<DigitTest> tests{first_digit_phase(gen.base()), two_digit_table(gen.base(), seed)};
      const auto result =
          time_change_joint_experiment(tc_theta, tc_beta, gen, tc_j, tests, tc_n, tc_samples, seed);
      json entries = json::array();
      for (const auto& e : result.entries) {
        ctx.soft(e.ok, "|A(" + std::to_string(e.j) + ", " + e.g_id + ") - prediction| within tolerance");
        entries.push_back({{"j", e.j}, {"g", e.g_id}, {"value", complex_json(e.value)},
                           {"predicted", complex_json(e.predicted)}, {"tolerance", e.tolerance},
                           {"z_score", e.z_score}, {"ok", e.ok}});
      }
      ctx.write("joint.csv", joint_csv(result));
      ctx.write("joint.json", dump(with_meta({{"entries", entries}}, echo_config(tc))));
    } else if (eq->parsed()) {
      std::vector<EquivarianceRow> rows;
      for (std::size_t g = 0; g < eq_gen.size(); ++g) {
        const auto part = equivariance_battery(parse_generator(eq_gen[g]), eq_gen[g], eq_pairs,
                                               eq_level, derive_seed(seed, 0xe9, g));
        rows.insert(rows.end(), part.begin(), part.end());
      }
      double worst = 0.0;
      for (const auto& r : rows) {
        worst = std::max(worst, r.defect);
        ctx.hard(r.ok, "equivariance defect " + format_double(r.defect) + " for " + r.gen_id);
      }
      ctx.write("equivariance.csv", equivariance_csv(rows));
      ctx.write("equivariance.json",
                dump(with_meta({{"pairs", rows.size()}, {"max_defect", worst}}, echo_config(eq))));
    } else if (ctl->parsed()) {
      if (ctl_mode == "dependent") {
        MeasureGen gen = [&] {
          if (!ctl_gen.empty()) return parse_generator(ctl_gen);
          Eigen::VectorXd p = Eigen::VectorXd::Constant(ctl_a, 0.75 / (ctl_a - 1));
          p[0] = 0.25;
          return MeasureGen::bernoulli(p);
        }();
        if (gen.base() != ctl_a) throw InputError("generator base differs from --a");
        HostExperimentConfig cfg{gen};
        cfg.b = ctl_b;
        cfg.samples = ctl_samples;
        cfg.n_max = ctl_n;
        cfg.frequencies = {ctl_m};
        cfg.checkpoints = default_checkpoints(ctl_n);
        cfg.seed = seed;
        cfg.soft_threshold = ctl_soft;
        const auto report = host_experiment(cfg);
        out << "label: " << (report.negative_control ? "negative-control" : "independent") << '\n';
        if (report.negative_control && report.predicted[0])
          ctx.soft(report.stats.back().median_gap < ctl_soft,
                   "median |W_N - mu^(m)| < soft threshold");
        ctx.write("controls_dependent.csv", weyl_csv(report));
        ctx.write("controls_dependent.json", dump(with_meta(host_summary(report), echo_config(ctl))));
      } else {
        const auto r = rational_control(ctl_p, ctl_q, ctl_b, ctl_m, ctl_n);
        ctx.soft(r.gap < 1e-3, "W_N matches the cycle average within 1e-3");
        CsvWriter csv({"p", "q", "b", "m", "N", "re", "im", "pred_re", "pred_im", "gap"});
        csv.cell(ctl_p).cell(ctl_q).cell(ctl_b).cell(ctl_m).cell(ctl_n).cell(r.observed.real())
            .cell(r.observed.imag()).cell(r.predicted.real()).cell(r.predicted.imag()).cell(r.gap)
            .end_row();
        ctx.write("controls_rational.csv", csv.str());
        json summary = {{"label", "negative-control"}, {"observed", complex_json(r.observed)},
                        {"predicted", complex_json(r.predicted)}, {"gap", r.gap}};
        ctx.write("controls_rational.json", dump(with_meta(summary, echo_config(ctl))));
      }
    }
  } catch (const InputError& e) {
    err << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const ResourceError& e) {
    err << "resource error: " << e.what() << '\n';
    return 3;
  } catch (const PrecisionError& e) {
    err << "precision error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "resource error: " << e.what() << '\n';
    return 3;
  }

  if (ctx.hard_failures) return 1;
  if (ctx.soft_failures && ctx.strict) return 1;
  return 0;
}

}  // namespace hostlab::cli
