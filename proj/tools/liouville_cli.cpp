#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "liouville/dozz.hpp"
#include "liouville/errors.hpp"
#include "liouville/estimators.hpp"
#include "liouville/manifest.hpp"

using namespace liouville;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

enum Exit { kPass = 0, kFail = 1, kPrecondition = 2, kNumerical = 3 };

bool use_color() { return std::getenv("NO_COLOR") == nullptr && isatty(fileno(stdout)); }

std::string paint(const std::string& s, bool ok) {
  if (!use_color()) return s;
  return std::string(ok ? "\033[32m" : "\033[31m") + s + "\033[0m";
}

// ---------------------------------------------------------------- parsing

double parse_real(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw PreconditionError("cannot parse " + what + ": '" + s + "'");
  return v;
}

// "1.5", "1.5+0.2i", "-0.3i"
cplx parse_complex(const std::string& s, const std::string& what) {
  const char* p = s.c_str();
  char* end = nullptr;
  const double a = std::strtod(p, &end);
  if (end == p) throw PreconditionError("cannot parse " + what + ": '" + s + "'");
  if (*end == '\0') return {a, 0.0};
  if (*end == 'i' && end[1] == '\0') return {0.0, a};
  const char* q = end;
  const double b = std::strtod(q, &end);
  if (end == q || *end != 'i' || end[1] != '\0') throw PreconditionError("cannot parse " + what + ": '" + s + "'");
  return {a, b};
}

std::vector<std::string> split(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& t : split(s)) out.push_back(parse_real(t, what));
  return out;
}

cplx parse_point(const std::string& s, const std::string& what) {
  const auto v = parse_list(s, what);
  if (v.size() == 1) return {v[0], 0.0};
  if (v.size() != 2) throw PreconditionError(what + " expects re,im");
  return {v[0], v[1]};
}

WeightTriple parse_triple(const std::string& s) {
  const auto t = split(s);
  if (t.size() != 3) throw PreconditionError("--alphas expects three comma-separated weights");
  return {parse_complex(t[0], "alpha1"), parse_complex(t[1], "alpha2"), parse_complex(t[2], "alpha3")};
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// key = value lines; '#' starts a comment.
std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw PreconditionError(path + ":" + std::to_string(no) + ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

// ---------------------------------------------------------------- output

json cjson(cplx v) {
  if (v.imag() == 0.0) return v.real();
  return json::array({v.real(), v.imag()});
}

void write_csv_row(std::ostream& os, const std::vector<std::string>& cols, const json& rec) {
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) os << ',';
    if (!rec.contains(cols[i]) || rec[cols[i]].is_null()) continue;
    const auto& v = rec[cols[i]];
    os << (v.is_string() ? v.get<std::string>() : v.dump());
  }
  os << '\n';
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string quantity;
  double gamma = 1.0, mu = 1.0;
  std::string alphas, alpha, z, alpha_p, eps;
  bool dual = false, csv = false;
  double tol = 1e-12;
};

int run_eval(const EvalArgs& a) {
  LiouvilleParams p;
  p.gamma = a.gamma;
  p.mu = a.mu;
  p.validate();
  const UpsilonConfig ucfg = p.upsilon_config(a.tol);
  ordered_json rec;
  rec["quantity"] = a.quantity;
  rec["gamma"] = a.gamma;
  rec["mu"] = a.mu;
  auto need = [](const std::string& v, const char* flag) {
    if (v.empty()) throw PreconditionError(std::string("eval: missing ") + flag);
    return v;
  };
  cplx value;
  json err = nullptr;
  if (a.quantity == "dozz") {
    const WeightTriple w = parse_triple(need(a.alphas, "--alphas"));
    rec["alphas"] = need(a.alphas, "--alphas");
    const QuadResult r = c_dozz(w, p, ucfg);
    value = r.value;
    err = r.err_bound;
  } else if (a.quantity == "rdozz") {
    rec["alpha"] = need(a.alpha, "--alpha");
    value = r_dozz(parse_complex(a.alpha, "alpha"), p);
  } else if (a.quantity == "upsilon") {
    const cplx z = parse_point(need(a.z, "--z"), "z");
    rec["z"] = a.z;
    const QuadResult r = upsilon(z, ucfg);
    value = r.value;
    err = r.err_bound;
  } else if (a.quantity == "coefA") {
    const WeightTriple w = parse_triple(need(a.alphas, "--alphas"));
    rec["alphas"] = a.alphas;
    rec["chi"] = a.dual ? "2/gamma" : "gamma/2";
    value = shift_coefficient_A(a.dual ? 2.0 / a.gamma : a.gamma / 2.0, w, p);
  } else if (a.quantity == "coefB") {
    rec["alpha"] = need(a.alpha, "--alpha");
    value = b_coefficient(parse_complex(a.alpha, "alpha"), p);
  } else if (a.quantity == "coefT" || a.quantity == "coefTtilde") {
    const cplx al = parse_complex(need(a.alpha, "--alpha"), "alpha");
    const cplx ap = parse_complex(need(a.alpha_p, "--alpha-p"), "alpha-p");
    const cplx e = parse_complex(need(a.eps, "--eps"), "eps");
    rec["alpha"] = a.alpha;
    rec["alpha_p"] = a.alpha_p;
    rec["eps"] = a.eps;
    if (a.quantity == "coefT") {
      const CrossingT t = crossing_T(ap, e, al, p);
      value = t.T;
      rec["value_bar"] = cjson(t.T_bar);
    } else {
      value = crossing_T_tilde(al, e, ap, p);
    }
  } else {
    throw PreconditionError("eval: unknown quantity " + a.quantity);
  }
  rec["value"] = cjson(value);
  rec["err_bound"] = err;
  rec["t_cut"] = ucfg.t_cut;
  rec["n_nodes"] = ucfg.n_nodes;
  rec["tol"] = ucfg.tol;
  rec["code_version"] = kCodeVersion;
  if (a.csv) {
    std::vector<std::string> cols;
    for (auto it = rec.begin(); it != rec.end(); ++it) cols.push_back(it.key());
    for (std::size_t i = 0; i < cols.size(); ++i) std::cout << (i ? "," : "") << cols[i];
    std::cout << '\n';
    for (auto& [k, v] : rec.items())
      if (v.is_array()) v = std::to_string(v[0].get<double>()) + (v[1].get<double>() < 0 ? "" : "+") +
                            std::to_string(v[1].get<double>()) + "i";
    write_csv_row(std::cout, cols, json(rec));
  } else {
    std::cout << rec.dump() << '\n';
  }
  return kPass;
}

// ---------------------------------------------------------------- check

struct CheckArgs {
  std::string suite = "all";
  double gamma = 1.0, mu = 1.0, tol = 1e-8;
  int points = 50;
  std::uint64_t seed = 7;
  bool json_out = false;
};

int run_check(const CheckArgs& a) {
  if (a.suite != "specfun" && a.suite != "dozz" && a.suite != "all")
    throw PreconditionError("check: suite must be specfun, dozz or all");
  if (a.points < 1) throw PreconditionError("check: --points must be >= 1");
  LiouvilleParams p;
  p.gamma = a.gamma;
  p.mu = a.mu;
  p.validate();
  std::vector<IdentityReport> reps;
  if (a.suite != "dozz") reps = specfun_suite(a.gamma, a.points, a.seed, a.tol);
  if (a.suite != "specfun") {
    auto d = identity_suite(p, a.points, a.seed, a.tol);
    reps.insert(reps.end(), d.begin(), d.end());
  }
  std::map<std::string, std::pair<int, int>> by_name;
  std::map<std::string, double> worst;
  int failed = 0;
  for (const auto& r : reps) {
    auto& c = by_name[r.name];
    ++c.second;
    if (r.pass) ++c.first;
    else ++failed;
    worst[r.name] = std::max(worst[r.name], r.residual);
    if (a.json_out) std::cout << r.to_json() << '\n';
    else if (!r.pass)
      std::printf("%s %-28s residual %.3e > tol %.1e at %s%s%s\n", paint("FAIL", false).c_str(), r.name.c_str(),
                  r.residual, r.tol, r.point.c_str(), r.note.empty() ? "" : " ", r.note.c_str());
  }
  if (!a.json_out) {
    for (const auto& [name, c] : by_name)
      std::printf("%s %-28s %d/%d  max residual %.3e\n", paint(c.first == c.second ? "ok  " : "FAIL", c.first == c.second).c_str(),
                  name.c_str(), c.first, c.second, worst[name]);
    std::printf("%zu checks, %d failed (tol %.1e)\n", reps.size(), failed, a.tol);
  }
  return failed ? kFail : kPass;
}

// ---------------------------------------------------------------- mc

const std::vector<std::string> kMcKeys = {"gamma", "mu",  "alphas", "alpha", "alpha2", "alpha3", "alpha0",
                                          "z",     "eps", "p",      "rbar-samples", "samples", "seed", "batch", "bar"};

using Params = std::map<std::string, std::string>;

void apply_grid(MCConfig& c, const std::string& key, const std::string& val) {
  const double v = parse_real(val, key);
  const std::map<std::string, std::function<void()>> set = {
      {"engine.n_modes", [&] { c.engine.n_modes = int(v); }},
      {"engine.n_theta", [&] { c.engine.n_theta = int(v); }},
      {"engine.ds", [&] { c.engine.ds = v; }},
      {"engine.band_levels", [&] { c.engine.band_levels = int(v); }},
      {"engine.band_halfwidth", [&] { c.engine.band_halfwidth = v; }},
      {"engine.ball_radius", [&] { c.engine.ball_radius = v; }},
      {"engine.ball_modes", [&] { c.engine.ball_modes = int(v); }},
      {"engine.ball_ntheta", [&] { c.engine.ball_ntheta = int(v); }},
      {"engine.envelope_drop", [&] { c.engine.envelope_drop = v; }},
      {"engine.s_cap", [&] { c.engine.s_cap = v; }},
      {"reflection.n_modes", [&] { c.reflection.n_modes = int(v); }},
      {"reflection.n_theta", [&] { c.reflection.n_theta = int(v); }},
      {"reflection.ds", [&] { c.reflection.ds = v; }},
      {"reflection.exact_path", [&] { c.reflection.exact_path = v != 0.0; }},
      {"reflection.em_dt", [&] { c.reflection.em_dt = v; }},
      {"reflection.envelope_drop", [&] { c.reflection.envelope_drop = v; }},
      {"reflection.horizon", [&] { c.reflection.horizon = v; }},
      {"reflection.s_cap", [&] { c.reflection.s_cap = v; }},
      {"local.n_modes", [&] { c.local.n_modes = int(v); }},
      {"local.n_theta", [&] { c.local.n_theta = int(v); }},
      {"local.du", [&] { c.local.du = v; }},
      {"local.envelope_drop", [&] { c.local.envelope_drop = v; }},
      {"local.u_cap", [&] { c.local.u_cap = v; }},
  };
  const auto it = set.find(key);
  if (it == set.end()) throw PreconditionError("unknown grid key " + key);
  it->second();
}

struct McRun {
  std::vector<ordered_json> records;
  std::string grid;
  bool blowup = false;
};

ordered_json estimate_record(const std::string& quantity, const MCEstimate& e, json dozz) {
  ordered_json r;
  r["quantity"] = quantity;
  r["mean"] = e.mean;
  r["stderr"] = e.stderr_;
  r["n"] = e.n;
  r["dozz_value"] = dozz;
  r["z_score"] = dozz.is_null() ? json(nullptr) : json(e.z_score(dozz.get<double>()));
  r["seed"] = e.seed;
  r["variance_blowup"] = e.variance_blowup;
  r["capped"] = e.capped;
  return r;
}

ordered_json stat_record(const std::string& quantity, double mean, double se, long n, double ref, std::uint64_t seed) {
  ordered_json r;
  r["quantity"] = quantity;
  r["mean"] = mean;
  r["stderr"] = se;
  r["n"] = n;
  r["dozz_value"] = ref;
  r["z_score"] = (mean - ref) / se;
  r["seed"] = seed;
  return r;
}

// Inputs go first so the record reads quantity, inputs..., statistics.
ordered_json with_inputs(ordered_json rec, const ordered_json& inputs) {
  ordered_json out;
  out["quantity"] = rec["quantity"];
  for (auto& [k, v] : inputs.items()) out[k] = v;
  for (auto& [k, v] : rec.items())
    if (k != "quantity") out[k] = v;
  return out;
}

McRun execute_mc(const std::string& experiment, const Params& prm, int workers) {
  auto get = [&](const std::string& k) -> std::string {
    const auto it = prm.find(k);
    if (it == prm.end() || it->second.empty()) throw PreconditionError("mc " + experiment + ": missing --" + k);
    return it->second;
  };
  auto has = [&](const std::string& k) { return prm.count(k) && !prm.at(k).empty(); };
  LiouvilleParams p;
  p.gamma = parse_real(get("gamma"), "gamma");
  p.mu = parse_real(get("mu"), "mu");
  p.validate();
  MCConfig cfg;
  cfg.n_samples = long(parse_real(get("samples"), "samples"));
  cfg.master_seed = std::stoull(get("seed"));
  cfg.batch = int(parse_real(get("batch"), "batch"));
  cfg.workers = workers;
  for (const auto& [k, v] : prm)
    if (k.find('.') != std::string::npos) apply_grid(cfg, k, v);
  cfg.validate();

  McRun run;
  run.grid = cfg.to_json();
  ordered_json in;
  in["gamma"] = p.gamma;
  in["mu"] = p.mu;
  const auto ucfg = p.upsilon_config();
  if (experiment == "three-point") {
    const WeightTriple w = parse_triple(get("alphas"));
    in["alphas"] = get("alphas");
    const MCEstimate e = estimate_three_point(w, p, cfg);
    run.records.push_back(with_inputs(estimate_record("three-point", e, c_dozz(w, p, ucfg).value.real()), in));
    run.blowup = e.variance_blowup;
  } else if (experiment == "reflection") {
    const double alpha = parse_real(get("alpha"), "alpha");
    const bool bar = has("bar") && get("bar") != "0" && get("bar") != "false";
    in["alpha"] = alpha;
    const MCEstimate e = bar ? estimate_reflection_bar(alpha, p, cfg) : estimate_reflection(alpha, p, cfg);
    const double ref = bar ? r_bar_dozz(alpha, p) : r_dozz(alpha, p).real();
    run.records.push_back(with_inputs(estimate_record(bar ? "reflection-bar" : "reflection", e, ref), in));
    run.blowup = e.variance_blowup;
  } else if (experiment == "two-point-limit") {
    const double a3 = parse_real(has("alpha3") ? get("alpha3") : get("alpha"), "alpha3");
    const double a2 = has("alpha2") ? parse_real(get("alpha2"), "alpha2") : a3;
    const auto eps = parse_list(get("eps"), "eps");
    in["alpha2"] = a2;
    in["alpha3"] = a3;
    const TwoPointLimitReport r = estimate_two_point_limit(a2, a3, eps, p, cfg);
    for (std::size_t i = 0; i < r.eps.size(); ++i) {
      ordered_json ini = in;
      ini["eps"] = r.eps[i];
      run.records.push_back(with_inputs(estimate_record("two-point-scaled", r.scaled[i], r.dozz_scaled[i]), ini));
      run.blowup = run.blowup || r.scaled[i].variance_blowup;
    }
    ordered_json lim = stat_record("two-point-limit", r.limit, r.limit_se, cfg.n_samples, r.target, cfg.master_seed);
    lim["prefactor"] = r.prefactor;
    lim["chi2"] = r.fit.chi2;
    run.records.push_back(with_inputs(lim, in));
  } else if (experiment == "tail") {
    const double alpha = parse_real(get("alpha"), "alpha");
    const cplx z = parse_point(get("z"), "z");
    const long nr = long(parse_real(get("rbar-samples"), "rbar-samples"));
    in["alpha"] = alpha;
    in["z"] = get("z");
    const TailFitReport r = fit_tail_one_insertion(alpha, z, nullptr, p, cfg, nr);
    ordered_json s = stat_record("tail-slope", r.fitted_slope, r.slope_ci, r.n, r.theory_slope, cfg.master_seed);
    ordered_json am = stat_record("tail-amplitude", r.amplitude, r.amplitude_ci, r.n, r.theory_amplitude, cfg.master_seed);
    am["ratio"] = r.ratio();
    am["rbar"] = r.rbar;
    s["x_min"] = am["x_min"] = r.x_min;
    s["x_max"] = am["x_max"] = r.x_max;
    s["min_exceedances"] = am["min_exceedances"] = r.min_exceedances;
    run.records.push_back(with_inputs(s, in));
    run.records.push_back(with_inputs(am, in));
  } else if (experiment == "four-point") {
    const WeightTriple w = parse_triple(get("alphas"));
    const cplx z = parse_point(get("z"), "z");
    const double a0 = has("alpha0") ? parse_real(get("alpha0"), "alpha0") : -p.gamma / 2.0;
    in["alphas"] = get("alphas");
    in["alpha0"] = a0;
    in["z"] = get("z");
    const MCEstimate e = estimate_four_point(z, w, a0, p, cfg);
    const double ref = four_point_rhs(z, w, a0, p, ucfg).value.value.real();
    run.records.push_back(with_inputs(estimate_record("four-point", e, ref), in));
  } else if (experiment == "moments") {
    const double alpha = has("alpha") ? parse_real(get("alpha"), "alpha") : 0.0;
    const auto ps = parse_list(get("p"), "p");
    const auto eps = parse_list(get("eps"), "eps");
    const cplx z = parse_point(get("z"), "z");
    in["alpha"] = alpha;
    in["z"] = get("z");
    const MomentScalingReport r = moment_scaling_report(p.gamma, alpha, ps, eps, cfg, z);
    for (const auto& l : r.lines) {
      ordered_json ini = in;
      ini["p"] = l.p;
      for (std::size_t i = 0; i < l.eps.size(); ++i) {
        ordered_json ine = ini;
        ine["eps"] = l.eps[i];
        ordered_json rec;
        rec["quantity"] = "log-moment";
        rec["mean"] = l.log_moment[i];
        rec["stderr"] = l.log_moment_se[i];
        rec["n"] = cfg.n_samples;
        rec["dozz_value"] = nullptr;
        rec["z_score"] = nullptr;
        rec["seed"] = cfg.master_seed;
        run.records.push_back(with_inputs(rec, ine));
      }
      run.records.push_back(with_inputs(
          stat_record("moment-slope", l.fit.slope, l.fit.se_slope, cfg.n_samples, l.theory_slope, cfg.master_seed), ini));
    }
  } else {
    throw PreconditionError("mc: unknown experiment " + experiment);
  }
  return run;
}

Params mc_defaults(const std::string& experiment) {
  Params d = {{"gamma", "1"}, {"mu", "1"}, {"samples", "1000"}, {"seed", "1"}, {"batch", "64"}};
  if (experiment == "two-point-limit") d["eps"] = "0.4,0.3,0.2";
  if (experiment == "tail") {
    d["z"] = "3,0";
    d["rbar-samples"] = "0";
  }
  if (experiment == "four-point") d["z"] = "0.3,0";
  if (experiment == "moments") {
    d["p"] = "1,2";
    d["eps"] = "1,0.5,0.25,0.125";
    d["z"] = "10,0";
  }
  return d;
}

const std::vector<std::string> kCsvTail = {"mean", "stderr", "n", "dozz_value", "z_score", "seed", "manifest_hash"};

int write_mc(const std::string& experiment, const Params& prm, int workers, const std::string& out,
             const std::string& command) {
  RunManifest man;
  man.command = command;
  man.request = json{{"experiment", experiment}, {"params", prm}}.dump();
  man.seed = std::stoull(prm.at("seed"));
  man.started = utc_timestamp();
  const McRun run = execute_mc(experiment, prm, workers);
  man.finished = utc_timestamp();
  man.grid = run.grid;
  const std::string hash = man.hash();

  std::ofstream jl(out + ".jsonl"), csv(out + ".csv");
  if (!jl || !csv) throw PreconditionError("cannot write output files with prefix " + out);
  std::vector<std::string> cols = {"quantity"};
  for (const auto& r : run.records)
    for (auto& [k, v] : r.items())
      if (std::find(kCsvTail.begin(), kCsvTail.end(), k) == kCsvTail.end() && std::find(cols.begin(), cols.end(), k) == cols.end())
        cols.push_back(k);
  cols.insert(cols.end(), kCsvTail.begin(), kCsvTail.end());
  for (std::size_t i = 0; i < cols.size(); ++i) csv << (i ? "," : "") << cols[i];
  csv << '\n';
  for (auto r : run.records) {
    r["manifest_hash"] = hash;
    jl << r.dump() << '\n';
    json flat = r;
    for (auto& [k, v] : flat.items())
      if (v.is_string() && v.get<std::string>().find(',') != std::string::npos) v = "\"" + v.get<std::string>() + "\"";
    write_csv_row(csv, cols, flat);
    std::printf("%-18s %.8g +- %.3g (n=%s)", r["quantity"].get<std::string>().c_str(), r["mean"].get<double>(),
                r["stderr"].get<double>(), r["n"].dump().c_str());
    if (!r["dozz_value"].is_null())
      std::printf("  ref %.8g  z %s", r["dozz_value"].get<double>(), r["z_score"].dump().c_str());
    std::printf("\n");
  }
  man.save(out + ".manifest.json");
  std::printf("results %s.jsonl  manifest %s.manifest.json  hash %s\n", out.c_str(), out.c_str(), hash.c_str());
  if (run.blowup) {
    std::fprintf(stderr, "variance blow-up: per-sample variance is infinite at these weights\n");
    return kNumerical;
  }
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Liouville structure constants: DOZZ evaluation, identity checks and chaos Monte Carlo"};
  app.require_subcommand(1);

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate an analytic quantity");
  eval->add_option("quantity", ea.quantity, "dozz|rdozz|upsilon|coefA|coefB|coefT|coefTtilde")
      ->required()
      ->check(CLI::IsMember({"dozz", "rdozz", "upsilon", "coefA", "coefB", "coefT", "coefTtilde"}));
  eval->add_option("--gamma", ea.gamma);
  eval->add_option("--mu", ea.mu);
  eval->add_option("--alphas", ea.alphas, "a1,a2,a3 (complex as 1.2+0.3i)");
  eval->add_option("--alpha", ea.alpha);
  eval->add_option("--alpha-p", ea.alpha_p);
  eval->add_option("--eps", ea.eps);
  eval->add_option("--z", ea.z, "re,im");
  eval->add_flag("--dual", ea.dual, "coefA at chi = 2/gamma");
  eval->add_option("--tol", ea.tol);
  eval->add_flag("--csv", ea.csv);

  CheckArgs ca;
  auto* check = app.add_subcommand("check", "Run an identity suite");
  check->add_option("--suite", ca.suite)->check(CLI::IsMember({"specfun", "dozz", "all"}));
  check->add_option("--gamma", ca.gamma);
  check->add_option("--mu", ca.mu);
  check->add_option("--points", ca.points);
  check->add_option("--seed", ca.seed);
  check->add_option("--tol", ca.tol);
  check->add_flag("--json", ca.json_out);

  std::string experiment, config_file, replay, out = "mc_result";
  int workers = 1;
  std::vector<std::string> grid;
  Params flags;
  auto* mc = app.add_subcommand("mc", "Run a Monte Carlo experiment");
  mc->add_option("experiment", experiment, "three-point|reflection|two-point-limit|tail|four-point|moments")
      ->check(CLI::IsMember({"three-point", "reflection", "two-point-limit", "tail", "four-point", "moments"}));
  std::map<std::string, CLI::Option*> mc_opts;
  for (const auto& k : kMcKeys) {
    if (k == "bar") mc_opts[k] = mc->add_flag("--bar", "reflection: unit-volume Rbar instead of R");
    else mc_opts[k] = mc->add_option("--" + k, flags[k]);
  }
  mc->add_option("--grid", grid, "key=value sampler setting, repeatable (e.g. engine.n_modes=16)");
  mc->add_option("--config", config_file, "key = value file; flags take precedence");
  mc->add_option("--replay", replay, "rerun the request stored in a manifest");
  mc->add_option("--out", out, "output prefix for .jsonl, .csv and .manifest.json");
  mc->add_option("--workers", workers);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kPass : kPrecondition;
  }

  try {
    if (*eval) return run_eval(ea);
    if (*check) return run_check(ca);
    if (!replay.empty()) {
      const RunManifest m = RunManifest::load(replay);
      const json req = json::parse(m.request);
      return write_mc(req.at("experiment"), req.at("params").get<Params>(), workers, out, m.command);
    }
    if (experiment.empty()) throw PreconditionError("mc: missing experiment");
    Params prm = mc_defaults(experiment);
    if (!config_file.empty())
      for (const auto& [k, v] : read_config(config_file)) {
        if (k.find('.') == std::string::npos && std::find(kMcKeys.begin(), kMcKeys.end(), k) == kMcKeys.end())
          throw PreconditionError("config: unknown key " + k);
        prm[k] = v;
      }
    for (const auto& g : grid) {
      const auto eq = g.find('=');
      if (eq == std::string::npos) throw PreconditionError("--grid expects key=value");
      prm[trim(g.substr(0, eq))] = trim(g.substr(eq + 1));
    }
    for (const auto& k : kMcKeys)
      if (mc_opts[k]->count()) prm[k] = k == "bar" ? "1" : flags[k];
    return write_mc(experiment, prm, workers, out, "mc " + experiment);
  } catch (const PreconditionError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kPrecondition;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kPrecondition;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: bad number (%s)\n", e.what());
    return kPrecondition;
  }
}
