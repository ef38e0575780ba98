// Command-line front end: JSON configs in, CSV/JSON reports out, script-stable
// exit codes. Exit 0 on success, 2 when a guaranteed inequality fails inside a
// report, 3 when a config demanded feasibility and the instance is infeasible,
// 4 for config/parse problems, 5 when an enumeration cap is hit.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "condldp/empirical.hpp"
#include "condldp/errors.hpp"
#include "condldp/gallery.hpp"
#include "condldp/harness.hpp"
#include "condldp/kernels.hpp"
#include "condldp/logdomain.hpp"
#include "condldp/measures.hpp"
#include "condldp/rate.hpp"
#include "condldp/rounding.hpp"
#include "condldp/sampling.hpp"
#include "condldp/serialization.hpp"

using namespace condldp;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitConfig = 4;
constexpr int kExitResource = 5;

struct CommonOpts {
  std::string config_path;
  std::string out_path;
  std::string mode = "double";
  std::uint64_t seed = default_seed;
  std::uint64_t cap_enum = 0;    // 0 keeps the library default
  std::uint64_t cap_tables = 0;
  bool timings = false;
};

void add_common_options(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--config", o.config_path, "JSON config file");
  sub->add_option("--out", o.out_path, "output file (default: stdout)");
  sub->add_option("--mode", o.mode, "arithmetic mode: double or exact")
      ->check(CLI::IsMember({"double", "exact"}));
  sub->add_option("--seed", o.seed, "RNG seed for seeded suites");
  sub->add_option("--cap-enum", o.cap_enum, "simplex enumeration cap");
  sub->add_option("--cap-tables", o.cap_tables, "contingency-table node cap");
  sub->add_flag("--timings", o.timings, "fill wall_ms columns (off keeps output byte-stable)");
}

EnumerationLimits limits_from(const CommonOpts& o) {
  EnumerationLimits lim;
  if (o.cap_enum > 0) lim.max_elements = o.cap_enum;
  if (o.cap_tables > 0) lim.max_table_nodes = o.cap_tables;
  return lim;
}

int emit_error(const std::string& category, const std::string& message, int code) {
  json err;
  err["error"]["category"] = category;
  err["error"]["message"] = message;
  err["error"]["exit_code"] = code;
  std::cerr << err.dump() << "\n";
  return code;
}

json load_json_file(const std::string& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw argument_error(what + ": cannot open \"" + path + "\"");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw argument_error(what + ": \"" + path + "\" is not valid JSON: " + e.what());
  }
}

// The fingerprint covers the effective inputs (file contents, not paths), the
// subcommand, and every knob that changes output.
std::string fingerprint_for(const std::string& subcommand, const CommonOpts& o, const json& payload) {
  json eff;
  eff["subcommand"] = subcommand;
  eff["mode"] = o.mode;
  eff["seed"] = o.seed;
  eff["cap_enum"] = o.cap_enum;
  eff["cap_tables"] = o.cap_tables;
  eff["payload"] = payload;
  return config_fingerprint(eff);
}

void write_text(const CommonOpts& o, const std::string& text) {
  if (o.out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(o.out_path, std::ios::binary);
  if (!out) throw argument_error("--out: cannot open \"" + o.out_path + "\" for writing");
  out << text;
}

json json_num(double v) {
  if (std::isnan(v)) return json("nan");
  if (v == pos_infinity) return json("inf");
  if (v == neg_infinity) return json("-inf");
  return json(v);
}

std::vector<long> parse_long_list(const std::string& text, const std::string& what) {
  std::vector<long> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      long v = std::stol(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw argument_error(what + ": \"" + item + "\" is not an integer");
    }
  }
  if (out.empty()) throw argument_error(what + ": empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      double v = std::stod(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw argument_error(what + ": \"" + item + "\" is not a number");
    }
  }
  if (out.empty()) throw argument_error(what + ": empty list");
  return out;
}

std::string join_counts(const std::vector<long>& counts) {
  std::string out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (i) out += ':';
    out += std::to_string(counts[i]);
  }
  return out;
}

// Resolve a zeta argument: either a full empirical object under "zeta",
// or bare counts under "zeta_counts" with the alphabet borrowed from lambda's
// columns and n = sum of counts.
EmpiricalMeasure resolve_zeta(const json& cfg, const Alphabet& cols, const std::string& where) {
  if (cfg.contains("zeta")) return parse_empirical(cfg["zeta"], where + ".zeta");
  if (!cfg.contains("zeta_counts"))
    throw argument_error(where + ": needs \"zeta\" or --zeta counts");
  const json& cj = cfg["zeta_counts"];
  std::vector<long> counts;
  long n = 0;
  for (const auto& e : cj) {
    counts.push_back(e.get<long>());
    n += counts.back();
  }
  return EmpiricalMeasure(cols, n, counts);
}

Dist dist_from_weights(const json& w, const Alphabet& alphabet, const std::string& where) {
  std::vector<double> weights;
  for (const auto& e : w) weights.push_back(e.get<double>());
  if (weights.size() != alphabet.size())
    throw argument_error(where + ": expected " + std::to_string(alphabet.size()) + " weights");
  return Dist(alphabet, weights);
}

// --- enumerate ----------------------------------------------------------------

int run_enumerate(const CommonOpts& o, const json& cfg) {
  if (!cfg.contains("n")) throw argument_error("enumerate: config needs \"n\"");
  long n = cfg["n"].get<long>();
  if (!cfg.contains("dist")) throw argument_error("enumerate: config needs \"dist\"");
  std::string hash = fingerprint_for("enumerate", o, cfg);
  EnumerationLimits lim = limits_from(o);

  std::string out = "# config_hash=" + hash + " mode=" + o.mode + " seed=" + std::to_string(o.seed) + "\n";
  if (o.mode == "exact") {
    RationalDist d = parse_rational_dist(cfg["dist"], "enumerate.dist");
    const Alphabet& a = d.alphabet();
    for (std::size_t i = 0; i < a.size(); ++i) out += "count_" + a.label(i) + ",";
    out += "probability\n";
    for (const EmpiricalMeasure& m : enumerate_empirical(n, a, lim)) {
      for (long c : m.counts()) out += std::to_string(c) + ",";
      out += rational_to_string(multinomial_prob_exact(m.counts(), n, d.weights())) + "\n";
    }
  } else {
    Dist d = parse_dist(cfg["dist"], "enumerate.dist");
    const Alphabet& a = d.alphabet();
    for (std::size_t i = 0; i < a.size(); ++i) out += "count_" + a.label(i) + ",";
    out += "probability\n";
    for (const EmpiricalMeasure& m : enumerate_empirical(n, a, lim)) {
      for (long c : m.counts()) out += std::to_string(c) + ",";
      out += format_double(std::exp(log_multinomial_prob(m, d))) + "\n";
    }
  }
  write_text(o, out);
  return kExitOk;
}

// --- kernel ---------------------------------------------------------------------

int run_kernel(const CommonOpts& o, const json& cfg) {
  if (!cfg.contains("lambda")) throw argument_error("kernel: config needs \"lambda\"");
  std::string hash = fingerprint_for("kernel", o, cfg);
  EnumerationLimits lim = limits_from(o);

  std::string out = "# config_hash=" + hash + " mode=" + o.mode + " seed=" + std::to_string(o.seed) + "\n";
  auto header = [&](const Alphabet& ra) {
    for (std::size_t i = 0; i < ra.size(); ++i) out += "count_" + ra.label(i) + ",";
    out += "probability,log_probability\n";
  };

  if (o.mode == "exact") {
    RationalJointDist lambda = parse_rational_joint(cfg["lambda"], "kernel.lambda");
    EmpiricalMeasure zeta = resolve_zeta(cfg, lambda.col_alphabet(), "kernel");
    long n = zeta.n();
    if (cfg.contains("n") && cfg["n"].get<long>() != n)
      throw argument_error("kernel: n = " + std::to_string(cfg["n"].get<long>()) +
                           " disagrees with zeta counts summing to " + std::to_string(n));
    RationalKernel theta = conditional_theta(lambda);
    header(lambda.row_alphabet());
    for (const EmpiricalMeasure& phi : enumerate_empirical(n, lambda.row_alphabet(), lim)) {
      Rational p = eta_point_mass_exact(n, zeta, phi, theta, lim);
      for (long c : phi.counts()) out += std::to_string(c) + ",";
      out += rational_to_string(p) + "," + format_double(std::log(rational_to_double(p))) + "\n";
    }
  } else {
    JointDist lambda = parse_joint(cfg["lambda"], "kernel.lambda");
    EmpiricalMeasure zeta = resolve_zeta(cfg, lambda.col_alphabet(), "kernel");
    long n = zeta.n();
    if (cfg.contains("n") && cfg["n"].get<long>() != n)
      throw argument_error("kernel: n = " + std::to_string(cfg["n"].get<long>()) +
                           " disagrees with zeta counts summing to " + std::to_string(n));
    Kernel theta = conditional_theta(lambda);
    header(lambda.row_alphabet());
    for (const EmpiricalMeasure& phi : enumerate_empirical(n, lambda.row_alphabet(), lim)) {
      double p = eta_point_mass(n, zeta, phi, theta, lim);
      for (long c : phi.counts()) out += std::to_string(c) + ",";
      out += format_double(p) + "," + format_double(std::log(p)) + "\n";
    }
  }
  write_text(o, out);
  return kExitOk;
}

// --- rate -----------------------------------------------------------------------

int run_rate(const CommonOpts& o, const json& cfg) {
  if (!cfg.contains("lambda")) throw argument_error("rate: config needs \"lambda\"");
  if (!cfg.contains("psi")) throw argument_error("rate: config needs \"psi\"");
  std::string hash = fingerprint_for("rate", o, cfg);
  JointDist lambda = parse_joint(cfg["lambda"], "rate.lambda");
  Dist psi = cfg["psi"].is_array() ? dist_from_weights(cfg["psi"], lambda.col_alphabet(), "rate.psi")
                                   : parse_dist(cfg["psi"], "rate.psi");
  bool require_feasible = cfg.value("require_feasible", false);

  json rep;
  rep["config_hash"] = hash;
  rep["mode"] = o.mode;
  rep["seed"] = o.seed;

  double value;
  if (cfg.contains("set")) {
    SetDescriptor set = parse_set_descriptor(cfg["set"], lambda.row_alphabet(), "rate.set");
    SetVariant variant = SetVariant::as_given;
    std::string vname = cfg.value("variant", "as_given");
    if (vname == "closure")
      variant = SetVariant::closure;
    else if (vname == "interior")
      variant = SetVariant::interior;
    else if (vname != "as_given")
      throw argument_error("rate.variant: \"" + vname + "\" is not one of as_given, closure, interior");
    SetRateResult r = inf_rate_over_set(lambda, psi, set, variant);
    rep["kind"] = "set_infimum";
    rep["variant"] = vname;
    rep["value"] = json_num(r.value);
    rep["argmin"] = r.argmin ? dist_to_json(*r.argmin) : json(nullptr);
    rep["evaluations"] = r.evaluations;
    value = r.value;
  } else {
    if (!cfg.contains("phi")) throw argument_error("rate: config needs \"phi\" or \"set\"");
    Dist phi = cfg["phi"].is_array() ? dist_from_weights(cfg["phi"], lambda.row_alphabet(), "rate.phi")
                                     : parse_dist(cfg["phi"], "rate.phi");
    RateResult r = rate_I(lambda, psi, phi);
    double base = inf_over_s_margin(lambda, psi).value;
    rep["kind"] = "point";
    rep["value"] = json_num(r.value);
    rep["coupling_value"] = json_num(r.value == pos_infinity ? pos_infinity : r.value + base);
    rep["margin_base"] = json_num(base);
    rep["minimizer"] = r.minimizer ? joint_to_json(*r.minimizer) : json(nullptr);
    rep["margin_residual"] = json_num(r.margin_residual);
    rep["iterations"] = r.iterations;
    rep["converged"] = r.converged;
    value = r.value;
  }
  rep["feasible"] = value != pos_infinity;

  write_text(o, rep.dump(2) + "\n");
  if (require_feasible && value == pos_infinity)
    return emit_error("infeasible", "rate: no coupling exists and the config set require_feasible",
                      kExitInfeasible);
  return kExitOk;
}

// --- round ----------------------------------------------------------------------

int run_round(const CommonOpts& o, const json& cfg) {
  for (const char* key : {"xi", "lambda"})
    if (!cfg.contains(key)) throw argument_error(std::string("round: config needs \"") + key + "\"");
  std::string hash = fingerprint_for("round", o, cfg);
  JointDist xi = parse_joint(cfg["xi"], "round.xi");
  JointDist lambda = parse_joint(cfg["lambda"], "round.lambda");
  EmpiricalMeasure zeta = resolve_zeta(cfg, lambda.col_alphabet(), "round");

  MarginMatchReport r = match_s_margin_report(xi, zeta, lambda);
  bool joint_ok = r.joint_distance <= r.joint_bound + 1e-12;
  bool row_ok = r.row_marginal_distance <= r.row_marginal_bound + 1e-12;

  json nu_rows = json::array();
  for (std::size_t row = 0; row < r.nu.num_rows(); ++row) {
    json jr = json::array();
    for (std::size_t s = 0; s < r.nu.num_cols(); ++s) jr.push_back(r.nu.at(row, s));
    nu_rows.push_back(std::move(jr));
  }
  json rep;
  rep["config_hash"] = hash;
  rep["mode"] = o.mode;
  rep["seed"] = o.seed;
  rep["nu"]["rows"] = r.nu.row_alphabet().labels();
  rep["nu"]["cols"] = r.nu.col_alphabet().labels();
  rep["nu"]["n"] = r.nu.n();
  rep["nu"]["counts"] = std::move(nu_rows);
  rep["kappa"] = json_num(r.kappa);
  rep["margins_exact"] = r.margins_exact;
  rep["dominated_by_lambda"] = r.dominated_by_lambda;
  rep["joint_distance"] = json_num(r.joint_distance);
  rep["joint_bound"] = json_num(r.joint_bound);
  rep["joint_within_bound"] = joint_ok;
  rep["row_marginal_distance"] = json_num(r.row_marginal_distance);
  rep["row_marginal_bound"] = json_num(r.row_marginal_bound);
  rep["row_marginal_within_bound"] = row_ok;
  write_text(o, rep.dump(2) + "\n");

  if (!(r.margins_exact && r.dominated_by_lambda && joint_ok && row_ok))
    return emit_error("violation", "round: a rounding guarantee failed; see the report", kExitViolation);
  return kExitOk;
}

// --- scenario plumbing shared by sanov and scan -----------------------------------

ScenarioConfig scenario_from_json(const json& cfg, const CommonOpts& o, const std::string& where) {
  for (const char* key : {"lambda", "psi", "event", "n_values"})
    if (!cfg.contains(key)) throw argument_error(where + ": config needs \"" + key + "\"");
  JointDist lambda = parse_joint(cfg["lambda"], where + ".lambda");
  Dist psi = cfg["psi"].is_array() ? dist_from_weights(cfg["psi"], lambda.col_alphabet(), where + ".psi")
                                   : parse_dist(cfg["psi"], where + ".psi");
  SetDescriptor event = parse_set_descriptor(cfg["event"], lambda.row_alphabet(), where + ".event");
  std::vector<long> n_values;
  for (const auto& e : cfg["n_values"]) n_values.push_back(e.get<long>());

  PsiSequenceRule rule = PsiSequenceRule::nearest();
  if (cfg.contains("psi_rule") && !cfg["psi_rule"].is_string()) {
    const json& pr = cfg["psi_rule"];
    if (!pr.contains("explicit"))
      throw argument_error(where + ".psi_rule: expected \"nearest\" or {\"explicit\": [...]}");
    std::vector<EmpiricalMeasure> seq;
    std::size_t i = 0;
    for (const auto& counts_json : pr["explicit"]) {
      std::vector<long> counts;
      long sum = 0;
      for (const auto& c : counts_json) {
        counts.push_back(c.get<long>());
        sum += counts.back();
      }
      if (i >= n_values.size() || sum != n_values[i])
        throw argument_error(where + ".psi_rule.explicit: entry " + std::to_string(i) +
                             " does not sum to its n value");
      seq.emplace_back(lambda.col_alphabet(), sum, counts);
      ++i;
    }
    rule = PsiSequenceRule::explicit_sequence(std::move(seq));
  } else if (cfg.contains("psi_rule") && cfg["psi_rule"].get<std::string>() != "nearest") {
    throw argument_error(where + ".psi_rule: \"" + cfg["psi_rule"].get<std::string>() +
                         "\" is not \"nearest\"");
  }

  ScenarioTolerances tol;
  if (cfg.contains("tolerances")) {
    const json& t = cfg["tolerances"];
    tol.kernel_tol = t.value("kernel_tol", tol.kernel_tol);
    tol.rate_tol = t.value("rate_tol", tol.rate_tol);
    tol.envelope_slack = t.value("envelope_slack", tol.envelope_slack);
  }
  return ScenarioConfig{std::move(lambda), std::move(psi), std::move(rule),
                        std::move(event),  std::move(n_values), tol, limits_from(o)};
}

// --- sanov ---------------------------------------------------------------------

int run_sanov(const CommonOpts& o, const json& cfg) {
  std::string hash = fingerprint_for("sanov", o, cfg);
  ScenarioConfig sc = scenario_from_json(cfg, o, "sanov");

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!o.out_path.empty()) {
    file.open(o.out_path, std::ios::binary);
    if (!file) throw argument_error("--out: cannot open \"" + o.out_path + "\" for writing");
    out = &file;
  }
  *out << "# config_hash=" << hash << " mode=" << o.mode << " seed=" << o.seed << "\n";
  *out << "n,psi_n,a_n,envelope_lo,envelope_hi,target_lo,target_hi,wall_ms\n";

  bool contained = true;
  auto last = std::chrono::steady_clock::now();
  auto sink = [&](const ConvergenceReport& r) {
    auto now = std::chrono::steady_clock::now();
    double wall = o.timings ? std::chrono::duration<double, std::milli>(now - last).count() : 0.0;
    last = now;
    *out << r.n << "," << join_counts(r.psi_n.counts()) << "," << format_double(r.a_n) << ","
         << format_double(r.envelope_lo) << "," << format_double(r.envelope_hi) << ","
         << format_double(r.target_lo) << "," << format_double(r.target_hi) << ","
         << format_double(wall) << "\n";
    out->flush();
    if (!(r.envelope_lo <= r.a_n && r.a_n <= r.envelope_hi) &&
        !(r.a_n == neg_infinity && r.envelope_lo == neg_infinity))
      contained = false;
  };

  try {
    sanov_convergence(sc, sink);
  } catch (const resource_error& e) {
    // Completed rows are already flushed; report the cap and leave them.
    return emit_error("resource", e.what(), kExitResource);
  }
  if (!contained)
    return emit_error("violation", "sanov: a report row left its guaranteed envelope", kExitViolation);
  return kExitOk;
}

// --- scan ----------------------------------------------------------------------

int run_scan(const CommonOpts& o, const json& cfg) {
  std::string hash = fingerprint_for("scan", o, cfg);
  ScenarioConfig sc = scenario_from_json(cfg, o, "scan");
  if (!cfg.contains("condition")) throw argument_error("scan: config needs \"condition\" (A2 or B2)");
  std::string cond = cfg["condition"].get<std::string>();
  if (cond != "A2" && cond != "B2")
    throw argument_error("scan.condition: \"" + cond + "\" is not A2 or B2");
  if (!cfg.contains("epsilons")) throw argument_error("scan: config needs \"epsilons\"");
  std::vector<double> epsilons;
  for (const auto& e : cfg["epsilons"]) epsilons.push_back(e.get<double>());
  if (!cfg.contains("ball_grid")) throw argument_error("scan: config needs \"ball_grid\"");
  std::vector<Ball> grid;
  std::size_t bi = 0;
  for (const auto& b : cfg["ball_grid"]) {
    std::string where = "scan.ball_grid[" + std::to_string(bi++) + "]";
    if (!b.contains("center") || !b.contains("delta"))
      throw argument_error(where + ": needs \"center\" and \"delta\"");
    Dist center = b["center"].is_array()
                      ? dist_from_weights(b["center"], sc.lambda.col_alphabet(), where + ".center")
                      : parse_dist(b["center"], where + ".center");
    grid.push_back(Ball{std::move(center), b["delta"].get<double>()});
  }

  ScanReport r = cond == "A2" ? scan_condition_A2(sc, epsilons, grid)
                              : scan_condition_B2(sc, epsilons, grid);

  json rep;
  rep["config_hash"] = hash;
  rep["mode"] = o.mode;
  rep["seed"] = o.seed;
  rep["condition"] = cond;
  rep["label"] = r.label;
  rep["defined"] = r.defined;
  rep["proxy"] = json_num(r.proxy);
  rep["target"] = json_num(r.target);
  rep["margin"] = json_num(r.margin);
  rep["undefined_total"] = r.undefined_total;
  json per_eps = json::array();
  for (const ScanEpsilonSummary& s : r.per_epsilon) {
    json e;
    e["epsilon"] = json_num(s.epsilon);
    e["defined"] = s.defined;
    e["value"] = json_num(s.value);
    per_eps.push_back(std::move(e));
  }
  rep["per_epsilon"] = std::move(per_eps);
  json cells = json::array();
  for (const ScanCell& c : r.cells) {
    json e;
    e["epsilon"] = json_num(c.epsilon);
    e["n"] = c.n;
    e["defined"] = c.defined;
    e["value"] = json_num(c.value);
    e["balls_used"] = c.balls_used;
    e["undefined_skipped"] = c.undefined_skipped;
    cells.push_back(std::move(e));
  }
  rep["cells"] = std::move(cells);
  write_text(o, rep.dump(2) + "\n");
  return kExitOk;
}

// --- gallery ---------------------------------------------------------------------

struct GalleryOpts {
  double r = 0.0;
  double lam = 1.0;
  double y = 0.0;
  std::string n_list;
  std::string m_list;
  std::string family = "exp-ramp";
  std::string demo;
};

MixtureFamily family_by_name(const std::string& name) {
  if (name == "exp-ramp")
    return MixtureFamily{Mu1Spec::gaussian_scaled, Mu2Spec::dirac_at_1_over_n,
                         NuSpec::exponential_rate_n, AlphaSpec::linear_ramp};
  if (name == "gauss-calibrated")
    return MixtureFamily{Mu1Spec::gaussian_scaled, Mu2Spec::dirac_at_1_over_n, NuSpec::gaussian_scaled,
                         AlphaSpec::calibrated_phi_epsilon};
  if (name == "gauss-atom")
    return MixtureFamily{Mu1Spec::gaussian_scaled, Mu2Spec::dirac_at_1_over_n,
                         NuSpec::gaussian_scaled_plus_atom, AlphaSpec::calibrated_phi_epsilon};
  if (name == "geometric")
    return MixtureFamily{Mu1Spec::geometric_on_naturals, Mu2Spec::dirac_at_n,
                         NuSpec::exponential_rate_n, AlphaSpec::linear_ramp};
  throw argument_error("gallery: family \"" + name +
                       "\" is not one of exp-ramp, gauss-calibrated, gauss-atom, geometric");
}

int run_gallery_gaussian(const CommonOpts& o, const GalleryOpts& g) {
  json payload;
  payload["r"] = g.r;
  payload["lambda"] = g.lam;
  payload["y"] = g.y;
  std::vector<long> ns = parse_long_list(g.n_list.empty() ? "1,10,100,1000" : g.n_list, "--n-list");
  payload["n_list"] = ns;
  std::string hash = fingerprint_for("gallery-gaussian", o, payload);

  GaussianPairFamily fam(g.r);
  std::string out = "# config_hash=" + hash + " mode=" + o.mode + " seed=" + std::to_string(o.seed) + "\n";
  out += "n,y_n,cumulant,limit,gap,predicted_gap\n";
  double limit = gaussian_cumulant_limit(g.y, g.lam, fam);
  for (long n : ns) {
    double y_n = g.y + 1.0 / double(n);
    double c = gaussian_cumulant(n, y_n, g.lam, fam);
    out += std::to_string(n) + "," + format_double(y_n) + "," + format_double(c) + "," +
           format_double(limit) + "," + format_double(c - limit) + "," +
           format_double(g.lam * fam.r * (y_n - g.y)) + "\n";
  }
  write_text(o, out);
  return kExitOk;
}

int run_gallery_mixture(const CommonOpts& o, const GalleryOpts& g) {
  MixtureFamily fam = family_by_name(g.family);
  json payload;
  payload["family"] = g.family;
  payload["demo"] = g.demo;

  std::string body;
  if (g.demo == "counterexample") {
    std::vector<long> ns = parse_long_list(g.n_list.empty() ? "50" : g.n_list, "--n-list");
    std::vector<long> ms = parse_long_list(g.m_list.empty() ? "50,500,5000" : g.m_list, "--m-list");
    payload["n_list"] = ns;
    payload["m_list"] = ms;
    body = "n,m,ratio,log_ratio_over_n,bound\n";
    for (long n : ns)
      for (long m : ms)
        body += std::to_string(n) + "," + std::to_string(m) + "," +
                format_double(counterexample_ratio(n, m)) + "," +
                format_double(counterexample_log_ratio(n, m) / double(n)) + "," +
                format_double(counterexample_bound(n, m)) + "\n";
  } else if (g.demo == "quench") {
    std::vector<long> ns = parse_long_list(g.n_list.empty() ? "1,10,100,1000" : g.n_list, "--n-list");
    payload["n_list"] = ns;
    body = "n,w1,w2,eta0_upper,eta0_lower\n";
    for (long n : ns) {
      auto [w1, w2] = mixture_hypothesis_weights(n, fam);
      double t = fam.mu2 == Mu2Spec::dirac_at_n ? double(n) : 1.0 / double(n);
      IntervalUnion upper{Interval{t, pos_infinity, false, false}};
      IntervalUnion lower{Interval{neg_infinity, t, false, true}};
      body += std::to_string(n) + "," + format_double(w1) + "," + format_double(w2) + "," +
              format_double(mixture_kernel_eval(n, 0.0, fam, upper)) + "," +
              format_double(mixture_kernel_eval(n, 0.0, fam, lower)) + "\n";
    }
  } else if (g.demo == "epsilon") {
    std::vector<long> ns = parse_long_list(g.n_list.empty() ? "1,4,16,64,256" : g.n_list, "--n-list");
    payload["n_list"] = ns;
    body = "n,epsilon_n,sqrt_n_scaled,half_low,half_high\n";
    for (long n : ns) {
      double eps = find_epsilon_n(n);
      auto [lo, hi] = calibrated_half_integrals(n, eps);
      body += std::to_string(n) + "," + format_double(eps) + "," +
              format_double(eps * std::sqrt(double(n))) + "," + format_double(lo) + "," +
              format_double(hi) + "\n";
    }
  } else {
    throw argument_error("gallery: --demo \"" + g.demo +
                         "\" is not one of counterexample, quench, epsilon");
  }

  std::string hash = fingerprint_for("gallery-mixture", o, payload);
  write_text(o, "# config_hash=" + hash + " mode=" + o.mode + " seed=" + std::to_string(o.seed) +
                    "\n" + body);
  return kExitOk;
}

// --- verify ---------------------------------------------------------------------

struct SuiteResult {
  std::string name;
  long checks = 0;
  long failures = 0;
  bool hard = false;  // failure here means a guaranteed inequality broke
};

class SuiteRecorder {
 public:
  SuiteResult* begin(std::string name, bool hard) {
    results_.push_back(SuiteResult{std::move(name), 0, 0, hard});
    return &results_.back();
  }
  void check(SuiteResult* s, bool ok) {
    ++s->checks;
    if (!ok) ++s->failures;
  }
  const std::vector<SuiteResult>& results() const { return results_; }

 private:
  std::vector<SuiteResult> results_;
};

int run_verify(const CommonOpts& o) {
  std::string hash = fingerprint_for("verify", o, json(nullptr));
  EnumerationLimits lim = limits_from(o);
  SuiteRecorder rec;
  SeededSampler rng(o.seed);

  // 1. The atom identity: eta mass assembled from conditional kernels equals
  // the direct joint law on product events.
  {
    SuiteResult* s = rec.begin("prcp-identity", true);
    if (o.mode == "exact") {
      Alphabet R2 = Alphabet::numbered("r", 2), S2 = Alphabet::numbered("s", 2);
      Alphabet R3 = Alphabet::numbered("r", 3);
      std::vector<RationalJointDist> mats;
      mats.emplace_back(R2, S2, std::vector<Rational>{Rational(2, 5), Rational(1, 10), Rational(1, 10),
                                                      Rational(2, 5)});
      mats.emplace_back(R2, S2, std::vector<Rational>{Rational(1, 3), Rational(1, 6), Rational(1, 4),
                                                      Rational(1, 4)});
      mats.emplace_back(R3, S2, std::vector<Rational>{Rational(1, 6), Rational(1, 6), Rational(1, 6),
                                                      Rational(1, 6), Rational(1, 6), Rational(1, 6)});
      for (const RationalJointDist& lam : mats)
        for (long n : {3L, 4L}) {
          auto A = [&](const EmpiricalMeasure& phi) { return 2 * phi.count(0) >= phi.n(); };
          auto B = [&](const EmpiricalMeasure& z) { return 3 * z.count(0) <= 2 * z.n(); };
          rec.check(s, verify_prcp_identity_exact(n, lam, A, B, lim) == Rational(0));
        }
    } else {
      for (int i = 0; i < 12; ++i) {
        std::size_t R = 2 + (i % 2), S = 2 + ((i / 2) % 2);
        long n = 3 + (i % 3);
        JointDist lam = rng.joint(Alphabet::numbered("r", R), Alphabet::numbered("s", S), 1e-3);
        double ta = rng.uniform(0.2, 0.8), tb = rng.uniform(0.2, 0.8);
        double resid = verify_prcp_identity(
            n, lam, [&](const Dist& p) { return p[0] >= ta; }, [&](const Dist& q) { return q[0] <= tb; },
            lim);
        rec.check(s, resid <= 1e-12);
      }
    }
  }

  // 2. The per-type mass sandwich that underwrites every envelope.
  {
    SuiteResult* s = rec.begin("type-sandwich", true);
    for (int i = 0; i < 6; ++i) {
      std::size_t R = 2 + (i % 2), S = 2;
      long n = 4 + 2 * (i % 2);
      JointDist lam = rng.joint(Alphabet::numbered("r", R), Alphabet::numbered("s", S), 1e-3);
      double M = double(lam.cell_count());
      bool ok = true;
      for_each_composition(n, lam.cell_count(), [&](const std::vector<long>& counts) {
        JointEmpiricalMeasure nu(lam.row_alphabet(), lam.col_alphabet(), n, counts);
        double lp = log_multinomial_prob(nu, lam);
        double h = relative_entropy(nu.value(), lam);
        double centered = lp + double(n) * h;
        if (!(centered <= 1e-9 && centered >= -M * std::log(double(n) + 1.0) - 1e-9)) ok = false;
      });
      rec.check(s, ok);
    }
  }

  // 3. Conditional kernels are probability measures.
  {
    SuiteResult* s = rec.begin("kernel-normalization", false);
    for (int i = 0; i < 8; ++i) {
      std::size_t R = 2 + (i % 2);
      long n = 3 + (i % 4);
      JointDist lam = rng.joint(Alphabet::numbered("r", R), Alphabet::numbered("s", 2), 1e-3);
      Kernel theta = conditional_theta(lam);
      EmpiricalMeasure zeta(lam.col_alphabet(), n, {n - 1, 1});
      double total = 0.0;
      for (const EmpiricalMeasure& phi : enumerate_empirical(n, lam.row_alphabet(), lim))
        total += eta_point_mass(n, zeta, phi, theta, lim);
      rec.check(s, std::abs(total - 1.0) <= 1e-12);
    }
  }

  // 4. The coupling projection: convergence, optimality against the product
  // coupling, and feasibility agreement with the support max-flow.
  {
    SuiteResult* s = rec.begin("projection-consistency", false);
    for (int i = 0; i < 25; ++i) {
      std::size_t R = 2 + (i % 2), S = 2 + ((i / 2) % 2);
      JointDist lam = rng.joint(Alphabet::numbered("r", R), Alphabet::numbered("s", S), 1e-3);
      Dist rho = rng.dist(lam.row_alphabet(), 1e-3);
      Dist sigma = rng.dist(lam.col_alphabet(), 1e-3);
      RateResult r = i_projection(lam, rho, sigma);
      JointDist product = product_joint(rho, sigma);
      bool ok = r.converged && r.margin_residual <= 1e-10 && r.value >= -1e-12 &&
                r.value <= relative_entropy(product, lam) + 1e-9;
      rec.check(s, ok);
    }
    for (int i = 0; i < 25; ++i) {
      std::size_t R = 2 + (i % 3), S = 2 + (i % 2);
      Alphabet ra = Alphabet::numbered("r", R), ca = Alphabet::numbered("s", S);
      JointDist lam = rng.joint(ra, ca, 1e-3);
      std::vector<double> w = lam.weights();
      double kept = 0.0;
      for (double& v : w)
        if (rng.uniform01() < 0.45)
          v = 0.0;
        else
          kept += v;
      if (kept == 0.0) {
        w[0] = 1.0;
        kept = 1.0;
      }
      for (double& v : w) v /= kept;
      JointDist masked(ra, ca, w);
      Dist rho = rng.dist(ra, 1e-3);
      Dist sigma = rng.dist(ca, 1e-3);
      bool feasible = coupling_exists(masked, rho, sigma);
      RateResult r = i_projection(masked, rho, sigma);
      rec.check(s, feasible == (r.value != pos_infinity));
    }
  }

  // 5. The S-margin infimum collapses to a one-dimensional relative entropy.
  {
    SuiteResult* s = rec.begin("margin-infimum", false);
    for (int i = 0; i < 15; ++i) {
      std::size_t R = 2 + (i % 2), S = 2 + (i % 3);
      JointDist lam = rng.joint(Alphabet::numbered("r", R), Alphabet::numbered("s", S), 1e-3);
      Dist psi = rng.dist(lam.col_alphabet(), 1e-3);
      RateResult m = inf_over_s_margin(lam, psi);
      bool ok = std::abs(m.value - relative_entropy(psi, lam.col_marginal())) <= 1e-12 &&
                m.margin_residual <= 1e-12;
      Dist image = join_margin_with_kernel(psi, conditional_theta(lam)).row_marginal();
      ok = ok && rate_I(lam, psi, image).value <= 1e-9;
      rec.check(s, ok);
    }
  }

  // 6. Rounding postconditions with the quantitative constants.
  {
    SuiteResult* s = rec.begin("rounding-postconditions", false);
    for (int i = 0; i < 20; ++i) {
      std::size_t R = 2 + (i % 3), S = 2 + (i % 2);
      Alphabet ra = Alphabet::numbered("r", R), ca = Alphabet::numbered("s", S);
      JointDist lam = rng.joint(ra, ca, 1e-3);
      JointDist xi = rng.joint_on_support(lam);
      long n = rng.uniform_int(10, 120);
      EmpiricalMeasure zeta = nearest_empirical(xi.col_marginal(), n);
      MarginMatchReport r = match_s_margin_report(xi, zeta, lam);
      rec.check(s, r.margins_exact && r.dominated_by_lambda &&
                       r.joint_distance <= r.joint_bound + 1e-12 &&
                       r.row_marginal_distance <= r.row_marginal_bound + 1e-12);
    }
  }

  // 7. Finite-n envelope containment, plus the product-base cross-check where
  // the conditional kernel must coincide with the unconditioned law.
  {
    SuiteResult* s = rec.begin("envelope-containment", true);
    Alphabet ra = Alphabet::numbered("r", 2), ca = Alphabet::numbered("s", 2);
    JointDist diag(ra, ca, {0.4, 0.1, 0.1, 0.4});
    ScenarioConfig sc{diag,
                      Dist(ca, {0.5, 0.5}),
                      PsiSequenceRule::nearest(),
                      SetDescriptor::coordinate_halfspace(ra, "r1", HalfspaceRelation::at_least, 0.8),
                      {6, 10, 14},
                      ScenarioTolerances{},
                      lim};
    for (const ConvergenceReport& r : sanov_convergence(sc))
      rec.check(s, r.envelope_lo <= r.a_n && r.a_n <= r.envelope_hi);

    Dist rho(ra, {0.6, 0.4});
    JointDist prod = product_joint(rho, Dist(ca, {0.5, 0.5}));
    ScenarioConfig pc{prod,
                      Dist(ca, {0.5, 0.5}),
                      PsiSequenceRule::nearest(),
                      SetDescriptor::coordinate_halfspace(ra, "r1", HalfspaceRelation::at_least, 0.7),
                      {8, 12},
                      ScenarioTolerances{},
                      lim};
    for (const ConvergenceReport& r : sanov_convergence(pc)) {
      LogSumAccumulator acc;
      for_each_composition(r.n, 2, [&](const std::vector<long>& counts) {
        EmpiricalMeasure phi(ra, r.n, counts);
        if (phi.value()[0] >= 0.7) acc.add(log_multinomial_prob(phi, rho));
      });
      double expected = acc.log_total() / double(r.n);
      rec.check(s, std::abs(r.a_n - expected) <= 1e-9);
    }
  }

  // 8. Certificate arithmetic and a fresh witness at n = N.
  {
    SuiteResult* s = rec.begin("rounding-certificate", false);
    for (int i = 0; i < 5; ++i) {
      Alphabet ra = Alphabet::numbered("r", 2), ca = Alphabet::numbered("s", 2);
      JointDist xi = rng.joint(ra, ca, 1e-3);
      double delta = (i % 2) ? 0.5 : 1.0;
      RoundingCertificate cert = certificate_for(xi, delta);
      double M = double(xi.cell_count());
      bool ok = M * M * cert.kappa + 2.0 / double(cert.N) * (M * M * M + M * M) < delta;
      EmpiricalMeasure zeta = nearest_empirical(xi.col_marginal(), cert.N);
      MarginMatchReport r = match_s_margin_report(xi, zeta, xi);
      ok = ok && r.kappa < cert.kappa && r.joint_distance < delta && r.row_marginal_distance < delta;
      rec.check(s, ok);
    }
  }

  // 9. Closed-form identities of the continuous families. The conditioned
  // tail ratio's display bound is a guarantee, so that part is hard.
  {
    SuiteResult* s = rec.begin("gallery-identities", true);
    for (int i = 0; i < 10; ++i) {
      double r = rng.uniform(0.2, 2.0), y = rng.uniform(-2.0, 2.0), lamv = rng.uniform(-2.0, 2.0);
      long n = rng.uniform_int(1, 1000);
      GaussianPairFamily fam(r);
      double gap = gaussian_cumulant(n, y + 1.0 / double(n), lamv, fam) -
                   gaussian_cumulant_limit(y, lamv, fam);
      rec.check(s, std::abs(gap - lamv * r / double(n)) <= 1e-13 * std::max(1.0, std::abs(lamv * r)));
      double x = rng.uniform(-3.0, 3.0);
      double lhs = 0.5 * (x * x - 2.0 * r * x * y + y * y) - 0.5 * (1.0 - r * r) * y * y;
      rec.check(s, std::abs(lhs - 0.5 * gaussian_rate(x, y, fam)) <= 1e-14 * std::max(1.0, std::abs(lhs)));
    }
    auto [w1, w2] = exponential_mixture_weights(17);
    rec.check(s, std::abs(w1 - (1.0 - 2.0 * std::exp(-1.0))) <= 1e-12 &&
                     std::abs(w2 - std::exp(-1.0)) <= 1e-12);
    for (long n : {1L, 4L, 16L}) {
      auto [lo, hi] = calibrated_half_integrals(n, find_epsilon_n(n));
      rec.check(s, std::abs(lo - hi) <= 1e-10);
    }
    double prev = pos_infinity;
    for (long m : {50L, 500L, 5000L}) {
      double v = counterexample_ratio(50, m);
      rec.check(s, v < prev && v <= counterexample_bound(50, m) * (1.0 + 1e-12));
      prev = v;
    }
    MixtureFamily exp_ramp = family_by_name("exp-ramp");
    IntervalUnion around{Interval{0.0, 1.0, false, false}};
    IntervalUnion away{Interval{2.0, 3.0, false, false}};
    rec.check(s, mixture_kernel_eval(4, 0.0, exp_ramp, around) == 1.0 &&
                     mixture_kernel_eval(4, 0.0, exp_ramp, away) == 0.0);
  }

  std::string out = "condldp verify\n";
  out += "config_hash: " + hash + "\n";
  out += "mode: " + o.mode + "\n";
  out += "seed: " + std::to_string(o.seed) + "\n";
  long checks = 0, failures = 0;
  bool hard_failure = false;
  for (const SuiteResult& s : rec.results()) {
    out += s.name + ": " + std::to_string(s.checks) + " checks, " + std::to_string(s.failures) +
           " failures\n";
    checks += s.checks;
    failures += s.failures;
    if (s.failures > 0 && s.hard) hard_failure = true;
  }
  out += "total: " + std::to_string(checks) + " checks, " + std::to_string(failures) + " failures\n";
  out += std::string("result: ") + (failures == 0 ? "PASS" : "FAIL") + "\n";
  write_text(o, out);

  if (failures > 0)
    return emit_error(hard_failure ? "violation" : "verify",
                      "verify: " + std::to_string(failures) + " checks failed", kExitViolation);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conditional empirical-measure kernels, rate functions, and finite-n envelopes"};
  app.require_subcommand(1);

  CommonOpts common;
  std::string kernel_lambda_path, rate_lambda_path, rate_psi, rate_phi, rate_set_path;
  std::string enum_dist_path, round_xi_path, round_lambda_path;
  std::string kernel_zeta, round_zeta;
  long flag_n = 0;
  bool rate_require_feasible = false;
  GalleryOpts gopts;

  CLI::App* c_enum = app.add_subcommand("enumerate", "dump one simplex level as CSV");
  add_common_options(c_enum, common);
  c_enum->add_option("--n", flag_n, "simplex level");
  c_enum->add_option("--dist", enum_dist_path, "JSON file with the base distribution");

  CLI::App* c_kernel = app.add_subcommand("kernel", "dump a conditional kernel row as CSV");
  add_common_options(c_kernel, common);
  c_kernel->add_option("--n", flag_n, "denominator (must match the zeta counts)");
  c_kernel->add_option("--zeta", kernel_zeta, "conditioning counts, comma separated");
  c_kernel->add_option("--lambda", kernel_lambda_path, "JSON file with the base coupling");

  CLI::App* c_rate = app.add_subcommand("rate", "relative-entropy rate values as JSON");
  add_common_options(c_rate, common);
  c_rate->add_option("--lambda", rate_lambda_path, "JSON file with the base coupling");
  c_rate->add_option("--psi", rate_psi, "conditioning marginal weights, comma separated");
  c_rate->add_option("--phi", rate_phi, "query distribution weights, comma separated");
  c_rate->add_option("--set", rate_set_path, "JSON file with a set descriptor (set infimum mode)");
  c_rate->add_flag("--require-feasible", rate_require_feasible, "exit 3 when the value is infinite");

  CLI::App* c_round = app.add_subcommand("round", "margin-matched empirical rounding as JSON");
  add_common_options(c_round, common);
  c_round->add_option("--xi", round_xi_path, "JSON file with the target coupling");
  c_round->add_option("--zeta", round_zeta, "prescribed column counts, comma separated");
  c_round->add_option("--lambda", round_lambda_path, "JSON file with the dominating coupling");

  CLI::App* c_sanov = app.add_subcommand("sanov", "conditional convergence ladder as CSV");
  add_common_options(c_sanov, common);

  CLI::App* c_scan = app.add_subcommand("scan", "ball-condition scans as JSON");
  add_common_options(c_scan, common);

  CLI::App* c_gallery = app.add_subcommand("gallery", "closed-form continuous families as CSV");
  c_gallery->require_subcommand(1);
  CLI::App* c_gauss = c_gallery->add_subcommand("gaussian", "cumulant table for the Gaussian pair");
  add_common_options(c_gauss, common);
  c_gauss->add_option("--r", gopts.r, "coupling coefficient (nonzero)")->required();
  c_gauss->add_option("--lambda", gopts.lam, "tilt parameter");
  c_gauss->add_option("--y", gopts.y, "conditioning point");
  c_gauss->add_option("--n-list", gopts.n_list, "comma-separated n values");
  CLI::App* c_mix = c_gallery->add_subcommand("mixture", "two-component mixture family tables");
  add_common_options(c_mix, common);
  c_mix->add_option("--family", gopts.family, "exp-ramp | gauss-calibrated | gauss-atom | geometric");
  c_mix->add_option("--demo", gopts.demo, "counterexample | quench | epsilon")->required();
  c_mix->add_option("--n-list", gopts.n_list, "comma-separated n values");
  c_mix->add_option("--m-list", gopts.m_list, "comma-separated m values (counterexample demo)");

  CLI::App* c_verify = app.add_subcommand("verify", "run every invariant suite and summarize");
  add_common_options(c_verify, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : emit_error("usage", e.what(), kExitConfig);
  }

  try {
    json cfg = json::object();
    if (!common.config_path.empty()) cfg = load_json_file(common.config_path, "--config");
    if (!cfg.is_object()) throw argument_error("--config: top level must be a JSON object");

    if (c_enum->parsed()) {
      if (flag_n > 0) cfg["n"] = flag_n;
      if (!enum_dist_path.empty()) cfg["dist"] = load_json_file(enum_dist_path, "--dist");
      return run_enumerate(common, cfg);
    }
    if (c_kernel->parsed()) {
      if (flag_n > 0) cfg["n"] = flag_n;
      if (!kernel_zeta.empty()) cfg["zeta_counts"] = parse_long_list(kernel_zeta, "--zeta");
      if (!kernel_lambda_path.empty()) cfg["lambda"] = load_json_file(kernel_lambda_path, "--lambda");
      return run_kernel(common, cfg);
    }
    if (c_rate->parsed()) {
      if (!rate_lambda_path.empty()) cfg["lambda"] = load_json_file(rate_lambda_path, "--lambda");
      if (!rate_psi.empty()) cfg["psi"] = parse_double_list(rate_psi, "--psi");
      if (!rate_phi.empty()) cfg["phi"] = parse_double_list(rate_phi, "--phi");
      if (!rate_set_path.empty()) cfg["set"] = load_json_file(rate_set_path, "--set");
      if (rate_require_feasible) cfg["require_feasible"] = true;
      return run_rate(common, cfg);
    }
    if (c_round->parsed()) {
      if (!round_xi_path.empty()) cfg["xi"] = load_json_file(round_xi_path, "--xi");
      if (!round_zeta.empty()) cfg["zeta_counts"] = parse_long_list(round_zeta, "--zeta");
      if (!round_lambda_path.empty()) cfg["lambda"] = load_json_file(round_lambda_path, "--lambda");
      return run_round(common, cfg);
    }
    if (c_sanov->parsed()) return run_sanov(common, cfg);
    if (c_scan->parsed()) return run_scan(common, cfg);
    if (c_gallery->parsed()) {
      if (c_gauss->parsed()) return run_gallery_gaussian(common, gopts);
      return run_gallery_mixture(common, gopts);
    }
    if (c_verify->parsed()) return run_verify(common);
    throw argument_error("no subcommand matched");
  } catch (const argument_error& e) {
    return emit_error("argument", e.what(), kExitConfig);
  } catch (const resource_error& e) {
    return emit_error("resource", e.what(), kExitResource);
  } catch (const convergence_error& e) {
    return emit_error("convergence", e.what(), kExitViolation);
  } catch (const contract_error& e) {
    return emit_error("contract", e.what(), kExitViolation);
  } catch (const json::exception& e) {
    return emit_error("parse", e.what(), kExitConfig);
  } catch (const std::exception& e) {
    return emit_error("internal", e.what(), kExitViolation);
  }
}
