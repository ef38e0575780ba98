#pragma once

// Finite-n verification experiments. A scenario pins down a joint base
// measure, a conditioning target psi with its empirical approximations psi_n,
// an event on the row simplex, and a ladder of n values; the runner computes
// a_n = (1/n) log eta_n(psi_n, event) by exact summation together with a
// combinatorial two-sided envelope that must contain it — not approximately,
// always. The scans probe the lower/upper ball-conditioning conditions of the
// convergence theorem on a finite grid and label the result as the finite
// proxy it is.

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "condldp/empirical.hpp"
#include "condldp/errors.hpp"
#include "condldp/kernels.hpp"
#include "condldp/logdomain.hpp"
#include "condldp/measures.hpp"
#include "condldp/rate.hpp"

namespace condldp {

struct ScenarioTolerances {
  double kernel_tol = 1e-12;
  double rate_tol = 1e-10;
  double envelope_slack = 0.02;
};

struct PsiSequenceRule {
  bool use_nearest = true;
  std::vector<EmpiricalMeasure> explicit_list;  // aligned with n_values when use_nearest is false

  static PsiSequenceRule nearest() { return {}; }
  static PsiSequenceRule explicit_sequence(std::vector<EmpiricalMeasure> seq) {
    PsiSequenceRule r;
    r.use_nearest = false;
    r.explicit_list = std::move(seq);
    return r;
  }
};

struct ScenarioConfig {
  JointDist lambda;
  Dist psi;
  PsiSequenceRule psi_rule;
  SetDescriptor event;
  std::vector<long> n_values;
  ScenarioTolerances tolerances;
  EnumerationLimits limits;
};

inline void validate_scenario(const ScenarioConfig& c) {
  if (!c.lambda.every_column_positive())
    throw argument_error("scenario: lambda has a zero column, the conditioning support assumption fails");
  if (c.psi.alphabet() != c.lambda.col_alphabet())
    throw argument_error("scenario: psi alphabet differs from lambda columns");
  if (c.n_values.empty()) throw argument_error("scenario: n_values is empty");
  for (std::size_t i = 0; i < c.n_values.size(); ++i) {
    if (c.n_values[i] < 1) throw argument_error("scenario: n_values must be positive");
    if (i > 0 && c.n_values[i] <= c.n_values[i - 1])
      throw argument_error("scenario: n_values must be strictly increasing");
  }
  if (!c.psi_rule.use_nearest) {
    if (c.psi_rule.explicit_list.size() != c.n_values.size())
      throw argument_error("scenario: explicit psi sequence must have one entry per n value");
    for (std::size_t i = 0; i < c.n_values.size(); ++i) {
      const EmpiricalMeasure& m = c.psi_rule.explicit_list[i];
      if (m.n() != c.n_values[i])
        throw argument_error("scenario: explicit psi entry " + std::to_string(i) + " has denominator " +
                             std::to_string(m.n()) + ", expected " + std::to_string(c.n_values[i]));
      if (m.alphabet() != c.lambda.col_alphabet())
        throw argument_error("scenario: explicit psi entry " + std::to_string(i) +
                             " has the wrong alphabet");
    }
  }
}

struct ConvergenceReport {
  long n;
  EmpiricalMeasure psi_n;
  double a_n;
  double envelope_lo;
  double envelope_hi;
  double target_lo;  // -inf I over the event's interior (the convergence lower target)
  double target_hi;  // -inf I over the event's closure (the convergence upper target)
  double wall_ms = 0.0;
};

struct SanovTargets {
  double target_lo;
  double target_hi;
};

inline SanovTargets sanov_targets(const ScenarioConfig& c) {
  SetRateResult interior = inf_rate_over_set(c.lambda, c.psi, c.event, SetVariant::interior);
  SetRateResult closure = inf_rate_over_set(c.lambda, c.psi, c.event, SetVariant::closure);
  return {interior.value == pos_infinity ? neg_infinity : -interior.value,
          closure.value == pos_infinity ? neg_infinity : -closure.value};
}

// Runs the ladder, streaming one report per n so a resource failure at a large
// n still leaves the completed rows with the caller.
inline void sanov_convergence(const ScenarioConfig& config,
                              const std::function<void(const ConvergenceReport&)>& sink) {
  validate_scenario(config);
  SanovTargets targets = sanov_targets(config);
  const double M = double(config.lambda.cell_count());
  for (std::size_t i = 0; i < config.n_values.size(); ++i) {
    long n = config.n_values[i];
    EmpiricalMeasure psi_n =
        config.psi_rule.use_nearest ? nearest_empirical(config.psi, n) : config.psi_rule.explicit_list[i];
    ConditionalAtomScan scan = scan_conditional_atom(
        n, psi_n, [&](const Dist& p) { return config.event.contains(p); }, config.lambda, config.limits);
    double a_n = scan.log_event_mass == neg_infinity
                     ? neg_infinity
                     : (scan.log_event_mass - scan.log_total_mass) / double(n);
    // Both sides come from the per-type sandwich: each slice's mass is within
    // a factor (n+1)^{±M} of exp(-n * min H) over its own types.
    double c = 2.0 * M * std::log(double(n) + 1.0) / double(n);
    double lo, hi;
    if (scan.min_entropy_event == pos_infinity) {
      lo = neg_infinity;
      hi = neg_infinity;
    } else {
      lo = -c - scan.min_entropy_event + scan.min_entropy_total;
      hi = c - scan.min_entropy_event + scan.min_entropy_total;
    }
    sink(ConvergenceReport{n, psi_n, a_n, lo, hi, targets.target_lo, targets.target_hi, 0.0});
  }
}

inline std::vector<ConvergenceReport> sanov_convergence(const ScenarioConfig& config) {
  std::vector<ConvergenceReport> out;
  sanov_convergence(config, [&](const ConvergenceReport& r) { out.push_back(r); });
  return out;
}

// --- ball conditionals ---------------------------------------------------------

struct BallConditional {
  bool defined = false;  // false iff the ball holds no level-n empirical measure
  double value = 0.0;
  double log_value = neg_infinity;
  double log_numerator = neg_infinity;
  double log_denominator = neg_infinity;
  long atoms_in_ball = 0;
};

// mu_n(event x Ball) / mu_n(everything x Ball) with Ball the open
// total-variation ball around `center`, by exact summation over the
// conditioning atoms inside the ball. Zero denominator is reported as an
// explicit undefined flag, never coerced to a number.
inline BallConditional conditional_ball_probability(long n, const JointDist& lambda,
                                                    const std::function<bool(const Dist&)>& event,
                                                    const Dist& center, double delta,
                                                    const EnumerationLimits& limits = {}) {
  if (!(delta > 0.0)) throw argument_error("conditional_ball_probability: delta must be positive");
  if (center.alphabet() != lambda.col_alphabet())
    throw argument_error("conditional_ball_probability: ball center alphabet differs from lambda columns");
  BallConditional out;
  LogSumAccumulator num, den;
  for_each_composition(n, lambda.num_cols(), [&](const std::vector<long>& counts) {
    EmpiricalMeasure zeta(lambda.col_alphabet(), n, counts);
    if (!(prohorov_distance(zeta.value(), center) < delta)) return;
    ++out.atoms_in_ball;
    ConditionalAtomScan scan = scan_conditional_atom(n, zeta, event, lambda, limits);
    if (scan.log_total_mass != neg_infinity) den.add(scan.log_total_mass);
    if (scan.log_event_mass != neg_infinity) num.add(scan.log_event_mass);
  });
  out.log_numerator = num.log_total();
  out.log_denominator = den.log_total();
  if (out.log_denominator == neg_infinity) return out;
  out.defined = true;
  out.log_value = out.log_numerator == neg_infinity ? neg_infinity : out.log_numerator - out.log_denominator;
  out.value = out.log_value == neg_infinity ? 0.0 : std::exp(out.log_value);
  return out;
}

// --- condition scans -----------------------------------------------------------

struct Ball {
  Dist center;
  double delta;
};

struct ScanCell {
  double epsilon;
  long n;
  bool defined;
  double value;  // inf (lower scan) or sup (upper scan) over admissible balls of (1/n) log conditional
  long balls_used;
  long undefined_skipped;
};

struct ScanEpsilonSummary {
  double epsilon;
  bool defined;
  double value;  // liminf proxy (min over tail n) or limsup proxy (max over tail n)
};

struct ScanReport {
  std::vector<ScanCell> cells;
  std::vector<ScanEpsilonSummary> per_epsilon;
  bool defined = false;
  double proxy = 0.0;   // max over eps (lower scan) / min over eps (upper scan)
  double target = 0.0;  // -inf I over the configured event
  double margin = 0.0;  // proxy - target
  long undefined_total = 0;
  bool lower_condition = true;
  std::string label;
};

namespace detail {

inline ScanReport scan_condition_impl(const ScenarioConfig& config, const std::vector<double>& epsilons,
                                      const std::vector<Ball>& ball_grid, bool lower) {
  validate_scenario(config);
  if (epsilons.empty()) throw argument_error("scan: epsilon grid is empty");
  if (ball_grid.empty()) throw argument_error("scan: ball grid is empty");
  for (const Ball& b : ball_grid) {
    if (!(b.delta > 0.0)) throw argument_error("scan: ball grid contains a non-positive radius");
    if (b.center.alphabet() != config.lambda.col_alphabet())
      throw argument_error("scan: ball center alphabet differs from lambda columns");
  }

  // The lower condition quantifies over the event's closure, the upper one
  // over its interior.
  auto event = [&](const Dist& p) {
    return lower ? config.event.closure_contains(p) : config.event.interior_contains(p);
  };

  // Tail of the n-ladder standing in for the n -> infinity limit.
  std::vector<long> tail(config.n_values.end() - std::min<std::size_t>(3, config.n_values.size()),
                         config.n_values.end());

  // The table scans dominate the cost and depend only on (n, zeta); memoize
  // them across balls and epsilons.
  std::map<std::pair<long, std::vector<long>>, std::pair<double, double>> memo;
  auto atom_masses = [&](long n, const EmpiricalMeasure& zeta) {
    auto key = std::make_pair(n, zeta.counts());
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    ConditionalAtomScan scan = scan_conditional_atom(n, zeta, event, config.lambda, config.limits);
    auto val = std::make_pair(scan.log_event_mass, scan.log_total_mass);
    memo.emplace(std::move(key), val);
    return val;
  };

  ScanReport out;
  out.lower_condition = lower;
  out.label = lower ? "finite-n liminf proxy for the lower ball condition (evidence, not a limit)"
                    : "finite-n limsup proxy for the upper ball condition (evidence, not a limit)";
  SetRateResult inf_i = inf_rate_over_set(config.lambda, config.psi, config.event, SetVariant::as_given);
  out.target = inf_i.value == pos_infinity ? neg_infinity : -inf_i.value;

  for (double eps : epsilons) {
    if (!(eps > 0.0)) throw argument_error("scan: epsilons must be positive");
    bool eps_defined = false;
    double eps_value = 0.0;
    for (long n : tail) {
      bool cell_defined = false;
      double cell_value = 0.0;
      long used = 0, skipped = 0;
      for (const Ball& b : ball_grid) {
        if (!(b.delta < eps)) continue;
        if (prohorov_distance(b.center, config.psi) + b.delta > eps + 1e-12) continue;
        LogSumAccumulator num, den;
        for_each_composition(n, config.lambda.num_cols(), [&](const std::vector<long>& counts) {
          EmpiricalMeasure zeta(config.lambda.col_alphabet(), n, counts);
          if (!(prohorov_distance(zeta.value(), b.center) < b.delta)) return;
          auto [log_event, log_total] = atom_masses(n, zeta);
          if (log_total != neg_infinity) den.add(log_total);
          if (log_event != neg_infinity) num.add(log_event);
        });
        if (den.log_total() == neg_infinity) {
          ++skipped;
          continue;
        }
        ++used;
        double v = num.log_total() == neg_infinity ? neg_infinity
                                                   : (num.log_total() - den.log_total()) / double(n);
        if (!cell_defined || (lower ? v < cell_value : v > cell_value)) {
          cell_defined = true;
          cell_value = v;
        }
      }
      out.cells.push_back(ScanCell{eps, n, cell_defined, cell_value, used, skipped});
      out.undefined_total += skipped;
      if (cell_defined && (!eps_defined || (lower ? cell_value < eps_value : cell_value > eps_value))) {
        eps_defined = true;
        eps_value = cell_value;
      }
    }
    out.per_epsilon.push_back(ScanEpsilonSummary{eps, eps_defined, eps_value});
    if (eps_defined && (!out.defined || (lower ? eps_value > out.proxy : eps_value < out.proxy))) {
      out.defined = true;
      out.proxy = eps_value;
    }
  }
  out.margin = out.defined ? out.proxy - out.target : 0.0;
  return out;
}

}  // namespace detail

inline ScanReport scan_condition_A2(const ScenarioConfig& config, const std::vector<double>& epsilons,
                                    const std::vector<Ball>& ball_grid) {
  return detail::scan_condition_impl(config, epsilons, ball_grid, true);
}

inline ScanReport scan_condition_B2(const ScenarioConfig& config, const std::vector<double>& epsilons,
                                    const std::vector<Ball>& ball_grid) {
  return detail::scan_condition_impl(config, epsilons, ball_grid, false);
}

}  // namespace condldp
