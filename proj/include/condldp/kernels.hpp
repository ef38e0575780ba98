#pragma once

// The conditional kernel eta_n: the law of the row empirical measure given the
// column empirical measure, computed exactly by summing over contingency
// tables. Two independent routes are kept deliberately separate so they can
// arbitrate each other: the theta-product route (group the draws by
// conditioning symbol) and the conditioning route (ratios of joint multinomial
// masses). Their agreement is itself one of the verified identities.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "condldp/empirical.hpp"
#include "condldp/errors.hpp"
#include "condldp/logdomain.hpp"
#include "condldp/measures.hpp"

namespace condldp {

// A nonnegative integer matrix with prescribed row/column sums; the objects
// the scans below enumerate.
struct ContingencyTable {
  std::vector<long> counts;  // row-major, R x S
  std::vector<long> row_margins;
  std::vector<long> col_margins;
};

// Plumbing bundle for a kernel evaluation request (CLI and harness use it).
struct KernelQuery {
  long n = 1;
  std::optional<EmpiricalMeasure> zeta;
  std::function<bool(const Dist&)> event;
};

namespace detail {

// Depth-first enumeration of contingency tables, column by column. Column
// budgets are mandatory; row budgets optional (fixed row sums when present).
// Cells with log-weight -infinity are frozen at zero, pruning those branches
// outright. For each complete table the sink receives the counts and the
// accumulated sum over cells of [c * w_rs - log(c!)] — callers add whatever
// multinomial normalization constant their route needs.
//
// With both margins fixed on a 2x2 alphabet the scan degenerates to the single
// free cell, making it O(n) per (phi, zeta) pair; that is what lets the
// harness push n to 2000.
template <class Sink>
void scan_tables(const std::vector<long>& col_sums, const std::vector<long>* row_sums, std::size_t R,
                 std::size_t S, const std::vector<double>& cell_logw, const LogFactorialTable& lft,
                 std::uint64_t node_cap, const char* who, Sink&& sink) {
  std::vector<long> counts(R * S, 0);
  std::vector<long> row_rem = row_sums ? *row_sums : std::vector<long>();
  // Total column budget strictly after column s: a row can never need more
  // than this from the remaining columns.
  std::vector<long> suffix(S + 1, 0);
  for (std::size_t s = S; s-- > 0;) suffix[s] = suffix[s + 1] + col_sums[s];
  std::uint64_t nodes = 0;

  auto rec = [&](auto&& self, std::size_t s, std::size_t r, long col_left, double wsum) -> void {
    if (++nodes > node_cap)
      throw resource_error(std::string(who) + ": table scan exceeded node cap of " + std::to_string(node_cap));
    if (r == R - 1) {
      // Last cell of the column is forced by the column budget.
      long c = col_left;
      double w = cell_logw[r * S + s];
      if (c > 0 && w == neg_infinity) return;
      if (row_sums) {
        if (c > row_rem[r]) return;
        row_rem[r] -= c;
      }
      counts[r * S + s] = c;
      double wnext = wsum + (c > 0 ? double(c) * w : 0.0) - lft(c);
      if (s == S - 1) {
        bool ok = true;
        if (row_sums)
          for (long rem : row_rem)
            if (rem != 0) { ok = false; break; }
        if (ok) sink(counts, wnext);
      } else {
        self(self, s + 1, 0, col_sums[s + 1], wnext);
      }
      counts[r * S + s] = 0;
      if (row_sums) row_rem[r] += c;
      return;
    }
    long hi = col_left;
    long lo = 0;
    double w = cell_logw[r * S + s];
    if (row_sums) {
      if (row_rem[r] < hi) hi = row_rem[r];
      // Row r can place at most suffix[s+1] units in the later columns.
      long need_now = row_rem[r] - suffix[s + 1];
      if (need_now > lo) lo = need_now;
    }
    if (w == neg_infinity) {
      if (lo > 0) return;
      hi = 0;
    }
    for (long c = hi; c >= lo; --c) {
      if (++nodes > node_cap)
        throw resource_error(std::string(who) + ": table scan exceeded node cap of " +
                             std::to_string(node_cap));
      counts[r * S + s] = c;
      if (row_sums) row_rem[r] -= c;
      self(self, s, r + 1, col_left - c, wsum + (c > 0 ? double(c) * w : 0.0) - lft(c));
      if (row_sums) row_rem[r] += c;
    }
    counts[r * S + s] = 0;
  };
  rec(rec, 0, 0, col_sums[0], 0.0);
}

// Exact-mode twin: accumulates prod over cells of weight^c / c! as a rational.
template <class Sink>
void scan_tables_exact(const std::vector<long>& col_sums, const std::vector<long>* row_sums,
                       std::size_t R, std::size_t S, const std::vector<Rational>& cell_weight,
                       std::uint64_t node_cap, const char* who, Sink&& sink) {
  std::vector<long> counts(R * S, 0);
  std::vector<long> row_rem = row_sums ? *row_sums : std::vector<long>();
  std::vector<long> suffix(S + 1, 0);
  for (std::size_t s = S; s-- > 0;) suffix[s] = suffix[s + 1] + col_sums[s];
  std::uint64_t nodes = 0;

  auto rec = [&](auto&& self, std::size_t s, std::size_t r, long col_left, const Rational& prod) -> void {
    if (++nodes > node_cap)
      throw resource_error(std::string(who) + ": table scan exceeded node cap of " + std::to_string(node_cap));
    if (r == R - 1) {
      long c = col_left;
      const Rational& w = cell_weight[r * S + s];
      if (c > 0 && w == 0) return;
      if (row_sums) {
        if (c > row_rem[r]) return;
        row_rem[r] -= c;
      }
      counts[r * S + s] = c;
      Rational pnext = prod * rational_pow(w, c) / Rational(factorial_big(c), 1);
      if (s == S - 1) {
        bool ok = true;
        if (row_sums)
          for (long rem : row_rem)
            if (rem != 0) { ok = false; break; }
        if (ok) sink(counts, pnext);
      } else {
        self(self, s + 1, 0, col_sums[s + 1], pnext);
      }
      counts[r * S + s] = 0;
      if (row_sums) row_rem[r] += c;
      return;
    }
    long hi = col_left;
    long lo = 0;
    const Rational& w = cell_weight[r * S + s];
    if (row_sums) {
      if (row_rem[r] < hi) hi = row_rem[r];
      long need_now = row_rem[r] - suffix[s + 1];
      if (need_now > lo) lo = need_now;
    }
    if (w == 0) {
      if (lo > 0) return;
      hi = 0;
    }
    for (long c = hi; c >= lo; --c) {
      if (++nodes > node_cap)
        throw resource_error(std::string(who) + ": table scan exceeded node cap of " +
                             std::to_string(node_cap));
      counts[r * S + s] = c;
      if (row_sums) row_rem[r] -= c;
      self(self, s, r + 1, col_left - c, prod * rational_pow(w, c) / Rational(factorial_big(c), 1));
      if (row_sums) row_rem[r] += c;
    }
    counts[r * S + s] = 0;
  };
  rec(rec, 0, 0, col_sums[0], Rational(1));
}

inline void check_kernel_args(long n, const EmpiricalMeasure& zeta, const BasicKernel<double>& theta,
                              const char* who) {
  if (zeta.n() != n)
    throw argument_error(std::string(who) + ": zeta has denominator " + std::to_string(zeta.n()) +
                         ", expected n = " + std::to_string(n));
  if (zeta.alphabet() != theta.source())
    throw argument_error(std::string(who) + ": zeta alphabet differs from kernel source");
}

}  // namespace detail

// eta_n(zeta, {phi}): the chance that n independent draws — one per
// conditioning symbol occurrence, draw ~ theta(s, .) — have row type phi.
// Sum over tables c with column sums n*zeta and row sums n*phi of
//   prod_s [ (n zeta_s)! / prod_r c_rs! ] * prod_{r,s} theta(s,r)^{c_rs}.
inline double eta_point_mass(long n, const EmpiricalMeasure& zeta, const EmpiricalMeasure& phi,
                             const Kernel& theta, const EnumerationLimits& limits = {}) {
  detail::check_kernel_args(n, zeta, theta, "eta_point_mass");
  if (phi.n() != n)
    throw argument_error("eta_point_mass: phi has denominator " + std::to_string(phi.n()) +
                         ", expected n = " + std::to_string(n));
  if (phi.alphabet() != theta.target())
    throw argument_error("eta_point_mass: phi alphabet differs from kernel target");
  const std::size_t R = phi.alphabet().size(), S = zeta.alphabet().size();
  LogFactorialTable lft(static_cast<std::size_t>(n));
  std::vector<double> logw(R * S);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t s = 0; s < S; ++s) {
      double t = theta.row(s)[r];
      logw[r * S + s] = t > 0.0 ? std::log(t) : neg_infinity;
    }
  double constant = 0.0;
  for (std::size_t s = 0; s < S; ++s) constant += lft(zeta.count(s));
  LogSumAccumulator acc;
  detail::scan_tables(zeta.counts(), &phi.counts(), R, S, logw, lft, limits.max_table_nodes,
                      "eta_point_mass",
                      [&](const std::vector<long>&, double wsum) { acc.add(constant + wsum); });
  double lt = acc.log_total();
  return lt == neg_infinity ? 0.0 : std::exp(lt);
}

// eta_n(zeta, A) for an event A on the row simplex: sum of eta_point_mass over
// the level-n row types satisfying the predicate.
inline double eta_event(long n, const EmpiricalMeasure& zeta, const std::function<bool(const Dist&)>& event,
                        const Kernel& theta, const EnumerationLimits& limits = {}) {
  detail::check_kernel_args(n, zeta, theta, "eta_event");
  const Alphabet& R_alpha = theta.target();
  LogSumAccumulator acc;
  for_each_composition(n, R_alpha.size(), [&](const std::vector<long>& counts) {
    EmpiricalMeasure phi(R_alpha, n, counts);
    if (!event(phi.value())) return;
    double p = eta_point_mass(n, zeta, phi, theta, limits);
    if (p > 0.0) acc.add(std::log(p));
  });
  double lt = acc.log_total();
  return lt == neg_infinity ? 0.0 : std::exp(lt);
}

// One pass over the tables with column sums n*zeta (rows free), extracting
// everything the harness needs about the conditioning atom {zeta}:
// log-masses of the event slice and of the whole slice, and the minimum
// relative entropy H(nu | lambda) over each — the combinatorial ingredients of
// the finite-n envelope.
struct ConditionalAtomScan {
  double log_event_mass = neg_infinity;  // log mu_n(A x {zeta})
  double log_total_mass = neg_infinity;  // log mu_n(P(R) x {zeta})
  double min_entropy_event = pos_infinity;
  double min_entropy_total = pos_infinity;
  std::uint64_t tables_visited = 0;
};

inline ConditionalAtomScan scan_conditional_atom(long n, const EmpiricalMeasure& zeta,
                                                 const std::function<bool(const Dist&)>& event,
                                                 const JointDist& lambda,
                                                 const EnumerationLimits& limits = {}) {
  if (zeta.n() != n) throw argument_error("scan_conditional_atom: zeta.n != n");
  if (zeta.alphabet() != lambda.col_alphabet())
    throw argument_error("scan_conditional_atom: zeta alphabet differs from lambda columns");
  const std::size_t R = lambda.num_rows(), S = lambda.num_cols();
  LogFactorialTable lft(static_cast<std::size_t>(n));
  XLogXTable xlx(static_cast<std::size_t>(n));
  std::vector<double> logw(R * S);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t s = 0; s < S; ++s) {
      double v = lambda.at(r, s);
      logw[r * S + s] = v > 0.0 ? std::log(v) : neg_infinity;
    }
  const double log_n = std::log(double(n));
  const double lft_n = lft(n);

  ConditionalAtomScan out;
  LogSumAccumulator acc_event, acc_total;
  std::vector<long> row_counts(R);
  std::vector<double> phi(R);
  detail::scan_tables(zeta.counts(), nullptr, R, S, logw, lft, limits.max_table_nodes,
                      "scan_conditional_atom", [&](const std::vector<long>& c, double wsum) {
                        ++out.tables_visited;
                        double logp = lft_n + wsum;
                        // n*H(nu|lambda) = sum c log c - n log n - sum c log(lambda);
                        // the last sum is recoverable from wsum by adding back the
                        // factorials, but recomputing keeps the expression direct.
                        double clogc = 0.0, clogl = 0.0;
                        for (std::size_t r = 0; r < R; ++r) row_counts[r] = 0;
                        for (std::size_t r = 0; r < R; ++r)
                          for (std::size_t s = 0; s < S; ++s) {
                            long v = c[r * S + s];
                            if (v == 0) continue;
                            row_counts[r] += v;
                            clogc += xlx(v);
                            clogl += double(v) * logw[r * S + s];
                          }
                        double entropy = (clogc - clogl) / double(n) - log_n;
                        if (entropy < 0.0 && entropy > -1e-12) entropy = 0.0;
                        acc_total.add(logp);
                        if (entropy < out.min_entropy_total) out.min_entropy_total = entropy;
                        for (std::size_t r = 0; r < R; ++r) phi[r] = double(row_counts[r]) / double(n);
                        if (event(Dist(lambda.row_alphabet(), phi))) {
                          acc_event.add(logp);
                          if (entropy < out.min_entropy_event) out.min_entropy_event = entropy;
                        }
                      });
  out.log_event_mass = acc_event.log_total();
  out.log_total_mass = acc_total.log_total();
  return out;
}

// eta_n(zeta, A) through the disintegration route: the ratio of joint
// multinomial masses mu_n(A x {zeta}) / mu_n(P(R) x {zeta}).
inline double eta_via_conditioning(long n, const EmpiricalMeasure& zeta,
                                   const std::function<bool(const Dist&)>& event, const JointDist& lambda,
                                   const EnumerationLimits& limits = {}) {
  if (!lambda.every_column_positive())
    throw argument_error("eta_via_conditioning: lambda has a zero column, the kernel is undefined");
  ConditionalAtomScan scan = scan_conditional_atom(n, zeta, event, lambda, limits);
  if (scan.log_total_mass == neg_infinity)
    throw contract_error("eta_via_conditioning: conditioning atom has zero mass despite positive columns");
  if (scan.log_event_mass == neg_infinity) return 0.0;
  return std::exp(scan.log_event_mass - scan.log_total_mass);
}

// |mu_n(A x B) - sum over zeta in B of eta_n(zeta, A) * margin({zeta})|.
// The left side enumerates the joint simplex directly; the right side goes
// through the kernel and the column-marginal multinomial law. The identity is
// the defining property of the disintegration, so the residual is pure
// floating-point noise — or exactly zero in the rational twin below.
inline double verify_prcp_identity(long n, const JointDist& lambda,
                                   const std::function<bool(const Dist&)>& A,
                                   const std::function<bool(const Dist&)>& B,
                                   const EnumerationLimits& limits = {}) {
  if (!lambda.every_column_positive())
    throw argument_error("verify_prcp_identity: lambda has a zero column");
  double direct = joint_empirical_law(n, lambda, A, B, limits);

  Kernel theta = conditional_theta(lambda);
  Dist lambda_s = lambda.col_marginal();
  LogFactorialTable lft(static_cast<std::size_t>(n));
  double mixed = 0.0, carry = 0.0;  // Kahan
  for_each_composition(n, lambda.num_cols(), [&](const std::vector<long>& zc) {
    EmpiricalMeasure zeta(lambda.col_alphabet(), n, zc);
    if (!B(zeta.value())) return;
    double log_margin = detail::log_multinomial_from_counts(zc, n, lambda_s.weights(), lft);
    if (log_margin == neg_infinity) return;
    double term = eta_event(n, zeta, A, theta, limits) * std::exp(log_margin);
    double y = term - carry;
    double t = mixed + y;
    carry = (t - mixed) - y;
    mixed = t;
  });
  return std::abs(direct - mixed);
}

// ---------------------------------------------------------------------------
// Exact-mode twins (events are predicates on empirical measures so membership
// is decided on integer counts, identically in both arithmetic modes).

inline Rational eta_point_mass_exact(long n, const EmpiricalMeasure& zeta, const EmpiricalMeasure& phi,
                                     const RationalKernel& theta, const EnumerationLimits& limits = {}) {
  if (zeta.n() != n || phi.n() != n) throw argument_error("eta_point_mass_exact: denominators must equal n");
  const std::size_t R = phi.alphabet().size(), S = zeta.alphabet().size();
  std::vector<Rational> w(R * S);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t s = 0; s < S; ++s) w[r * S + s] = theta.row(s)[r];
  Rational constant(1);
  for (std::size_t s = 0; s < S; ++s) constant *= Rational(factorial_big(zeta.count(s)), 1);
  Rational total(0);
  detail::scan_tables_exact(zeta.counts(), &phi.counts(), R, S, w, limits.max_table_nodes,
                            "eta_point_mass_exact",
                            [&](const std::vector<long>&, const Rational& p) { total += p; });
  return constant * total;
}

inline Rational eta_event_exact(long n, const EmpiricalMeasure& zeta,
                                const std::function<bool(const EmpiricalMeasure&)>& event,
                                const RationalKernel& theta, const EnumerationLimits& limits = {}) {
  Rational total(0);
  const Alphabet& R_alpha = theta.target();
  for_each_composition(n, R_alpha.size(), [&](const std::vector<long>& counts) {
    EmpiricalMeasure phi(R_alpha, n, counts);
    if (!event(phi)) return;
    total += eta_point_mass_exact(n, zeta, phi, theta, limits);
  });
  return total;
}

inline Rational eta_via_conditioning_exact(long n, const EmpiricalMeasure& zeta,
                                           const std::function<bool(const EmpiricalMeasure&)>& event,
                                           const RationalJointDist& lambda,
                                           const EnumerationLimits& limits = {}) {
  const std::size_t R = lambda.num_rows(), S = lambda.num_cols();
  Rational num(0), den(0);
  std::vector<Rational> w(lambda.weights());
  detail::scan_tables_exact(zeta.counts(), nullptr, R, S, w, limits.max_table_nodes,
                            "eta_via_conditioning_exact",
                            [&](const std::vector<long>& c, const Rational& p) {
                              std::vector<long> rc(R, 0);
                              for (std::size_t r = 0; r < R; ++r)
                                for (std::size_t s = 0; s < S; ++s) rc[r] += c[r * S + s];
                              den += p;
                              if (event(EmpiricalMeasure(lambda.row_alphabet(), n, rc))) num += p;
                            });
  if (den == 0) throw contract_error("eta_via_conditioning_exact: zero conditioning mass");
  return num / den;  // the n!/prod(c!) normalization cancels in the ratio
}

inline Rational verify_prcp_identity_exact(long n, const RationalJointDist& lambda,
                                           const std::function<bool(const EmpiricalMeasure&)>& A,
                                           const std::function<bool(const EmpiricalMeasure&)>& B,
                                           const EnumerationLimits& limits = {}) {
  const std::size_t R = lambda.num_rows(), S = lambda.num_cols();
  const std::size_t M = R * S;
  std::uint64_t total = simplex_cardinality(n, M);
  if (total > limits.max_elements)
    throw resource_error("verify_prcp_identity_exact: simplex exceeds enumeration cap");

  // Route 1: direct joint law of the marginal event.
  Rational direct(0);
  for_each_composition(n, M, [&](const std::vector<long>& c) {
    std::vector<long> rc(R, 0), cc(S, 0);
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t s = 0; s < S; ++s) {
        rc[r] += c[r * S + s];
        cc[s] += c[r * S + s];
      }
    if (!A(EmpiricalMeasure(lambda.row_alphabet(), n, rc))) return;
    if (!B(EmpiricalMeasure(lambda.col_alphabet(), n, cc))) return;
    direct += multinomial_prob_exact(c, n, lambda.weights());
  });

  // Route 2: kernel times column-marginal multinomial law.
  RationalKernel theta = conditional_theta(lambda);
  RationalDist lambda_s = lambda.col_marginal();
  Rational mixed(0);
  for_each_composition(n, S, [&](const std::vector<long>& zc) {
    EmpiricalMeasure zeta(lambda.col_alphabet(), n, zc);
    if (!B(zeta)) return;
    Rational margin = multinomial_prob_exact(zc, n, lambda_s.weights());
    if (margin == 0) return;
    mixed += eta_event_exact(n, zeta, A, theta, limits) * margin;
  });
  Rational diff = direct - mixed;
  return diff < 0 ? -diff : diff;
}

}  // namespace condldp
