#pragma once

// Constructive rounding: replace a target coupling by an empirical one at
// level n whose column margins are exactly a prescribed empirical measure,
// staying quantitatively close in total variation and absolutely continuous
// with respect to the base measure. The constants in the bounds are the ones
// the construction actually achieves; the certificate below turns them into
// a (kappa, N) pair good for every n >= N.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "condldp/empirical.hpp"
#include "condldp/errors.hpp"
#include "condldp/measures.hpp"

namespace condldp {

// Nearest-grid rounding with support preservation: floor every positive cell
// to the 1/n grid, then hand the leftover units one at a time to the cells
// with the largest fractional remainders (row-major order breaking ties).
// Every entry moves by at most 1/n, comfortably inside the 2/n contract.
inline JointEmpiricalMeasure round_to_grid(const JointDist& xi, long n) {
  if (n < 1) throw argument_error("round_to_grid: n must be >= 1");
  const std::size_t M = xi.cell_count();
  std::vector<long> counts(M, 0);
  std::vector<double> frac(M, 0.0);
  long placed = 0;
  for (std::size_t i = 0; i < M; ++i) {
    double scaled = double(n) * xi.weights()[i];
    if (scaled <= 0.0) continue;
    counts[i] = static_cast<long>(std::floor(scaled));
    frac[i] = scaled - double(counts[i]);
    placed += counts[i];
  }
  long leftover = n - placed;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < M; ++i)
    if (frac[i] > 0.0) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  long distributable = std::min<long>(leftover, static_cast<long>(order.size()));
  for (long u = 0; u < distributable; ++u) counts[order[static_cast<std::size_t>(u)]] += 1;
  if (leftover > distributable) {
    // Floating-point dust starved the remainder pool; park the residue on the
    // heaviest positive cell (support still preserved).
    std::size_t heaviest = 0;
    for (std::size_t i = 1; i < M; ++i)
      if (xi.weights()[i] > xi.weights()[heaviest]) heaviest = i;
    counts[heaviest] += leftover - distributable;
  }
  return JointEmpiricalMeasure(xi.row_alphabet(), xi.col_alphabet(), n, counts);
}

struct MarginMatchReport {
  JointEmpiricalMeasure nu;
  double kappa;  // max_s |zeta(s) - xi(R x {s})|, the marginal slack actually present
  bool margins_exact;
  bool dominated_by_lambda;
  double joint_distance;
  double joint_bound;  // M kappa + (2/n)(M^2 + M)
  double row_marginal_distance;
  double row_marginal_bound;  // M^2 kappa + (2/n)(M^3 + M^2)
};

namespace detail {

inline void check_margin_match_args(const JointDist& xi, const EmpiricalMeasure& zeta,
                                    const JointDist& lambda) {
  if (xi.row_alphabet() != lambda.row_alphabet() || xi.col_alphabet() != lambda.col_alphabet())
    throw argument_error("match_s_margin: xi and lambda alphabets differ");
  if (zeta.alphabet() != lambda.col_alphabet())
    throw argument_error("match_s_margin: zeta alphabet differs from lambda columns");
  for (std::size_t s = 0; s < lambda.num_cols(); ++s) {
    double mass = 0.0;
    for (std::size_t r = 0; r < lambda.num_rows(); ++r) mass += lambda.at(r, s);
    if (!(mass > 0.0))
      throw argument_error("match_s_margin: lambda column \"" + lambda.col_alphabet().label(s) +
                           "\" has zero mass");
  }
  for (std::size_t r = 0; r < xi.num_rows(); ++r)
    for (std::size_t s = 0; s < xi.num_cols(); ++s)
      if (xi.at(r, s) > 0.0 && !(lambda.at(r, s) > 0.0))
        throw argument_error("match_s_margin: xi puts mass on cell (" + xi.row_alphabet().label(r) +
                             ", " + xi.col_alphabet().label(s) + ") outside the support of lambda");
}

}  // namespace detail

// The margin-matching construction: round xi to the 1/n grid, then fix each
// column to its exact integer budget — trimming surplus from the cells with
// the smallest lambda values first, or dumping deficit onto the row where
// lambda is largest in that column (which exists by the positive-column
// assumption). The output is absolutely continuous w.r.t. lambda; nothing
// stronger is claimed — the surplus row may lie outside the support of xi.
inline JointEmpiricalMeasure match_s_margin(const JointDist& xi, const EmpiricalMeasure& zeta,
                                            const JointDist& lambda) {
  detail::check_margin_match_args(xi, zeta, lambda);
  const long n = zeta.n();
  const std::size_t R = lambda.num_rows(), S = lambda.num_cols();
  JointEmpiricalMeasure rounded = round_to_grid(xi, n);
  std::vector<long> counts(rounded.counts());

  for (std::size_t s = 0; s < S; ++s) {
    long have = 0;
    for (std::size_t r = 0; r < R; ++r) have += counts[r * S + s];
    long want = zeta.count(s);
    if (have > want) {
      // Trim in increasing lambda order, never below zero.
      std::vector<std::size_t> order(R);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return lambda.at(a, s) < lambda.at(b, s); });
      long excess = have - want;
      for (std::size_t r : order) {
        if (excess == 0) break;
        long take = std::min(excess, counts[r * S + s]);
        counts[r * S + s] -= take;
        excess -= take;
      }
    } else if (have < want) {
      std::size_t r_s = 0;
      for (std::size_t r = 1; r < R; ++r)
        if (lambda.at(r, s) > lambda.at(r_s, s)) r_s = r;
      counts[r_s * S + s] += want - have;
    }
  }
  return JointEmpiricalMeasure(lambda.row_alphabet(), lambda.col_alphabet(), n, counts);
}

// Same construction plus the four audited conclusions with their constants.
inline MarginMatchReport match_s_margin_report(const JointDist& xi, const EmpiricalMeasure& zeta,
                                               const JointDist& lambda) {
  JointEmpiricalMeasure nu = match_s_margin(xi, zeta, lambda);
  const long n = zeta.n();
  const double M = double(xi.cell_count());
  const std::size_t R = lambda.num_rows(), S = lambda.num_cols();

  double kappa = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    double xi_col = 0.0;
    for (std::size_t r = 0; r < R; ++r) xi_col += xi.at(r, s);
    kappa = std::max(kappa, std::abs(double(zeta.count(s)) / double(n) - xi_col));
  }

  bool margins_exact = true;
  for (std::size_t s = 0; s < S; ++s) {
    long col = 0;
    for (std::size_t r = 0; r < R; ++r) col += nu.at(r, s);
    if (col != zeta.count(s)) margins_exact = false;
  }
  bool dominated = true;
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t s = 0; s < S; ++s)
      if (nu.at(r, s) > 0 && !(lambda.at(r, s) > 0.0)) dominated = false;

  double joint_distance = prohorov_distance(nu.value(), xi);
  double row_distance = prohorov_distance(nu.value().row_marginal(), xi.row_marginal());
  double inv_n = 1.0 / double(n);
  return MarginMatchReport{std::move(nu),
                           kappa,
                           margins_exact,
                           dominated,
                           joint_distance,
                           M * kappa + 2.0 * inv_n * (M * M + M),
                           row_distance,
                           M * M * kappa + 2.0 * inv_n * (M * M * M + M * M)};
}

struct RoundingCertificate {
  double delta;
  double kappa;
  long N;
};

// The quantifier-ready certificate: kappa = delta / (4 M^2) and the smallest
// N with (2/N)(M^3 + M^2) < delta/2, which together force
// M^2 kappa + (2/N)(M^3 + M^2) < delta.
inline RoundingCertificate certificate_for(const JointDist& xi, double delta) {
  if (!(delta > 0.0)) throw argument_error("certificate_for: delta must be positive");
  const double M = double(xi.cell_count());
  double kappa = delta / (4.0 * M * M);
  double threshold = 4.0 * (M * M * M + M * M) / delta;  // N must exceed this
  long N = static_cast<long>(std::floor(threshold)) + 1;
  while (2.0 / double(N) * (M * M * M + M * M) >= 0.5 * delta) ++N;
  if (!(M * M * kappa + 2.0 / double(N) * (M * M * M + M * M) < delta))
    throw contract_error("certificate_for: chosen constants fail their own invariant");
  return RoundingCertificate{delta, kappa, N};
}

}  // namespace condldp
