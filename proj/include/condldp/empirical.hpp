#pragma once

// Empirical measures (type classes): the 1/n grid on a simplex, its
// enumeration, exact multinomial laws, and the two constructive lemmas used
// everywhere downstream — densification of a coarse empirical measure to any
// finer level, and the level-N certificate for hitting an open ball.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "condldp/errors.hpp"
#include "condldp/logdomain.hpp"
#include "condldp/measures.hpp"

namespace condldp {

// Caps on exhaustive enumeration. Exceeding a cap raises resource_error;
// nothing is ever silently truncated.
struct EnumerationLimits {
  std::uint64_t max_elements = 10'000'000;      // simplex enumeration entries
  std::uint64_t max_table_nodes = 100'000'000;  // contingency-table search nodes
};

class EmpiricalMeasure {
 public:
  EmpiricalMeasure(Alphabet alphabet, long n, std::vector<long> counts)
      : alphabet_(std::move(alphabet)), n_(n), counts_(std::move(counts)) {
    if (n_ < 1) throw argument_error("EmpiricalMeasure: n must be >= 1");
    if (counts_.size() != alphabet_.size())
      throw argument_error("EmpiricalMeasure: count vector does not match alphabet");
    long sum = 0;
    for (long c : counts_) {
      if (c < 0) throw argument_error("EmpiricalMeasure: negative count");
      sum += c;
    }
    if (sum != n_) throw argument_error("EmpiricalMeasure: counts sum to " + std::to_string(sum) +
                                        ", expected n = " + std::to_string(n_));
  }

  const Alphabet& alphabet() const { return alphabet_; }
  long n() const { return n_; }
  const std::vector<long>& counts() const { return counts_; }
  long count(std::size_t i) const { return counts_.at(i); }

  Dist value() const {
    std::vector<double> w(counts_.size());
    for (std::size_t i = 0; i < counts_.size(); ++i) w[i] = double(counts_[i]) / double(n_);
    return Dist(alphabet_, std::move(w));
  }

  RationalDist exact_value() const {
    std::vector<Rational> w(counts_.size());
    for (std::size_t i = 0; i < counts_.size(); ++i) w[i] = Rational(counts_[i], n_);
    return RationalDist(alphabet_, std::move(w));
  }

  friend bool operator==(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
    return a.n_ == b.n_ && a.alphabet_ == b.alphabet_ && a.counts_ == b.counts_;
  }

 private:
  Alphabet alphabet_;
  long n_;
  std::vector<long> counts_;
};

// Empirical measure on a product alphabet R x S, stored row-major like
// JointDist. This is the type of the couplings the rounding lemma builds.
class JointEmpiricalMeasure {
 public:
  JointEmpiricalMeasure(Alphabet row_alphabet, Alphabet col_alphabet, long n, std::vector<long> counts)
      : rows_(std::move(row_alphabet)), cols_(std::move(col_alphabet)), n_(n), counts_(std::move(counts)) {
    if (n_ < 1) throw argument_error("JointEmpiricalMeasure: n must be >= 1");
    if (counts_.size() != rows_.size() * cols_.size())
      throw argument_error("JointEmpiricalMeasure: count vector does not match alphabet pair");
    long sum = 0;
    for (long c : counts_) {
      if (c < 0) throw argument_error("JointEmpiricalMeasure: negative count");
      sum += c;
    }
    if (sum != n_) throw argument_error("JointEmpiricalMeasure: counts sum to " + std::to_string(sum) +
                                        ", expected n = " + std::to_string(n_));
  }

  const Alphabet& row_alphabet() const { return rows_; }
  const Alphabet& col_alphabet() const { return cols_; }
  long n() const { return n_; }
  std::size_t num_rows() const { return rows_.size(); }
  std::size_t num_cols() const { return cols_.size(); }
  const std::vector<long>& counts() const { return counts_; }
  long at(std::size_t r, std::size_t s) const { return counts_[r * cols_.size() + s]; }

  std::vector<long> row_count_sums() const {
    std::vector<long> out(rows_.size(), 0);
    for (std::size_t r = 0; r < rows_.size(); ++r)
      for (std::size_t s = 0; s < cols_.size(); ++s) out[r] += at(r, s);
    return out;
  }

  std::vector<long> col_count_sums() const {
    std::vector<long> out(cols_.size(), 0);
    for (std::size_t r = 0; r < rows_.size(); ++r)
      for (std::size_t s = 0; s < cols_.size(); ++s) out[s] += at(r, s);
    return out;
  }

  EmpiricalMeasure row_empirical() const { return EmpiricalMeasure(rows_, n_, row_count_sums()); }
  EmpiricalMeasure col_empirical() const { return EmpiricalMeasure(cols_, n_, col_count_sums()); }

  JointDist value() const {
    std::vector<double> w(counts_.size());
    for (std::size_t i = 0; i < counts_.size(); ++i) w[i] = double(counts_[i]) / double(n_);
    return JointDist(rows_, cols_, std::move(w));
  }

  RationalJointDist exact_value() const {
    std::vector<Rational> w(counts_.size());
    for (std::size_t i = 0; i < counts_.size(); ++i) w[i] = Rational(counts_[i], n_);
    return RationalJointDist(rows_, cols_, std::move(w));
  }

  friend bool operator==(const JointEmpiricalMeasure& a, const JointEmpiricalMeasure& b) {
    return a.n_ == b.n_ && a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.counts_ == b.counts_;
  }

 private:
  Alphabet rows_;
  Alphabet cols_;
  long n_;
  std::vector<long> counts_;
};

// ---------------------------------------------------------------------------
// Simplex enumeration

// binom(n + k - 1, k - 1), saturating at 2^63-1 so cap comparisons stay safe.
inline std::uint64_t simplex_cardinality(long n, std::size_t k) {
  unsigned __int128 acc = 1;
  const unsigned __int128 limit = static_cast<std::uint64_t>(INT64_MAX);
  for (std::size_t j = 1; j < k; ++j) {
    acc = acc * static_cast<unsigned __int128>(n + j) / j;  // exact: product of j consecutive ints
    if (acc > limit) return static_cast<std::uint64_t>(INT64_MAX);
  }
  return static_cast<std::uint64_t>(acc);
}

// Visits every length-k nonnegative integer vector summing to n, exactly once,
// first coordinate descending (so (n,0,...,0) is first). The scratch vector is
// reused between visits; callers must copy if they keep it.
template <class Fn>
void for_each_composition(long n, std::size_t k, Fn&& visit) {
  std::vector<long> counts(k, 0);
  auto rec = [&](auto&& self, std::size_t cell, long remaining) -> void {
    if (cell == k - 1) {
      counts[cell] = remaining;
      visit(counts);
      return;
    }
    for (long c = remaining; c >= 0; --c) {
      counts[cell] = c;
      self(self, cell + 1, remaining - c);
    }
  };
  rec(rec, 0, n);
}

inline std::vector<EmpiricalMeasure> enumerate_empirical(long n, const Alphabet& alphabet,
                                                         const EnumerationLimits& limits = {}) {
  if (n < 1) throw argument_error("enumerate_empirical: n must be >= 1");
  std::uint64_t total = simplex_cardinality(n, alphabet.size());
  if (total > limits.max_elements)
    throw resource_error("enumerate_empirical: simplex has " + std::to_string(total) +
                         " elements, cap is " + std::to_string(limits.max_elements));
  std::vector<EmpiricalMeasure> out;
  out.reserve(static_cast<std::size_t>(total));
  for_each_composition(n, alphabet.size(),
                       [&](const std::vector<long>& c) { out.emplace_back(alphabet, n, c); });
  return out;
}

// ---------------------------------------------------------------------------
// Multinomial laws

namespace detail {
// log[ n!/(prod c_i!) * prod w_i^{c_i} ]; -infinity when a positive count sits
// on a zero weight.
inline double log_multinomial_from_counts(const std::vector<long>& counts, long n,
                                          const std::vector<double>& weights,
                                          const LogFactorialTable& lft) {
  double acc = lft(n);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    long c = counts[i];
    if (c == 0) continue;
    if (weights[i] == 0.0) return neg_infinity;
    acc += double(c) * std::log(weights[i]) - lft(c);
  }
  return acc;
}
}  // namespace detail

inline double log_multinomial_prob(const JointEmpiricalMeasure& nu, const JointDist& lambda) {
  if (nu.row_alphabet() != lambda.row_alphabet() || nu.col_alphabet() != lambda.col_alphabet())
    throw argument_error("log_multinomial_prob: alphabet pair mismatch");
  LogFactorialTable lft(static_cast<std::size_t>(nu.n()));
  return detail::log_multinomial_from_counts(nu.counts(), nu.n(), lambda.weights(), lft);
}

inline double log_multinomial_prob(const EmpiricalMeasure& nu, const Dist& lambda) {
  if (nu.alphabet() != lambda.alphabet())
    throw argument_error("log_multinomial_prob: alphabet mismatch");
  LogFactorialTable lft(static_cast<std::size_t>(nu.n()));
  return detail::log_multinomial_from_counts(nu.counts(), nu.n(), lambda.weights(), lft);
}

// Exact-mode multinomial mass: a single big rational, no rounding anywhere.
inline Rational multinomial_prob_exact(const std::vector<long>& counts, long n,
                                       const std::vector<Rational>& weights) {
  BigInt coef = factorial_big(n);
  for (long c : counts) coef /= factorial_big(c);
  Rational acc(coef, 1);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    if (weights[i] == 0) return Rational(0);
    acc *= rational_pow(weights[i], counts[i]);
  }
  return acc;
}

inline Rational multinomial_prob_exact(const JointEmpiricalMeasure& nu, const RationalJointDist& lambda) {
  return multinomial_prob_exact(nu.counts(), nu.n(), lambda.weights());
}

// mu_n(A x B): total multinomial mass of level-n joint empirical measures
// whose marginal pair lands in A x B. Exact summation over the whole simplex.
inline double joint_empirical_law(long n, const JointDist& lambda,
                                  const std::function<bool(const Dist&)>& A,
                                  const std::function<bool(const Dist&)>& B,
                                  const EnumerationLimits& limits = {}) {
  std::size_t M = lambda.cell_count();
  std::uint64_t total = simplex_cardinality(n, M);
  if (total > limits.max_elements)
    throw resource_error("joint_empirical_law: simplex has " + std::to_string(total) +
                         " elements, cap is " + std::to_string(limits.max_elements));
  LogFactorialTable lft(static_cast<std::size_t>(n));
  const std::size_t S = lambda.num_cols(), R = lambda.num_rows();
  LogSumAccumulator acc;
  std::vector<double> phi(R), psi(S);
  for_each_composition(n, M, [&](const std::vector<long>& c) {
    for (std::size_t r = 0; r < R; ++r) phi[r] = 0.0;
    for (std::size_t s = 0; s < S; ++s) psi[s] = 0.0;
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t s = 0; s < S; ++s) {
        double v = double(c[r * S + s]) / double(n);
        phi[r] += v;
        psi[s] += v;
      }
    if (!A(Dist(lambda.row_alphabet(), phi))) return;
    if (!B(Dist(lambda.col_alphabet(), psi))) return;
    acc.add(detail::log_multinomial_from_counts(c, n, lambda.weights(), lft));
  });
  double log_mass = acc.log_total();
  return log_mass == neg_infinity ? 0.0 : std::exp(log_mass);
}

// ---------------------------------------------------------------------------
// Denseness constructions

// Refines zeta in P_emp^k(S) to level m >= k*l by mixing with a filler point
// mass on the first label: with l' = floor(m/k) and i = m - l'k the result is
// (l'k/m) zeta + (i/m) delta_first. Guarantees fd(result, zeta) <= 2/l' <= 2/l.
// (The guarantee follows the underlying lemma's proof; its statement advertises
// 1/l, which the proof does not deliver, so the contract here is 2/l.)
inline EmpiricalMeasure densify(const EmpiricalMeasure& zeta, long l, long m) {
  if (l < 1) throw argument_error("densify: l must be >= 1");
  long k = zeta.n();
  if (m < k * l)
    throw argument_error("densify: m = " + std::to_string(m) + " is below k*l = " + std::to_string(k * l));
  long lp = m / k;
  long i = m - lp * k;
  std::vector<long> counts(zeta.counts().size());
  for (std::size_t j = 0; j < counts.size(); ++j) counts[j] = lp * zeta.count(j);
  counts[0] += i;
  return EmpiricalMeasure(zeta.alphabet(), m, std::move(counts));
}

// The fd-nearest element of P_emp^n to a target distribution. Floors each
// coordinate onto the 1/n grid, then hands the remaining units to the largest
// fractional remainders (ties toward the earlier label, so for a symmetric tie
// the first coordinate wins: target (.5,.5), n=3 gives counts (2,1)).
inline EmpiricalMeasure nearest_empirical(const Dist& target, long n) {
  if (n < 1) throw argument_error("nearest_empirical: n must be >= 1");
  std::size_t k = target.size();
  std::vector<long> counts(k);
  std::vector<std::pair<double, std::size_t>> remainders(k);
  long used = 0;
  for (std::size_t i = 0; i < k; ++i) {
    double scaled = double(n) * target[i];
    long fl = static_cast<long>(std::floor(scaled));
    if (fl > n) fl = n;
    counts[i] = fl;
    used += fl;
    remainders[i] = {scaled - double(fl), i};
  }
  long spare = n - used;
  // Sort by remainder descending, index ascending; stable order by explicit key.
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (long j = 0; j < spare; ++j) counts[remainders[static_cast<std::size_t>(j)].second] += 1;
  return EmpiricalMeasure(target.alphabet(), n, std::move(counts));
}

// Certificate that the open ball B(center, delta) meets P_emp^n for every
// n >= N, with an explicit witness construction: a base measure zeta at level
// k within delta/2 of the center, densified with l chosen so 2/l < delta/2.
struct BallCoverage {
  long N = 1;
  long k = 1;
  long l = 1;
  EmpiricalMeasure zeta;

  // An element of P_emp^n within the ball, valid for any n >= N.
  EmpiricalMeasure witness(long n) const {
    if (n < N) throw argument_error("BallCoverage::witness: n below certified level N");
    return densify(zeta, l, n);
  }
};

inline BallCoverage find_N_for_ball(const Dist& center, double delta) {
  if (!(delta > 0.0)) throw argument_error("find_N_for_ball: delta must be positive");
  if (delta >= 1.0) {
    // Any point mass on a positively weighted label already lies strictly
    // within distance 1, and densify with l = 1 keeps it a point mass.
    return BallCoverage{1, 1, 1, nearest_empirical(center, 1)};
  }
  // fd(nearest level-k, center) <= #S/(2k), so any k > #S/delta works; we take
  // the first k that does, which keeps N small when the center is coarse.
  long k_bound = static_cast<long>(std::ceil(double(center.size()) / delta)) + 1;
  for (long k = 1; k <= k_bound; ++k) {
    EmpiricalMeasure zeta = nearest_empirical(center, k);
    if (prohorov_distance(zeta.value(), center) < delta / 2.0) {
      long l = static_cast<long>(std::floor(4.0 / delta)) + 1;  // smallest l with 2/l < delta/2
      return BallCoverage{l * k, k, l, std::move(zeta)};
    }
  }
  throw contract_error("find_N_for_ball: rounding bound failed to produce a base measure");
}

}  // namespace condldp
