#pragma once

// Probability vectors and matrices on finite alphabets, in two arithmetic
// flavours sharing one template: T = double (default, log-domain friendly)
// or T = Rational (exact mode). Construction validates; afterwards values are
// immutable, so everything downstream can treat them as plain data.

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "condldp/alphabet.hpp"
#include "condldp/errors.hpp"
#include "condldp/logdomain.hpp"
#include "condldp/rational.hpp"

namespace condldp {

namespace detail {

template <class T>
struct weight_traits;

// Double weights: nonnegative, sum within 1e-12 of 1; small deficits are
// renormalized away so that chained computations (scalings, mixtures) do not
// accumulate drift, larger ones are rejected as user error.
template <>
struct weight_traits<double> {
  static constexpr double sum_tolerance = 1e-12;

  static void validate_and_normalize(std::vector<double>& w, const char* who) {
    double sum = 0.0;
    for (double x : w) {
      if (std::isnan(x)) throw argument_error(std::string(who) + ": NaN weight");
      if (x < 0.0) throw argument_error(std::string(who) + ": negative weight");
      sum += x;
    }
    if (std::abs(sum - 1.0) > sum_tolerance)
      throw argument_error(std::string(who) + ": weights sum to " + std::to_string(sum) +
                           ", outside tolerance 1e-12 of 1");
    if (sum != 1.0)
      for (double& x : w) x /= sum;
  }
};

// Exact weights must sum to exactly 1; there is no tolerance to hide behind.
template <>
struct weight_traits<Rational> {
  static void validate_and_normalize(std::vector<Rational>& w, const char* who) {
    Rational sum = 0;
    for (const Rational& x : w) {
      if (x < 0) throw argument_error(std::string(who) + ": negative weight");
      sum += x;
    }
    if (sum != 1) throw argument_error(std::string(who) + ": weights must sum to exactly 1 in exact mode");
  }
};

}  // namespace detail

template <class T>
class BasicDist {
 public:
  BasicDist(Alphabet alphabet, std::vector<T> weights)
      : alphabet_(std::move(alphabet)), weights_(std::move(weights)) {
    if (weights_.size() != alphabet_.size())
      throw argument_error("Dist: weight count does not match alphabet size");
    detail::weight_traits<T>::validate_and_normalize(weights_, "Dist");
  }

  const Alphabet& alphabet() const { return alphabet_; }
  std::size_t size() const { return weights_.size(); }
  const T& operator[](std::size_t i) const { return weights_.at(i); }
  const std::vector<T>& weights() const { return weights_; }

  static BasicDist point_mass(Alphabet alphabet, std::size_t at) {
    std::vector<T> w(alphabet.size(), T(0));
    w.at(at) = T(1);
    return BasicDist(std::move(alphabet), std::move(w));
  }

  static BasicDist uniform(Alphabet alphabet) {
    std::size_t k = alphabet.size();
    std::vector<T> w(k, T(1) / T(static_cast<long>(k)));
    return BasicDist(std::move(alphabet), std::move(w));
  }

  friend bool operator==(const BasicDist& a, const BasicDist& b) {
    return a.alphabet_ == b.alphabet_ && a.weights_ == b.weights_;
  }

 private:
  Alphabet alphabet_;
  std::vector<T> weights_;
};

using Dist = BasicDist<double>;
using RationalDist = BasicDist<Rational>;

template <class T>
class BasicJointDist {
 public:
  // weights row-major: entry (r, s) at index r * #S + s.
  BasicJointDist(Alphabet row_alphabet, Alphabet col_alphabet, std::vector<T> weights)
      : rows_(std::move(row_alphabet)), cols_(std::move(col_alphabet)), weights_(std::move(weights)) {
    if (weights_.size() != rows_.size() * cols_.size())
      throw argument_error("JointDist: weight count does not match alphabet pair");
    detail::weight_traits<T>::validate_and_normalize(weights_, "JointDist");
  }

  const Alphabet& row_alphabet() const { return rows_; }
  const Alphabet& col_alphabet() const { return cols_; }
  std::size_t num_rows() const { return rows_.size(); }
  std::size_t num_cols() const { return cols_.size(); }
  std::size_t cell_count() const { return weights_.size(); }  // M = #R * #S
  const T& at(std::size_t r, std::size_t s) const { return weights_[r * cols_.size() + s]; }
  const std::vector<T>& weights() const { return weights_; }

  BasicDist<T> row_marginal() const {  // xi(. x S), a Dist over R
    std::vector<T> w(rows_.size(), T(0));
    for (std::size_t r = 0; r < rows_.size(); ++r)
      for (std::size_t s = 0; s < cols_.size(); ++s) w[r] += at(r, s);
    return BasicDist<T>(rows_, std::move(w));
  }

  BasicDist<T> col_marginal() const {  // xi(R x .), a Dist over S
    std::vector<T> w(cols_.size(), T(0));
    for (std::size_t r = 0; r < rows_.size(); ++r)
      for (std::size_t s = 0; s < cols_.size(); ++s) w[s] += at(r, s);
    return BasicDist<T>(cols_, std::move(w));
  }

  // The standing support assumption of the conditional-kernel setting:
  // every column must carry positive mass for theta to exist.
  bool every_column_positive() const {
    for (std::size_t s = 0; s < cols_.size(); ++s) {
      T m(0);
      for (std::size_t r = 0; r < rows_.size(); ++r) m += at(r, s);
      if (!(m > T(0))) return false;
    }
    return true;
  }

  friend bool operator==(const BasicJointDist& a, const BasicJointDist& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.weights_ == b.weights_;
  }

 private:
  Alphabet rows_;
  Alphabet cols_;
  std::vector<T> weights_;
};

using JointDist = BasicJointDist<double>;
using RationalJointDist = BasicJointDist<Rational>;

// Conditional kernel theta: one distribution over the target alphabet per
// source symbol. Row s is the law of the draw given the conditioning symbol s.
template <class T>
class BasicKernel {
 public:
  BasicKernel(Alphabet source, Alphabet target, std::vector<BasicDist<T>> rows)
      : source_(std::move(source)), target_(std::move(target)), rows_(std::move(rows)) {
    if (rows_.size() != source_.size())
      throw argument_error("Kernel: need exactly one row per source symbol");
    for (const auto& row : rows_)
      if (row.alphabet() != target_) throw argument_error("Kernel: row alphabet differs from target");
  }

  const Alphabet& source() const { return source_; }
  const Alphabet& target() const { return target_; }
  const BasicDist<T>& row(std::size_t s) const { return rows_.at(s); }

 private:
  Alphabet source_;
  Alphabet target_;
  std::vector<BasicDist<T>> rows_;
};

using Kernel = BasicKernel<double>;
using RationalKernel = BasicKernel<Rational>;

// ---------------------------------------------------------------------------
// Operations

namespace detail {
inline void require_same_shape(const Dist& a, const Dist& b, const char* who) {
  if (a.alphabet() != b.alphabet()) throw argument_error(std::string(who) + ": alphabets differ");
}
template <class T>
void require_same_shape(const BasicJointDist<T>& a, const BasicJointDist<T>& b, const char* who) {
  if (a.row_alphabet() != b.row_alphabet() || a.col_alphabet() != b.col_alphabet())
    throw argument_error(std::string(who) + ": alphabet pairs differ");
}

inline double relative_entropy_terms(const std::vector<double>& xi, const std::vector<double>& lam) {
  double h = 0.0;
  for (std::size_t i = 0; i < xi.size(); ++i) {
    if (xi[i] == 0.0) continue;  // 0 log 0 = 0
    if (lam[i] == 0.0) return pos_infinity;
    h += xi[i] * std::log(xi[i] / lam[i]);
  }
  return h < 0.0 && h > -1e-15 ? 0.0 : h;  // clip the rounding dust below zero
}
}  // namespace detail

// H(xi | lambda) = sum xi log(xi/lambda); +infinity off absolute continuity.
inline double relative_entropy(const Dist& xi, const Dist& lambda) {
  detail::require_same_shape(xi, lambda, "relative_entropy");
  return detail::relative_entropy_terms(xi.weights(), lambda.weights());
}

inline double relative_entropy(const JointDist& xi, const JointDist& lambda) {
  detail::require_same_shape(xi, lambda, "relative_entropy");
  return detail::relative_entropy_terms(xi.weights(), lambda.weights());
}

// Prohorov distance for the discrete metric. For epsilon <= 1 the epsilon-
// enlargement of a set is the set itself, so the Prohorov infimum collapses to
// the total-variation sup-distance sup_A (mu(A) - nu(A)) = half the L1 gap.
template <class T>
T prohorov_distance(const BasicDist<T>& mu, const BasicDist<T>& nu) {
  detail::require_same_shape(mu, nu, "prohorov_distance");
  T acc(0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    T d = mu[i] - nu[i];
    acc += d < T(0) ? -d : d;
  }
  return acc / T(2);
}

template <class T>
T prohorov_distance(const BasicJointDist<T>& mu, const BasicJointDist<T>& nu) {
  detail::require_same_shape(mu, nu, "prohorov_distance");
  T acc(0);
  for (std::size_t i = 0; i < mu.weights().size(); ++i) {
    T d = mu.weights()[i] - nu.weights()[i];
    acc += d < T(0) ? -d : d;
  }
  return acc / T(2);
}

// The marginal pair (xi(. x S), xi(R x .)).
template <class T>
std::pair<BasicDist<T>, BasicDist<T>> marginals(const BasicJointDist<T>& xi) {
  return {xi.row_marginal(), xi.col_marginal()};
}

// theta(s, r) = lambda(r, s) / lambda(R x {s}): the conditional law of the
// row symbol given column symbol s. Requires positive mass in every column.
template <class T>
BasicKernel<T> conditional_theta(const BasicJointDist<T>& lambda) {
  std::vector<BasicDist<T>> rows;
  rows.reserve(lambda.num_cols());
  for (std::size_t s = 0; s < lambda.num_cols(); ++s) {
    T mass(0);
    for (std::size_t r = 0; r < lambda.num_rows(); ++r) mass += lambda.at(r, s);
    if (!(mass > T(0)))
      throw argument_error("conditional_theta: column '" + lambda.col_alphabet().label(s) +
                           "' has zero marginal mass");
    std::vector<T> w(lambda.num_rows());
    for (std::size_t r = 0; r < lambda.num_rows(); ++r) w[r] = lambda.at(r, s) / mass;
    rows.emplace_back(lambda.row_alphabet(), std::move(w));
  }
  return BasicKernel<T>(lambda.col_alphabet(), lambda.row_alphabet(), std::move(rows));
}

// rho (x) sigma as a joint matrix; the independent-coordinates base measure.
template <class T>
BasicJointDist<T> product_joint(const BasicDist<T>& rho, const BasicDist<T>& sigma) {
  std::vector<T> w(rho.size() * sigma.size());
  for (std::size_t r = 0; r < rho.size(); ++r)
    for (std::size_t s = 0; s < sigma.size(); ++s) w[r * sigma.size() + s] = rho[r] * sigma[s];
  return BasicJointDist<T>(rho.alphabet(), sigma.alphabet(), std::move(w));
}

// Reassembles a joint measure from a column marginal and a kernel:
// xi(r, s) = psi(s) * theta(s, r). Inverse of conditional_theta.
template <class T>
BasicJointDist<T> join_margin_with_kernel(const BasicDist<T>& psi, const BasicKernel<T>& theta) {
  if (psi.alphabet() != theta.source())
    throw argument_error("join_margin_with_kernel: margin alphabet differs from kernel source");
  std::size_t R = theta.target().size(), S = psi.size();
  std::vector<T> w(R * S);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t r = 0; r < R; ++r) w[r * S + s] = psi[s] * theta.row(s)[r];
  return BasicJointDist<T>(theta.target(), psi.alphabet(), std::move(w));
}

}  // namespace condldp
