#pragma once

// Log-domain numeric primitives shared by every module: stable log-sum-exp,
// cached log-factorials, and a compensated streaming accumulator for sums of
// exponentials that never materializes the term list.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "condldp/errors.hpp"

namespace condldp {

inline constexpr double neg_infinity = -std::numeric_limits<double>::infinity();
inline constexpr double pos_infinity = std::numeric_limits<double>::infinity();

// log(sum_i exp(v_i)), stable. Guarantees max(v) <= result <= max(v) + log(k):
// the shifted sum is >= 1 because the max term contributes exp(0) = 1 exactly,
// and each shifted term is <= 1, so both bounds survive floating point.
inline double log_sum(const std::vector<double>& values) {
  if (values.empty()) throw argument_error("log_sum: empty list");
  double m = neg_infinity;
  for (double v : values)
    if (v > m) m = v;
  if (m == neg_infinity) return neg_infinity;
  if (m == pos_infinity) return pos_infinity;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

// Streaming log-sum-exp with Kahan compensation. Terms arrive one at a time in
// a deterministic order; memory stays O(1) even for tens of millions of terms.
class LogSumAccumulator {
 public:
  void add(double v) {
    if (v == neg_infinity) return;
    ++count_;
    if (v <= max_) {
      kahan_add(std::exp(v - max_));
    } else {
      // Rescale the running sum (and its compensation) to the new pivot.
      double scale = (max_ == neg_infinity) ? 0.0 : std::exp(max_ - v);
      sum_ *= scale;
      carry_ *= scale;
      max_ = v;
      kahan_add(1.0);
    }
  }

  // log of the accumulated sum; -inf when nothing (finite) was added.
  double log_total() const {
    if (max_ == neg_infinity) return neg_infinity;
    return max_ + std::log(sum_ - carry_);  // carry_ is the excess currently inside sum_
  }

  std::size_t count() const { return count_; }

 private:
  void kahan_add(double x) {
    double y = x - carry_;
    double t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }

  double max_ = neg_infinity;
  double sum_ = 0.0;
  double carry_ = 0.0;
  std::size_t count_ = 0;
};

// log(i!) for i = 0..n, computed once per arena and shared by the hot loops.
class LogFactorialTable {
 public:
  explicit LogFactorialTable(std::size_t n) : table_(n + 1) {
    table_[0] = 0.0;
    for (std::size_t i = 1; i <= n; ++i) table_[i] = table_[i - 1] + std::log(double(i));
  }

  double operator()(long i) const { return table_[static_cast<std::size_t>(i)]; }
  std::size_t max_n() const { return table_.size() - 1; }

 private:
  std::vector<double> table_;
};

// i*log(i) for i = 0..n with the 0*log(0) = 0 convention; used when converting
// counts to entropies without repeated log calls.
class XLogXTable {
 public:
  explicit XLogXTable(std::size_t n) : table_(n + 1) {
    table_[0] = 0.0;
    for (std::size_t i = 1; i <= n; ++i) table_[i] = double(i) * std::log(double(i));
  }

  double operator()(long i) const { return table_[static_cast<std::size_t>(i)]; }

 private:
  std::vector<double> table_;
};

}  // namespace condldp
