#pragma once

// Closed-form continuous companions to the finite-alphabet machinery: a
// Gaussian conditioning pair with explicit cumulant and rate, two-component
// mixture kernels with calibrated blending weights, and the conditioned-ratio
// family whose decay shows the naive conditional lower bound failing.
// Everything here is closed form; quadrature exists only in the test suite as
// an independent check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "condldp/errors.hpp"
#include "condldp/logdomain.hpp"

namespace condldp {

// log of the standard normal upper tail P(Z > x), stable for all x. Below the
// crossover, erfc carries full precision (it underflows only near x ~ 37);
// above it, the asymptotic expansion
//   log tail = -x^2/2 - log(x sqrt(2 pi)) + log(1 - 1/x^2 + 3/x^4 - ...)
// is already accurate to ~3e-16 with the terms kept here.
inline double normal_tail_log(double x) {
  if (std::isnan(x)) throw argument_error("normal_tail_log: x is NaN");
  if (x < 0.0) {
    // tail(x) = 1 - tail(-x); safe in linear space since tail(-x) <= 1/2.
    return std::log1p(-std::exp(normal_tail_log(-x)));
  }
  if (x <= 30.0) return std::log(0.5 * std::erfc(x / std::sqrt(2.0)));
  double u = 1.0 / (x * x);
  double series = 1.0 + u * (-1.0 + u * (3.0 + u * (-15.0 + u * (105.0 + u * (-945.0 + u * 10395.0)))));
  return -0.5 * x * x - std::log(x * std::sqrt(2.0 * std::numbers::pi)) + std::log(series);
}

inline double normal_upper_tail(double x) { return std::exp(normal_tail_log(x)); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Mass the standard normal puts on [-1, 1]; the calibration level of the
// epsilon_n construction below.
inline double standard_normal_unit_band() { return std::erf(1.0 / std::sqrt(2.0)); }

// --- Gaussian conditioning pair ---------------------------------------------

// (X, Y) jointly Gaussian with unit variances and coupling coefficient r; the
// conditional law of X given Y = y at sample size n is Normal(r y, 1/n).
struct GaussianPairFamily {
  double r;
  explicit GaussianPairFamily(double coupling) : r(coupling) {
    if (coupling == 0.0 || std::isnan(coupling))
      throw argument_error("GaussianPairFamily: coupling coefficient must be nonzero");
  }
};

// (1/n) log of int e^{n lam x} dNormal(r y_n, 1/n)(x) — the Gaussian
// moment-generating formula, so exactly lam*r*y_n + lam^2/2 with no n left.
inline double gaussian_cumulant(long n, double y_n, double lam, const GaussianPairFamily& family) {
  if (n < 1) throw argument_error("gaussian_cumulant: n must be >= 1");
  return lam * family.r * y_n + 0.5 * lam * lam;
}

inline double gaussian_cumulant_limit(double y, double lam, const GaussianPairFamily& family) {
  return lam * family.r * y + 0.5 * lam * lam;
}

// Rate function of the conditional family: x -> (x - r y)^2. Satisfies
// (x^2 - 2 r x y + y^2)/2 - (1 - r^2) y^2 / 2 = (x - r y)^2 / 2.
inline double gaussian_rate(double x, double y, const GaussianPairFamily& family) {
  double d = x - family.r * y;
  return d * d;
}

// --- interval events ---------------------------------------------------------

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_open = false;
  bool hi_open = false;

  bool contains(double x) const {
    if (lo_open ? !(x > lo) : !(x >= lo)) return false;
    if (hi_open ? !(x < hi) : !(x <= hi)) return false;
    return true;
  }
};

// A finite union of pairwise disjoint intervals.
using IntervalUnion = std::vector<Interval>;

inline void validate_event(const IntervalUnion& event) {
  for (const Interval& iv : event) {
    if (std::isnan(iv.lo) || std::isnan(iv.hi))
      throw argument_error("interval event: NaN endpoint");
    if (!(iv.lo <= iv.hi))
      throw argument_error("interval event: lower endpoint exceeds upper endpoint");
  }
  std::vector<Interval> sorted(event);
  std::sort(sorted.begin(), sorted.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i].lo < sorted[i - 1].hi)
      throw argument_error("interval event: intervals overlap");
}

// --- mixture kernels ----------------------------------------------------------

enum class Mu1Spec { gaussian_scaled, geometric_on_naturals };
enum class Mu2Spec { dirac_at_1_over_n, dirac_at_n };
enum class NuSpec { exponential_rate_n, gaussian_scaled, gaussian_scaled_plus_atom };
enum class AlphaSpec { linear_ramp, calibrated_phi_epsilon };

// One of the concrete two-component families: the conditional kernel is
//   eta_n(y, A) = alpha_n(y) mu1_n(A) + (1 - alpha_n(y)) mu2_n(A),
// blended by a conditioning marginal nu_n that concentrates at 0.
struct MixtureFamily {
  Mu1Spec mu1;
  Mu2Spec mu2;
  NuSpec nu;
  AlphaSpec alpha;
};

inline void validate_mixture_family(const MixtureFamily& f) {
  bool mu_ok = (f.mu1 == Mu1Spec::gaussian_scaled && f.mu2 == Mu2Spec::dirac_at_1_over_n) ||
               (f.mu1 == Mu1Spec::geometric_on_naturals && f.mu2 == Mu2Spec::dirac_at_n);
  if (!mu_ok)
    throw argument_error("mixture family: mu1/mu2 must pair gaussian_scaled with dirac_at_1_over_n or "
                         "geometric_on_naturals with dirac_at_n");
  bool nu_ok = (f.nu == NuSpec::exponential_rate_n && f.alpha == AlphaSpec::linear_ramp) ||
               (f.nu == NuSpec::gaussian_scaled && f.alpha == AlphaSpec::calibrated_phi_epsilon) ||
               (f.nu == NuSpec::gaussian_scaled_plus_atom && f.alpha == AlphaSpec::calibrated_phi_epsilon);
  if (!nu_ok)
    throw argument_error("mixture family: nu/alpha must pair exponential_rate_n with linear_ramp or a "
                         "gaussian nu with calibrated_phi_epsilon");
}

// int over [0, 1/n) of min(ny,1) n e^{-ny} dy and its complement: both
// independent of n by scaling, equal to (1 - 2/e, 1/e).
inline std::pair<double, double> exponential_mixture_weights(long n) {
  if (n < 1) throw argument_error("exponential_mixture_weights: n must be >= 1");
  return {1.0 - 2.0 * std::exp(-1.0), std::exp(-1.0)};
}

// --- the ramp calibration -----------------------------------------------------

namespace detail {

// g(eps) = int over [-k, k] of min(|z|/eps, 1) dNormal(0, 1/n), k = 1/sqrt(n).
// Strictly decreasing in eps on (0, k).
inline double ramp_band_integral(long n, double eps) {
  double sn = std::sqrt(double(n));
  double inner = -std::expm1(-0.5 * double(n) * eps * eps);  // 1 - e^{-n eps^2 / 2}
  double first = (2.0 / (eps * std::sqrt(2.0 * std::numbers::pi * double(n)))) * inner;
  double second = 2.0 * (normal_cdf(1.0) - normal_cdf(eps * sn));
  return first + second;
}

}  // namespace detail

// The two halves of the band mass at ramp width eps: int phi_eps dnu_n and
// int (1 - phi_eps) dnu_n over [-1/sqrt(n), 1/sqrt(n)], nu_n = Normal(0,1/n).
inline std::pair<double, double> calibrated_half_integrals(long n, double eps) {
  if (n < 1) throw argument_error("calibrated_half_integrals: n must be >= 1");
  if (!(eps > 0.0)) throw argument_error("calibrated_half_integrals: eps must be positive");
  double g = detail::ramp_band_integral(n, eps);
  return {g, standard_normal_unit_band() - g};
}

// The ramp width eps_n in (0, 1/sqrt(n)) splitting the band mass evenly:
// both half-integrals equal beta/2. Found by bisection (the integrand is
// strictly decreasing in eps); by scale invariance eps_n = c/sqrt(n) for a
// fixed constant c, which is what makes the sequence strictly decreasing.
inline double find_epsilon_n(long n) {
  if (n < 1) throw argument_error("find_epsilon_n: n must be >= 1");
  const double kappa = 1.0 / std::sqrt(double(n));
  const double half_beta = 0.5 * standard_normal_unit_band();
  double lo = 1e-15 * kappa, hi = kappa * (1.0 - 1e-12);
  double glo = detail::ramp_band_integral(n, lo) - half_beta;
  double ghi = detail::ramp_band_integral(n, hi) - half_beta;
  if (!(glo > 0.0) || !(ghi < 0.0))
    throw contract_error("find_epsilon_n: bracket does not straddle the calibration level");
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double gm = detail::ramp_band_integral(n, mid) - half_beta;
    if (std::abs(gm) <= 1e-14) return mid;
    if (gm > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// --- component measures -------------------------------------------------------

namespace detail {

inline double gaussian_scaled_mass(long n, const IntervalUnion& event) {
  double sn = std::sqrt(double(n));
  double total = 0.0;
  for (const Interval& iv : event) {
    double hi = std::isinf(iv.hi) ? 1.0 : normal_cdf(sn * iv.hi);
    double lo = std::isinf(iv.lo) && iv.lo < 0 ? 0.0 : normal_cdf(sn * iv.lo);
    total += hi - lo;
  }
  return total;
}

// Geometric on {1, 2, ...} with weights 2^{-k}: partial sums collapse to
// 2^{1-a} - 2^{-b}.
inline double geometric_mass(const IntervalUnion& event) {
  double total = 0.0;
  for (const Interval& iv : event) {
    double lo_real = iv.lo, hi_real = iv.hi;
    long a;
    if (std::isinf(lo_real) && lo_real < 0)
      a = 1;
    else {
      double c = std::ceil(lo_real);
      if (c == lo_real && iv.lo_open) c += 1.0;
      a = c < 1.0 ? 1 : static_cast<long>(c);
    }
    if (std::isinf(hi_real)) {
      if (a > 1100) continue;  // below double underflow anyway
      total += std::exp2(double(1 - a));
      continue;
    }
    double f = std::floor(hi_real);
    if (f == hi_real && iv.hi_open) f -= 1.0;
    if (f < double(a)) continue;
    long b = static_cast<long>(f);
    total += std::exp2(double(1 - a)) - std::exp2(double(-b));
  }
  return total;
}

inline double dirac_mass(double point, const IntervalUnion& event) {
  for (const Interval& iv : event)
    if (iv.contains(point)) return 1.0;
  return 0.0;
}

}  // namespace detail

inline double mixture_alpha(long n, double y, const MixtureFamily& family) {
  validate_mixture_family(family);
  if (n < 1) throw argument_error("mixture_alpha: n must be >= 1");
  if (family.alpha == AlphaSpec::linear_ramp) {
    if (y < 0.0)
      throw argument_error("mixture_alpha: the exponential family conditions on y >= 0");
    return std::min(double(n) * y, 1.0);
  }
  double eps = find_epsilon_n(n);
  return std::min(std::abs(y) / eps, 1.0);
}

// eta_n(y, event) = alpha_n(y) mu1_n(event) + (1 - alpha_n(y)) mu2_n(event).
inline double mixture_kernel_eval(long n, double y, const MixtureFamily& family, const IntervalUnion& event) {
  validate_mixture_family(family);
  if (n < 1) throw argument_error("mixture_kernel_eval: n must be >= 1");
  validate_event(event);
  double a = mixture_alpha(n, y, family);
  double m1 = family.mu1 == Mu1Spec::gaussian_scaled ? detail::gaussian_scaled_mass(n, event)
                                                     : detail::geometric_mass(event);
  double m2 = family.mu2 == Mu2Spec::dirac_at_1_over_n
                  ? detail::dirac_mass(1.0 / double(n), event)
                  : detail::dirac_mass(double(n), event);
  return a * m1 + (1.0 - a) * m2;
}

// The blending-weight hypothesis of the mixture theorem: the two integrals
// int over W_n of alpha_n dnu_n and of (1 - alpha_n) dnu_n, in closed form.
// Both are constant in n for every configured family, so their (1/n) log
// tends to 0 — the hypothesis the theorem needs.
inline std::pair<double, double> mixture_hypothesis_weights(long n, const MixtureFamily& family) {
  validate_mixture_family(family);
  if (n < 1) throw argument_error("mixture_hypothesis_weights: n must be >= 1");
  const double beta = standard_normal_unit_band();
  switch (family.nu) {
    case NuSpec::exponential_rate_n:
      return exponential_mixture_weights(n);
    case NuSpec::gaussian_scaled:
      return {0.5 * beta, 0.5 * beta};
    case NuSpec::gaussian_scaled_plus_atom:
      // nu0 = (delta_0 + Normal(0,1/n)) / 2; the atom sits where the ramp
      // vanishes, so it all lands in the complementary integral.
      return {0.25 * beta, 0.5 + 0.25 * beta};
  }
  throw contract_error("mixture_hypothesis_weights: unreachable family");
}

// --- the failing lower bound --------------------------------------------------

namespace detail {

// 1 - e^{-x}(1 + x) without cancellation: series sum_{k>=2} (-1)^k (k-1)/k! x^k
// below 1/2, direct evaluation above.
inline double one_minus_exp_linear(double x) {
  if (x >= 0.5) return 1.0 - std::exp(-x) * (1.0 + x);
  double total = 0.0;
  double xk = x * x;  // x^k, starting at k = 2
  double kfact = 2.0;
  double sign = 1.0;
  for (long k = 2; k < 64; ++k) {
    double t = sign * double(k - 1) / kfact * xk;
    total += t;
    if (std::abs(t) < 1e-19 * std::abs(total)) break;
    xk *= x;
    kfact *= double(k + 1);
    sign = -sign;
  }
  return total;
}

}  // namespace detail

// log of mu_n(U x Y | X x V_m) for U = (1, inf), V_m = [0, 1/m):
//   Phi-bar(sqrt(n)) * [1 - e^{-x}(1+x)] / [1 - e^{-x}],  x = n/m.
inline double counterexample_log_ratio(long n, long m) {
  if (n < 1) throw argument_error("counterexample_log_ratio: n must be >= 1");
  if (m < n)
    throw argument_error("counterexample_log_ratio: m = " + std::to_string(m) +
                         " is below n = " + std::to_string(n) + ", outside the computed regime");
  double x = double(n) / double(m);
  double num = detail::one_minus_exp_linear(x);
  double den = -std::expm1(-x);
  return normal_tail_log(std::sqrt(double(n))) + std::log(num) - std::log(den);
}

inline double counterexample_ratio(long n, long m) { return std::exp(counterexample_log_ratio(n, m)); }

// The display bound (n/m) * Phi-bar(sqrt(n)) that the ratio never exceeds.
inline double counterexample_bound(long n, long m) {
  if (n < 1 || m < n) throw argument_error("counterexample_bound: need m >= n >= 1");
  return (double(n) / double(m)) * normal_upper_tail(std::sqrt(double(n)));
}

}  // namespace condldp
