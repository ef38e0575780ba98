#pragma once

// Rate functions. The central object is the coupling value
//   J(rho, sigma) = inf { H(xi | lambda) : xi has margins (rho, sigma) },
// computed by iterative proportional fitting over the transportation polytope,
// and the conditional rate
//   I(phi) = J(phi, psi) - inf { H(xi | lambda) : xi has column margin psi },
// where the subtracted term collapses to H(psi | lambda_S) by the chain rule.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "condldp/errors.hpp"
#include "condldp/logdomain.hpp"
#include "condldp/measures.hpp"

namespace condldp {

struct RateResult {
  double value = pos_infinity;
  std::optional<JointDist> minimizer;
  double margin_residual = pos_infinity;  // sup-norm gap between achieved and requested margins
  long iterations = 0;
  bool converged = false;
};

namespace detail {

// Transportation feasibility on the support graph: does any coupling with
// margins (rho, sigma) live inside the support of lambda? Decided by max-flow
// (Edmonds-Karp) from a source feeding the rows to a sink draining the
// columns; feasible iff the full unit of mass gets through.
inline bool transport_feasible(const std::vector<double>& rho, const std::vector<double>& sigma,
                               const std::vector<char>& support, std::size_t R, std::size_t S) {
  const std::size_t V = R + S + 2, src = 0, snk = R + S + 1;
  std::vector<double> cap(V * V, 0.0);
  for (std::size_t r = 0; r < R; ++r) cap[src * V + (1 + r)] = rho[r];
  for (std::size_t s = 0; s < S; ++s) cap[(1 + R + s) * V + snk] = sigma[s];
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t s = 0; s < S; ++s)
      if (support[r * S + s]) cap[(1 + r) * V + (1 + R + s)] = 2.0;  // effectively unbounded

  double flow = 0.0;
  for (;;) {
    std::vector<int> parent(V, -1);
    parent[src] = int(src);
    std::queue<std::size_t> q;
    q.push(src);
    while (!q.empty() && parent[snk] < 0) {
      std::size_t u = q.front();
      q.pop();
      for (std::size_t v = 0; v < V; ++v)
        if (parent[v] < 0 && cap[u * V + v] > 1e-15) {
          parent[v] = int(u);
          q.push(v);
        }
    }
    if (parent[snk] < 0) break;
    double push = pos_infinity;
    for (std::size_t v = snk; v != src;) {
      std::size_t u = std::size_t(parent[v]);
      push = std::min(push, cap[u * V + v]);
      v = u;
    }
    for (std::size_t v = snk; v != src;) {
      std::size_t u = std::size_t(parent[v]);
      cap[u * V + v] -= push;
      cap[v * V + u] += push;
      v = u;
    }
    flow += push;
  }
  return flow >= 1.0 - 1e-9;
}

}  // namespace detail

inline bool coupling_exists(const JointDist& lambda, const Dist& rho, const Dist& sigma) {
  if (rho.alphabet() != lambda.row_alphabet())
    throw argument_error("coupling_exists: rho alphabet differs from lambda rows");
  if (sigma.alphabet() != lambda.col_alphabet())
    throw argument_error("coupling_exists: sigma alphabet differs from lambda columns");
  const std::size_t R = lambda.num_rows(), S = lambda.num_cols();
  std::vector<char> support(R * S);
  for (std::size_t i = 0; i < R * S; ++i) support[i] = lambda.weights()[i] > 0.0 ? 1 : 0;
  return detail::transport_feasible(rho.weights(), sigma.weights(), support, R, S);
}

struct ProjectionOptions {
  double tol = 1e-12;       // sup-norm margin residual at which to stop
  long max_iterations = 100000;
};

// I-projection of lambda onto the couplings with margins (rho, sigma):
// alternate exact row scaling and exact column scaling. Cells where lambda
// vanishes stay at zero forever, so the iterate's support never grows.
// Infeasible margin pairs (decided up front by max-flow) yield value
// +infinity with no minimizer — a legitimate answer, not an error.
inline RateResult i_projection(const JointDist& lambda, const Dist& rho, const Dist& sigma,
                               const ProjectionOptions& opt = {}) {
  if (!coupling_exists(lambda, rho, sigma)) {
    RateResult r;
    r.value = pos_infinity;
    r.converged = true;
    return r;
  }
  const std::size_t R = lambda.num_rows(), S = lambda.num_cols();
  std::vector<double> x(lambda.weights());
  const std::vector<double>& rw = rho.weights();
  const std::vector<double>& cw = sigma.weights();

  auto residual = [&]() {
    double worst = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      double m = 0.0;
      for (std::size_t s = 0; s < S; ++s) m += x[r * S + s];
      worst = std::max(worst, std::abs(m - rw[r]));
    }
    for (std::size_t s = 0; s < S; ++s) {
      double m = 0.0;
      for (std::size_t r = 0; r < R; ++r) m += x[r * S + s];
      worst = std::max(worst, std::abs(m - cw[s]));
    }
    return worst;
  };

  RateResult out;
  double res = residual();
  long it = 0;
  while (res > opt.tol && it < opt.max_iterations) {
    ++it;
    for (std::size_t r = 0; r < R; ++r) {
      double m = 0.0;
      for (std::size_t s = 0; s < S; ++s) m += x[r * S + s];
      double scale = m > 0.0 ? rw[r] / m : 0.0;
      for (std::size_t s = 0; s < S; ++s) x[r * S + s] *= scale;
    }
    for (std::size_t s = 0; s < S; ++s) {
      double m = 0.0;
      for (std::size_t r = 0; r < R; ++r) m += x[r * S + s];
      double scale = m > 0.0 ? cw[s] / m : 0.0;
      for (std::size_t r = 0; r < R; ++r) x[r * S + s] *= scale;
    }
    res = residual();
  }
  out.iterations = it;
  out.margin_residual = res;
  out.converged = res <= opt.tol;
  // Renormalize the dust so the iterate is a bona fide distribution.
  double total = 0.0;
  for (double v : x) total += v;
  if (total > 0.0)
    for (double& v : x) v /= total;
  JointDist xi(lambda.row_alphabet(), lambda.col_alphabet(), x);
  out.value = relative_entropy(xi, lambda);
  out.minimizer = std::move(xi);
  return out;
}

// inf { H(xi | lambda) : column margin of xi equals psi }. By the chain rule
// H(xi|lambda) = H(psi|lambda_S) + sum_s psi_s * H(xi(.|s) | theta(s,.)),
// so the infimum is H(psi | lambda_S), attained by gluing psi to the
// conditional rows of lambda — equivalently, scaling each column of lambda to
// mass psi_s in a single pass.
inline RateResult inf_over_s_margin(const JointDist& lambda, const Dist& psi) {
  if (psi.alphabet() != lambda.col_alphabet())
    throw argument_error("inf_over_s_margin: psi alphabet differs from lambda columns");
  if (!lambda.every_column_positive())
    throw argument_error("inf_over_s_margin: lambda has a zero column");
  RateResult out;
  out.value = relative_entropy(psi, lambda.col_marginal());
  JointDist glued = join_margin_with_kernel(psi, conditional_theta(lambda));
  const std::size_t S = lambda.num_cols();
  double worst = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    double m = 0.0;
    for (std::size_t r = 0; r < lambda.num_rows(); ++r) m += glued.at(r, s);
    worst = std::max(worst, std::abs(m - psi[s]));
  }
  out.margin_residual = worst;
  out.minimizer = std::move(glued);
  out.iterations = 1;
  out.converged = true;
  return out;
}

// Conditional rate function I(phi) = J(phi, psi) - H(psi | lambda_S).
inline RateResult rate_I(const JointDist& lambda, const Dist& psi, const Dist& phi,
                         const ProjectionOptions& opt = {}) {
  RateResult j = i_projection(lambda, phi, psi, opt);
  double base = inf_over_s_margin(lambda, psi).value;
  RateResult out = j;
  if (j.value != pos_infinity) {
    out.value = j.value - base;
    if (out.value < 0.0 && out.value > -1e-12) out.value = 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subsets of the simplex, with enough structure to answer membership for the
// set itself, its closure, and its interior. Total-variation balls are open;
// their complements (and complements of finite unions) are closed.

enum class HalfspaceRelation { at_least, greater_than, at_most, less_than };

class SetDescriptor {
 public:
  enum class Kind { tv_ball, complement_of_tv_balls, coordinate_halfspace, predicate };

  static SetDescriptor tv_ball(Dist center, double radius) {
    if (!(radius > 0.0)) throw argument_error("tv_ball: radius must be positive");
    SetDescriptor d;
    d.kind_ = Kind::tv_ball;
    d.centers_.push_back(std::move(center));
    d.radius_ = radius;
    return d;
  }

  static SetDescriptor complement_of_tv_balls(std::vector<Dist> centers, double radius) {
    if (centers.empty()) throw argument_error("complement_of_tv_balls: no centers given");
    if (!(radius > 0.0)) throw argument_error("complement_of_tv_balls: radius must be positive");
    SetDescriptor d;
    d.kind_ = Kind::complement_of_tv_balls;
    d.centers_ = std::move(centers);
    d.radius_ = radius;
    return d;
  }

  static SetDescriptor coordinate_halfspace(const Alphabet& alphabet, const std::string& label,
                                            HalfspaceRelation rel, double threshold) {
    SetDescriptor d;
    d.kind_ = Kind::coordinate_halfspace;
    d.coord_ = alphabet.index_of(label);
    d.relation_ = rel;
    d.threshold_ = threshold;
    return d;
  }

  static SetDescriptor predicate(std::function<bool(const Dist&)> fn) {
    SetDescriptor d;
    d.kind_ = Kind::predicate;
    d.fn_ = std::move(fn);
    return d;
  }

  Kind kind() const { return kind_; }

  bool contains(const Dist& p) const {
    switch (kind_) {
      case Kind::tv_ball:
        return prohorov_distance(p, centers_[0]) < radius_;
      case Kind::complement_of_tv_balls:
        for (const Dist& c : centers_)
          if (prohorov_distance(p, c) < radius_) return false;
        return true;
      case Kind::coordinate_halfspace:
        return compare(p[coord_], relation_, threshold_);
      case Kind::predicate:
        return fn_(p);
    }
    return false;
  }

  bool closure_contains(const Dist& p) const {
    switch (kind_) {
      case Kind::tv_ball:
        return prohorov_distance(p, centers_[0]) <= radius_;
      case Kind::complement_of_tv_balls:
        return contains(p);  // already closed
      case Kind::coordinate_halfspace:
        return compare(p[coord_], relax(relation_), threshold_);
      case Kind::predicate:
        return fn_(p);  // opaque sets are treated as clopen
    }
    return false;
  }

  bool interior_contains(const Dist& p) const {
    switch (kind_) {
      case Kind::tv_ball:
        return contains(p);  // already open
      case Kind::complement_of_tv_balls:
        for (const Dist& c : centers_)
          if (prohorov_distance(p, c) <= radius_) return false;
        return true;
      case Kind::coordinate_halfspace:
        return compare(p[coord_], tighten(relation_), threshold_);
      case Kind::predicate:
        return fn_(p);
    }
    return false;
  }

 private:
  static bool compare(double v, HalfspaceRelation rel, double t) {
    switch (rel) {
      case HalfspaceRelation::at_least: return v >= t;
      case HalfspaceRelation::greater_than: return v > t;
      case HalfspaceRelation::at_most: return v <= t;
      case HalfspaceRelation::less_than: return v < t;
    }
    return false;
  }
  static HalfspaceRelation relax(HalfspaceRelation rel) {
    if (rel == HalfspaceRelation::greater_than) return HalfspaceRelation::at_least;
    if (rel == HalfspaceRelation::less_than) return HalfspaceRelation::at_most;
    return rel;
  }
  static HalfspaceRelation tighten(HalfspaceRelation rel) {
    if (rel == HalfspaceRelation::at_least) return HalfspaceRelation::greater_than;
    if (rel == HalfspaceRelation::at_most) return HalfspaceRelation::less_than;
    return rel;
  }

  Kind kind_ = Kind::predicate;
  std::vector<Dist> centers_;
  double radius_ = 0.0;
  std::size_t coord_ = 0;
  HalfspaceRelation relation_ = HalfspaceRelation::at_least;
  double threshold_ = 0.0;
  std::function<bool(const Dist&)> fn_;
};

enum class SetVariant { as_given, closure, interior };

struct SetRateResult {
  double value = pos_infinity;
  std::optional<Dist> argmin;
  long evaluations = 0;
};

struct SetMinimizationOptions {
  long line_grid = 2001;    // membership scan resolution on a binary simplex
  long simplex_grid = 48;   // composition denominator for 3+ categories
  int refine_rounds = 60;
  ProjectionOptions projection;
};

namespace detail {

inline bool member(const SetDescriptor& set, SetVariant variant, const Dist& p) {
  switch (variant) {
    case SetVariant::as_given: return set.contains(p);
    case SetVariant::closure: return set.closure_contains(p);
    case SetVariant::interior: return set.interior_contains(p);
  }
  return false;
}

}  // namespace detail

// inf over phi in the set (or its closure / interior) of I(phi), with
// I(phi) = J(phi, psi) - H(psi | lambda_S).
//
// Two categories: the simplex is a segment, membership decomposes into
// intervals (boundaries pinned down by bisection), and I is convex along the
// segment because J is jointly convex — golden-section per interval is exact
// up to floating point. Since I is continuous under a full-support lambda, the
// infimum over an open interval equals the minimum over its closed hull, which
// is what gets computed. Three or more categories: coarse simplex grid plus
// coordinate-pair pattern descent; adequate for the gallery scans, and flagged
// by `evaluations` so callers can tell how hard it worked.
inline SetRateResult inf_rate_over_set(const JointDist& lambda, const Dist& psi, const SetDescriptor& set,
                                       SetVariant variant = SetVariant::as_given,
                                       const SetMinimizationOptions& opt = {}) {
  const Alphabet& ra = lambda.row_alphabet();
  const std::size_t R = ra.size();
  SetRateResult out;
  double base = inf_over_s_margin(lambda, psi).value;

  auto eval = [&](const Dist& phi) {
    ++out.evaluations;
    RateResult j = i_projection(lambda, phi, psi, opt.projection);
    if (j.value == pos_infinity) return pos_infinity;
    double v = j.value - base;
    return v < 0.0 && v > -1e-12 ? 0.0 : v;
  };
  auto consider = [&](const Dist& phi) {
    double v = eval(phi);
    if (v < out.value) {
      out.value = v;
      out.argmin = phi;
    }
  };

  if (R == 2) {
    auto at = [&](double t) { return Dist(ra, {t, 1.0 - t}); };
    auto in_set = [&](double t) { return detail::member(set, variant, at(t)); };

    const long G = std::max<long>(opt.line_grid, 3);
    std::vector<char> hit(G);
    for (long i = 0; i < G; ++i) hit[i] = in_set(double(i) / double(G - 1)) ? 1 : 0;

    auto boundary = [&](double lo, double hi) {
      // in_set differs at lo and hi; shrink to the crossing.
      bool lo_in = in_set(lo);
      for (int k = 0; k < 80; ++k) {
        double mid = 0.5 * (lo + hi);
        if (in_set(mid) == lo_in)
          lo = mid;
        else
          hi = mid;
      }
      return 0.5 * (lo + hi);
    };

    long i = 0;
    while (i < G) {
      if (!hit[i]) {
        ++i;
        continue;
      }
      long j = i;
      while (j + 1 < G && hit[j + 1]) ++j;
      double a = double(i) / double(G - 1), b = double(j) / double(G - 1);
      if (i > 0) a = boundary(double(i - 1) / double(G - 1), a);
      if (j + 1 < G) b = boundary(b, double(j + 1) / double(G - 1));
      // Convexity of t -> I(phi(t)) makes golden-section exact here.
      const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
      double lo = a, hi = b;
      double c1 = hi - gr * (hi - lo), c2 = lo + gr * (hi - lo);
      double f1 = eval(at(c1)), f2 = eval(at(c2));
      for (int k = 0; k < 200 && hi - lo > 1e-13; ++k) {
        if (f1 <= f2) {
          hi = c2;
          c2 = c1;
          f2 = f1;
          c1 = hi - gr * (hi - lo);
          f1 = eval(at(c1));
        } else {
          lo = c1;
          c1 = c2;
          f1 = f2;
          c2 = lo + gr * (hi - lo);
          f2 = eval(at(c2));
        }
      }
      consider(at(0.5 * (lo + hi)));
      consider(at(a));
      consider(at(b));
      i = j + 1;
    }
    return out;
  }

  // Three or more categories: seed from a coarse simplex grid, then polish the
  // best seeds with exact line searches along the transfer directions
  // e_i - e_j. Membership along such a segment is a finite union of intervals
  // for every descriptor kind, and t -> I(phi + t(e_i - e_j)) is convex, so
  // each interval surrenders its minimum to golden section exactly as in the
  // two-category case. Keeping several seeds guards against the nonconvex
  // feasible sets (ball complements) whose boundary carries local minima.
  const long m = std::max<long>(opt.simplex_grid, R > 3 ? 24 : 32);
  struct GridSeed {
    double v;
    std::vector<double> w;
  };
  std::vector<GridSeed> seeds;
  const std::size_t max_seeds = 6;
  std::vector<long> comp(R);
  std::function<void(std::size_t, long)> walk = [&](std::size_t idx, long left) {
    if (idx == R - 1) {
      comp[idx] = left;
      std::vector<double> w(R);
      for (std::size_t q = 0; q < R; ++q) w[q] = double(comp[q]) / double(m);
      Dist phi(ra, w);
      if (!detail::member(set, variant, phi)) return;
      double v = eval(phi);
      seeds.push_back(GridSeed{v, std::move(w)});
      std::sort(seeds.begin(), seeds.end(),
                [](const GridSeed& a, const GridSeed& b) { return a.v < b.v; });
      if (seeds.size() > max_seeds) seeds.pop_back();
      return;
    }
    for (long c = left; c >= 0; --c) {
      comp[idx] = c;
      walk(idx + 1, left - c);
    }
  };
  walk(0, m);
  if (seeds.empty()) return out;  // set misses the whole grid

  auto line_minimum = [&](std::vector<double>& w, double& v, std::size_t i, std::size_t j) {
    const double lo_t = -w[i], hi_t = w[j];
    if (!(hi_t - lo_t > 1e-13)) return false;
    auto at = [&](double t) {
      std::vector<double> p = w;
      p[i] += t;
      p[j] -= t;
      if (p[i] < 0.0) p[i] = 0.0;  // rounding dust at the segment ends
      if (p[j] < 0.0) p[j] = 0.0;
      return Dist(ra, p);
    };
    auto in_set = [&](double t) { return detail::member(set, variant, at(t)); };
    const long G = 65;
    std::vector<char> hit(G);
    auto t_of = [&](long g) { return lo_t + (hi_t - lo_t) * double(g) / double(G - 1); };
    for (long g = 0; g < G; ++g) hit[g] = in_set(t_of(g)) ? 1 : 0;
    auto boundary = [&](double lo, double hi) {
      bool lo_in = in_set(lo);
      for (int k = 0; k < 80; ++k) {
        double mid = 0.5 * (lo + hi);
        if (in_set(mid) == lo_in)
          lo = mid;
        else
          hi = mid;
      }
      return 0.5 * (lo + hi);
    };
    double cand_v = v;
    double cand_t = 0.0;
    auto offer = [&](double t) {
      double fv = eval(at(t));
      if (fv < cand_v) {
        cand_v = fv;
        cand_t = t;
      }
    };
    long g = 0;
    while (g < G) {
      if (!hit[g]) {
        ++g;
        continue;
      }
      long g2 = g;
      while (g2 + 1 < G && hit[g2 + 1]) ++g2;
      double a = t_of(g), b = t_of(g2);
      if (g > 0) a = boundary(t_of(g - 1), a);
      if (g2 + 1 < G) b = boundary(b, t_of(g2 + 1));
      const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
      double lo = a, hi = b;
      double c1 = hi - gr * (hi - lo), c2 = lo + gr * (hi - lo);
      double f1 = eval(at(c1)), f2 = eval(at(c2));
      for (int k = 0; k < 120 && hi - lo > 1e-12; ++k) {
        if (f1 <= f2) {
          hi = c2;
          c2 = c1;
          f2 = f1;
          c1 = hi - gr * (hi - lo);
          f1 = eval(at(c1));
        } else {
          lo = c1;
          c1 = c2;
          f1 = f2;
          c2 = lo + gr * (hi - lo);
          f2 = eval(at(c2));
        }
      }
      offer(0.5 * (lo + hi));
      offer(a);
      offer(b);
      g = g2 + 1;
    }
    if (cand_v < v - 1e-15) {
      w = at(cand_t).weights();
      v = cand_v;
      return true;
    }
    return false;
  };

  double best_v = pos_infinity;
  std::vector<double> best;
  for (GridSeed& sd : seeds) {
    std::vector<double> w = std::move(sd.w);
    double v = sd.v;
    for (int round = 0; round < opt.refine_rounds; ++round) {
      bool moved = false;
      for (std::size_t i = 0; i < R; ++i)
        for (std::size_t j = i + 1; j < R; ++j)
          if (line_minimum(w, v, i, j)) moved = true;
      if (!moved) break;
    }
    if (v < best_v) {
      best_v = v;
      best = std::move(w);
    }
  }
  out.value = best_v;
  out.argmin = Dist(ra, best);
  return out;
}

}  // namespace condldp
