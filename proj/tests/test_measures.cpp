#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "condldp/logdomain.hpp"
#include "condldp/measures.hpp"
#include "condldp/rational.hpp"
#include "condldp/sampling.hpp"

using namespace condldp;

namespace {
const Alphabet R2 = Alphabet::numbered("r", 2);
const Alphabet S2 = Alphabet::numbered("s", 2);
}  // namespace

TEST_CASE("distribution construction validates the weight vector", "[measures]") {
  CHECK_THROWS_AS(Dist(R2, {0.5, -0.5}), argument_error);
  CHECK_THROWS_AS(Dist(R2, {0.6, 0.6}), argument_error);
  CHECK_THROWS_AS(Dist(R2, {0.5}), argument_error);

  // A deficit within 1e-12 is renormalized, not rejected.
  Dist d(R2, {0.5, 0.5 - 4e-13});
  CHECK(d[0] + d[1] == 1.0);

  // Exact mode has no tolerance to lean on.
  CHECK_THROWS_AS(RationalDist(R2, {Rational(1, 2), Rational(1, 3)}), argument_error);
  RationalDist ok(R2, {Rational(1, 2), Rational(1, 2)});
  CHECK(ok[0] == Rational(1, 2));
}

TEST_CASE("point mass and uniform helpers", "[measures]") {
  Dist p = Dist::point_mass(R2, 1);
  CHECK(p[0] == 0.0);
  CHECK(p[1] == 1.0);
  Dist u = Dist::uniform(R2);
  CHECK(u[0] == Catch::Approx(0.5));
}

TEST_CASE("relative entropy basics and a pinned value", "[measures]") {
  Dist xi(R2, {0.75, 0.25});
  Dist lam(R2, {0.5, 0.5});
  // 0.75 log 1.5 + 0.25 log 0.5, evaluated independently to 60 digits.
  CHECK(relative_entropy(xi, lam) == Catch::Approx(0.13081203594113695913).epsilon(1e-15));

  CHECK(relative_entropy(lam, lam) == 0.0);
  CHECK(relative_entropy(Dist::point_mass(R2, 0), Dist::point_mass(R2, 1)) == pos_infinity);
  // 0 log 0 = 0: a zero coordinate in xi costs nothing.
  CHECK(std::isfinite(relative_entropy(Dist::point_mass(R2, 0), lam)));
}

TEST_CASE("relative entropy is nonnegative and vanishes only on the diagonal", "[measures]") {
  SeededSampler rng(default_seed);
  const Alphabet A = Alphabet::numbered("a", 4);
  for (int i = 0; i < 100; ++i) {
    Dist xi = rng.dist(A);
    Dist lam = rng.dist(A, 1e-3);
    double h = relative_entropy(xi, lam);
    CHECK(h >= 0.0);
    CHECK(relative_entropy(xi, xi) == 0.0);
    if (h == 0.0) CHECK(prohorov_distance(xi, lam) < 1e-7);
  }
}

TEST_CASE("prohorov distance is the half-L1 metric", "[measures]") {
  Dist a(R2, {0.6, 0.4}), b(R2, {0.5, 0.5});
  CHECK(prohorov_distance(a, b) == Catch::Approx(0.1));
  CHECK(prohorov_distance(a, a) == 0.0);

  SeededSampler rng(default_seed + 1);
  const Alphabet A = Alphabet::numbered("a", 5);
  for (int i = 0; i < 50; ++i) {
    Dist x = rng.dist(A), y = rng.dist(A), z = rng.dist(A);
    double xy = prohorov_distance(x, y);
    CHECK(xy == prohorov_distance(y, x));
    CHECK(xy <= prohorov_distance(x, z) + prohorov_distance(z, y) + 1e-15);
    double max_gap = 0.0;
    for (std::size_t k = 0; k < A.size(); ++k) max_gap = std::max(max_gap, std::abs(x[k] - y[k]));
    CHECK(xy <= double(A.size()) * max_gap + 1e-15);
  }
}

TEST_CASE("conditional kernel extraction and reassembly", "[measures]") {
  JointDist lam(R2, S2, {0.4, 0.1, 0.1, 0.4});
  Kernel theta = conditional_theta(lam);
  CHECK(theta.row(0)[0] == Catch::Approx(0.8));
  CHECK(theta.row(1)[0] == Catch::Approx(0.2));

  JointDist back = join_margin_with_kernel(lam.col_marginal(), theta);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t s = 0; s < 2; ++s) CHECK(std::abs(back.at(r, s) - lam.at(r, s)) <= 1e-15);

  // Exact mode: reassembly is an identity, not an approximation.
  RationalJointDist rlam(R2, S2,
                         {Rational(2, 5), Rational(1, 10), Rational(1, 10), Rational(2, 5)});
  RationalJointDist rback = join_margin_with_kernel(rlam.col_marginal(), conditional_theta(rlam));
  CHECK(rback == rlam);

  JointDist dead_col(R2, S2, {0.5, 0.0, 0.5, 0.0});
  CHECK_THROWS_WITH(conditional_theta(dead_col), Catch::Matchers::ContainsSubstring("s2"));
}

TEST_CASE("entropy chain rule across the column disintegration", "[measures]") {
  SeededSampler rng(default_seed + 2);
  const Alphabet R3 = Alphabet::numbered("r", 3);
  for (int i = 0; i < 25; ++i) {
    JointDist xi = rng.joint(R3, S2, 1e-3);
    JointDist lam = rng.joint(R3, S2, 1e-3);
    Kernel theta_xi = conditional_theta(xi);
    Kernel theta_lam = conditional_theta(lam);
    Dist xs = xi.col_marginal();
    double rhs = relative_entropy(xs, lam.col_marginal());
    for (std::size_t s = 0; s < 2; ++s) rhs += xs[s] * relative_entropy(theta_xi.row(s), theta_lam.row(s));
    CHECK(relative_entropy(xi, lam) == Catch::Approx(rhs).margin(1e-12));
  }
}

TEST_CASE("product joint has the factor marginals", "[measures]") {
  SeededSampler rng(default_seed + 3);
  Dist rho = rng.dist(R2), sigma = rng.dist(S2);
  JointDist prod = product_joint(rho, sigma);
  CHECK(prohorov_distance(prod.row_marginal(), rho) <= 1e-15);
  CHECK(prohorov_distance(prod.col_marginal(), sigma) <= 1e-15);
  CHECK(relative_entropy(prod, prod) == 0.0);
}

TEST_CASE("log-sum-exp stays within its bracketing bounds", "[logdomain]") {
  SeededSampler rng(default_seed + 4);
  for (int i = 0; i < 50; ++i) {
    std::size_t k = static_cast<std::size_t>(rng.uniform_int(1, 12));
    std::vector<double> v(k);
    for (double& x : v) x = rng.uniform(-700.0, 700.0);
    double m = *std::max_element(v.begin(), v.end());
    double ls = log_sum(v);
    CHECK(ls >= m);
    CHECK(ls <= m + std::log(double(k)) + 1e-12);

    // The streaming accumulator agrees with the batch form in any feed order.
    LogSumAccumulator up, down;
    std::vector<double> sorted(v);
    std::sort(sorted.begin(), sorted.end());
    for (double x : sorted) up.add(x);
    for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) down.add(*it);
    CHECK(up.log_total() == Catch::Approx(ls).margin(1e-12));
    CHECK(down.log_total() == Catch::Approx(ls).margin(1e-12));
  }
  LogSumAccumulator empty;
  CHECK(empty.log_total() == neg_infinity);
}
