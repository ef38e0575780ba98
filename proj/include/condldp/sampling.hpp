#pragma once

// Deterministic instance generation shared by the test suites and the CLI
// verify command: mt19937_64 driven through fixed arithmetic only (no
// standard-library distributions, whose streams vary across implementations),
// so a seed pins the exact same instances everywhere.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "condldp/errors.hpp"
#include "condldp/measures.hpp"

namespace condldp {

inline constexpr std::uint64_t default_seed = 1729;

class SeededSampler {
 public:
  explicit SeededSampler(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0, 1) with the full 53-bit mantissa.
  double uniform01() { return double(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [lo, hi]; modulo reduction keeps the stream exactly
  // reproducible (any bias at these ranges is irrelevant to test generation).
  long uniform_int(long lo, long hi) {
    if (hi < lo) throw argument_error("uniform_int: empty range");
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<long>(gen_() % span);
  }

  // Flat Dirichlet point on the k-simplex via exponential spacings, with an
  // optional per-coordinate floor (floor * k must stay below 1) to force full
  // support.
  std::vector<double> simplex_point(std::size_t k, double floor_mass = 0.0) {
    if (k == 0) throw argument_error("simplex_point: k must be positive");
    if (!(floor_mass >= 0.0) || floor_mass * double(k) >= 1.0)
      throw argument_error("simplex_point: floor too large for the simplex");
    std::vector<double> w(k);
    double total = 0.0;
    for (double& v : w) {
      double u = uniform01();
      if (u <= 0.0) u = 0x1.0p-53;
      v = -std::log(u);
      total += v;
    }
    double scale = (1.0 - floor_mass * double(k)) / total;
    for (double& v : w) v = floor_mass + v * scale;
    return w;
  }

  Dist dist(const Alphabet& alphabet, double floor_mass = 0.0) {
    return Dist(alphabet, simplex_point(alphabet.size(), floor_mass));
  }

  JointDist joint(const Alphabet& rows, const Alphabet& cols, double floor_mass = 0.0) {
    return JointDist(rows, cols, simplex_point(rows.size() * cols.size(), floor_mass));
  }

  // A joint distribution supported exactly where `base` is (used for xi << lambda).
  JointDist joint_on_support(const JointDist& base) {
    std::vector<double> w(base.cell_count(), 0.0);
    std::size_t live = 0;
    for (double v : base.weights())
      if (v > 0.0) ++live;
    if (live == 0) throw argument_error("joint_on_support: base has empty support");
    std::vector<double> point = simplex_point(live);
    std::size_t j = 0;
    for (std::size_t i = 0; i < w.size(); ++i)
      if (base.weights()[i] > 0.0) w[i] = point[j++];
    return JointDist(base.row_alphabet(), base.col_alphabet(), w);
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace condldp
