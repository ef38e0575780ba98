#pragma once

// JSON wire formats. Distributions travel as {"alphabet": [...], "weights":
// [...]}, joint matrices as {"rows": [...], "cols": [...], "matrix": [[...]]}
// (row-major), empirical measures carry an extra integer denominator. In
// exact mode, weights are decimal strings ("0.4") or fractions ("2/5") so no
// precision is lost in transit; bare integers are accepted too.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "condldp/empirical.hpp"
#include "condldp/errors.hpp"
#include "condldp/measures.hpp"
#include "condldp/rate.hpp"
#include "condldp/rational.hpp"

namespace condldp {

using nlohmann::json;

// Shortest-exact decimal for CSV cells; JSON numbers go through nlohmann's
// own round-trip formatter.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

namespace detail {

inline const json& require_field(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw argument_error(where + ": missing field \"" + key + "\"");
  return *it;
}

inline std::vector<std::string> parse_labels(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw argument_error(where + ": must be a non-empty array of labels");
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) throw argument_error(where + ": labels must be strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

inline double parse_number(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    // Tolerated in double mode for symmetry with exact-mode files.
    try {
      return rational_to_double(rational_from_string(j.get<std::string>()));
    } catch (const argument_error&) {
      throw argument_error(where + ": cannot parse \"" + j.get<std::string>() + "\" as a number");
    }
  }
  throw argument_error(where + ": expected a number");
}

inline Rational parse_rational(const json& j, const std::string& where) {
  if (j.is_number_integer()) return Rational(j.get<long long>());
  if (j.is_string()) {
    try {
      return rational_from_string(j.get<std::string>());
    } catch (const argument_error&) {
      throw argument_error(where + ": cannot parse \"" + j.get<std::string>() + "\" as an exact value");
    }
  }
  if (j.is_number())
    throw argument_error(where +
                         ": exact mode needs integers or decimal strings, not floating-point literals");
  throw argument_error(where + ": expected an exact numeric value");
}

}  // namespace detail

// --- distributions -----------------------------------------------------------

inline Dist parse_dist(const json& j, const std::string& where) {
  if (!j.is_object()) throw argument_error(where + ": expected an object");
  Alphabet a(detail::parse_labels(detail::require_field(j, "alphabet", where), where + ".alphabet"));
  const json& w = detail::require_field(j, "weights", where);
  if (!w.is_array() || w.size() != a.size())
    throw argument_error(where + ".weights: expected " + std::to_string(a.size()) + " entries");
  std::vector<double> weights;
  for (std::size_t i = 0; i < w.size(); ++i)
    weights.push_back(detail::parse_number(w[i], where + ".weights[" + std::to_string(i) + "]"));
  try {
    return Dist(a, weights);
  } catch (const argument_error& e) {
    throw argument_error(where + ": " + e.what());
  }
}

inline RationalDist parse_rational_dist(const json& j, const std::string& where) {
  if (!j.is_object()) throw argument_error(where + ": expected an object");
  Alphabet a(detail::parse_labels(detail::require_field(j, "alphabet", where), where + ".alphabet"));
  const json& w = detail::require_field(j, "weights", where);
  if (!w.is_array() || w.size() != a.size())
    throw argument_error(where + ".weights: expected " + std::to_string(a.size()) + " entries");
  std::vector<Rational> weights;
  for (std::size_t i = 0; i < w.size(); ++i)
    weights.push_back(detail::parse_rational(w[i], where + ".weights[" + std::to_string(i) + "]"));
  try {
    return RationalDist(a, weights);
  } catch (const argument_error& e) {
    throw argument_error(where + ": " + e.what());
  }
}

inline json dist_to_json(const Dist& d) {
  json j;
  j["alphabet"] = d.alphabet().labels();
  j["weights"] = d.weights();
  return j;
}

inline json dist_to_json(const RationalDist& d) {
  json j;
  j["alphabet"] = d.alphabet().labels();
  json w = json::array();
  for (const Rational& v : d.weights()) w.push_back(rational_to_string(v));
  j["weights"] = std::move(w);
  return j;
}

// --- joint matrices ----------------------------------------------------------

namespace detail {

template <class T, class ParseCell>
BasicJointDist<T> parse_joint_impl(const json& j, const std::string& where, ParseCell&& cell) {
  if (!j.is_object()) throw argument_error(where + ": expected an object");
  Alphabet rows(parse_labels(require_field(j, "rows", where), where + ".rows"));
  Alphabet cols(parse_labels(require_field(j, "cols", where), where + ".cols"));
  const json& m = require_field(j, "matrix", where);
  if (!m.is_array() || m.size() != rows.size())
    throw argument_error(where + ".matrix: expected " + std::to_string(rows.size()) + " rows");
  std::vector<T> weights(rows.size() * cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const json& row = m[r];
    if (!row.is_array() || row.size() != cols.size())
      throw argument_error(where + ".matrix: row \"" + rows.label(r) + "\" must have " +
                           std::to_string(cols.size()) + " entries");
    for (std::size_t s = 0; s < cols.size(); ++s)
      weights[r * cols.size() + s] =
          cell(row[s], where + ".matrix[\"" + rows.label(r) + "\"][" + std::to_string(s) + "]");
  }
  try {
    return BasicJointDist<T>(rows, cols, weights);
  } catch (const argument_error& e) {
    // Name the row carrying the largest share of the defect so the message
    // points somewhere actionable.
    std::string detail;
    if constexpr (std::is_same_v<T, double>) {
      double worst = -1.0;
      std::size_t worst_r = 0;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        double m_r = 0.0;
        bool bad_cell = false;
        for (std::size_t s = 0; s < cols.size(); ++s) {
          double v = weights[r * cols.size() + s];
          if (!(v >= 0.0)) bad_cell = true;
          m_r += v;
        }
        double gap = bad_cell ? pos_infinity : std::abs(m_r - 1.0 / double(rows.size()));
        if (gap > worst) {
          worst = gap;
          worst_r = r;
        }
      }
      double m_r = 0.0;
      for (std::size_t s = 0; s < cols.size(); ++s) m_r += weights[worst_r * cols.size() + s];
      detail = "; row \"" + rows.label(worst_r) + "\" sums to " + format_double(m_r);
    }
    throw argument_error(where + ": " + e.what() + detail);
  }
}

}  // namespace detail

inline JointDist parse_joint(const json& j, const std::string& where) {
  return detail::parse_joint_impl<double>(
      j, where, [](const json& c, const std::string& w) { return detail::parse_number(c, w); });
}

inline RationalJointDist parse_rational_joint(const json& j, const std::string& where) {
  return detail::parse_joint_impl<Rational>(
      j, where, [](const json& c, const std::string& w) { return detail::parse_rational(c, w); });
}

inline json joint_to_json(const JointDist& d) {
  json m = json::array();
  for (std::size_t r = 0; r < d.num_rows(); ++r) {
    json row = json::array();
    for (std::size_t s = 0; s < d.num_cols(); ++s) row.push_back(d.at(r, s));
    m.push_back(std::move(row));
  }
  json j;
  j["rows"] = d.row_alphabet().labels();
  j["cols"] = d.col_alphabet().labels();
  j["matrix"] = std::move(m);
  return j;
}

inline json joint_to_json(const RationalJointDist& d) {
  json m = json::array();
  for (std::size_t r = 0; r < d.num_rows(); ++r) {
    json row = json::array();
    for (std::size_t s = 0; s < d.num_cols(); ++s) row.push_back(rational_to_string(d.at(r, s)));
    m.push_back(std::move(row));
  }
  json j;
  j["rows"] = d.row_alphabet().labels();
  j["cols"] = d.col_alphabet().labels();
  j["matrix"] = std::move(m);
  return j;
}

// --- empirical measures ------------------------------------------------------

inline EmpiricalMeasure parse_empirical(const json& j, const std::string& where) {
  if (!j.is_object()) throw argument_error(where + ": expected an object");
  Alphabet a(detail::parse_labels(detail::require_field(j, "alphabet", where), where + ".alphabet"));
  const json& nj = detail::require_field(j, "n", where);
  if (!nj.is_number_integer() || nj.get<long long>() < 1)
    throw argument_error(where + ".n: expected a positive integer");
  long n = nj.get<long>();
  const json& cj = detail::require_field(j, "counts", where);
  if (!cj.is_array() || cj.size() != a.size())
    throw argument_error(where + ".counts: expected " + std::to_string(a.size()) + " entries");
  std::vector<long> counts;
  for (const auto& e : cj) {
    if (!e.is_number_integer())
      throw argument_error(where + ".counts: entries must be integers");
    counts.push_back(e.get<long>());
  }
  try {
    return EmpiricalMeasure(a, n, counts);
  } catch (const argument_error& e) {
    throw argument_error(where + ": " + e.what());
  }
}

inline json empirical_to_json(const EmpiricalMeasure& m) {
  json j;
  j["alphabet"] = m.alphabet().labels();
  j["n"] = m.n();
  j["counts"] = m.counts();
  return j;
}

// --- simplex subsets ---------------------------------------------------------

inline SetDescriptor parse_set_descriptor(const json& j, const Alphabet& simplex_alphabet,
                                          const std::string& where) {
  if (!j.is_object()) throw argument_error(where + ": expected an object");
  std::string kind = detail::require_field(j, "kind", where).get<std::string>();
  if (kind == "tv_ball") {
    Dist center = parse_dist(detail::require_field(j, "center", where), where + ".center");
    if (center.alphabet() != simplex_alphabet)
      throw argument_error(where + ".center: alphabet differs from the ambient simplex");
    double radius = detail::parse_number(detail::require_field(j, "radius", where), where + ".radius");
    return SetDescriptor::tv_ball(std::move(center), radius);
  }
  if (kind == "complement_of_tv_balls") {
    const json& cs = detail::require_field(j, "centers", where);
    if (!cs.is_array() || cs.empty()) throw argument_error(where + ".centers: expected a non-empty array");
    std::vector<Dist> centers;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      centers.push_back(parse_dist(cs[i], where + ".centers[" + std::to_string(i) + "]"));
      if (centers.back().alphabet() != simplex_alphabet)
        throw argument_error(where + ".centers[" + std::to_string(i) +
                             "]: alphabet differs from the ambient simplex");
    }
    double radius = detail::parse_number(detail::require_field(j, "radius", where), where + ".radius");
    return SetDescriptor::complement_of_tv_balls(std::move(centers), radius);
  }
  if (kind == "halfspace") {
    std::string label = detail::require_field(j, "label", where).get<std::string>();
    std::string rel = detail::require_field(j, "relation", where).get<std::string>();
    double threshold =
        detail::parse_number(detail::require_field(j, "threshold", where), where + ".threshold");
    HalfspaceRelation r;
    if (rel == ">=")
      r = HalfspaceRelation::at_least;
    else if (rel == ">")
      r = HalfspaceRelation::greater_than;
    else if (rel == "<=")
      r = HalfspaceRelation::at_most;
    else if (rel == "<")
      r = HalfspaceRelation::less_than;
    else
      throw argument_error(where + ".relation: \"" + rel + "\" is not one of >=, >, <=, <");
    try {
      return SetDescriptor::coordinate_halfspace(simplex_alphabet, label, r, threshold);
    } catch (const argument_error& e) {
      throw argument_error(where + ": " + e.what());
    }
  }
  throw argument_error(where + ".kind: \"" + kind +
                       "\" is not one of tv_ball, complement_of_tv_balls, halfspace");
}

// --- report fingerprinting ---------------------------------------------------

// FNV-1a over the canonical (sorted-key, no-whitespace) dump: stable across
// runs and platforms with the same libc formatting, cheap, and good enough to
// tie a report back to the exact config that produced it.
inline std::string config_fingerprint(const json& config) {
  std::string dump = config.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return std::string(buf);
}

}  // namespace condldp
